#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wsn {

using NodeId = int;
using PacketId = std::int64_t;

inline constexpr NodeId kNoNode = -1;
inline constexpr NodeId kBroadcast = -1;

// Thrown for invalid configuration or topology construction.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a protocol module violates an engine precondition
// (scheduling into the past, transmitting from a sleeping radio, ...).
struct EngineBug : std::logic_error {
    explicit EngineBug(const std::string& what) : std::logic_error(what) {}
};

struct Vec2 {
    double x{0.0};
    double y{0.0};
};

inline double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

enum class NodeRole { Sink, Sensor, Target };

const char* to_string(NodeRole role);
std::optional<NodeRole> role_from_string(const std::string& s);

struct NodeRecord {
    NodeId id{0};
    Vec2 position{};
    double initial_energy{0.0};  // joules, > 0
    NodeRole role{NodeRole::Sensor};
};

enum class PacketKind { Query, Report, Reply, Control };

const char* to_string(PacketKind kind);

// Protocol payloads. These model logical header fields; the modeled byte
// size of a packet is always size_bytes regardless of payload contents.
struct QueryRayTask {
    int ray_index{0};
    NodeId next_hop{kNoNode};            // kNoNode: corridor ends at sender
    std::vector<NodeId> path;            // sink .. transmitting node, inclusive
};

struct QueryPayload {
    int search_id{0};
    int round{0};
    int ray_count{0};
    bool flood_round{false};             // flooding fallback round
    std::vector<NodeId> flood_path;      // hop trace when flood_round
    std::vector<QueryRayTask> rays;
};

struct ReplyPayload {
    int search_id{0};
    int round{0};
    std::vector<NodeId> reverse_path;    // remaining hops, sink last
};

struct ReportPayload {
    std::int64_t sequence{0};
};

struct FrequencyPayload {
    double reports_per_second{0.0};
};

struct TreeBeaconPayload {
    int depth{0};
};

struct SlotAckPayload {
    PacketId acked{0};
};

using PacketMeta = std::variant<std::monostate, QueryPayload, ReplyPayload, ReportPayload,
                                FrequencyPayload, TreeBeaconPayload, SlotAckPayload>;

struct Packet {
    PacketId id{0};                      // globally unique per original packet; copies share it
    PacketKind kind{PacketKind::Report};
    NodeId src{0};
    double created_at{0.0};
    int size_bytes{0};
    int hop_count{0};                    // +1 per forwarding
    std::optional<int> ray_id;
    bool congestion_bit{false};
    NodeId dest{kBroadcast};             // logical destination; physical medium is broadcast
    PacketMeta meta{};
};

}  // namespace wsn
