#pragma once

#include <map>
#include <set>

#include "wsn/mac.hpp"
#include "wsn/simulator.hpp"

namespace wsn {

// Generic flooding: every node forwards each newly seen packet to all
// radio-range neighbors, with per-node duplicate suppression. Broadcast is one
// transmission heard by all awake in-range neighbors.
class Flooding {
  public:
    enum class SendMode {
        Buffered,   // forwards go through the node FIFO and the CSMA service
        Immediate,  // admission check against the FIFO capacity, then direct CSMA
    };

    struct FloodStats {
        std::int64_t transmissions{0};
        std::int64_t receptions{0};
        std::set<NodeId> receivers;
    };

    Flooding(Simulator& sim, SendMode mode, CsmaService* service);

    // Source broadcast; the flood then proceeds through handle_flood_packet.
    void start_flood(NodeId source, Packet packet);

    // Delivery entry point; returns true when the packet was new here and got
    // queued for forwarding.
    bool handle_flood_packet(NodeId node, const Packet& packet, NodeId from);

    // fires on every flood delivery, duplicates included
    std::function<void(NodeId receiver, const Packet&, NodeId from, bool first)> tap;

    const FloodStats& stats(PacketId flood) const;
    bool owns(PacketId id) const { return stats_.count(id) != 0; }
    void note_transmission(const Packet& packet);  // wired to the service's on_sent

  private:
    Simulator& sim_;
    SendMode mode_;
    CsmaService* service_;
    std::map<PacketId, FloodStats> stats_;

    void forward(NodeId node, Packet packet);
};

}  // namespace wsn
