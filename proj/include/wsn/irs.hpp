#pragma once

#include <functional>
#include <map>
#include <set>
#include <unordered_set>

#include "wsn/flooding.hpp"
#include "wsn/mac.hpp"
#include "wsn/simulator.hpp"
#include "wsn/topology.hpp"

namespace wsn {

struct Ray {
    int index{0};
    double angle{0.0};           // radians in [0, 2pi)
    double corridor_width{0.0};  // meters
};

// k rays with equally spaced angles i*2pi/k; ray 0 at angle 0.
std::vector<Ray> spawn_rays(int k, double corridor_width);

struct Escalation {
    int k{0};
    bool flood_fallback{false};  // signalled when already at k_max
};

// Doubles the ray count, capped at k_max; at the cap the next escalation is
// the flooding fallback.
Escalation increase_rays(int k, int k_max);

// Greedy forwarding along a ray emanating from the sink: among alive neighbors
// within corridor_width/2 of the ray line whose projection strictly exceeds
// the current node's, pick the max projection; ties go to the lowest id.
std::optional<NodeId> next_hop_on_ray(const Topology& topology, NodeId current, const Ray& ray,
                                      const std::unordered_set<NodeId>& seen,
                                      const std::function<bool(NodeId)>& alive = {});

// Nodes within corridor_width/2 of any of the rays (forward half-plane only).
std::vector<NodeId> corridor_members(const Topology& topology, const std::vector<Ray>& rays);

struct SearchResult {
    bool found{false};
    int rounds{0};  // rounds run, the successful one included
    std::optional<double> latency_sink;
    std::optional<double> latency_target;
    double energy{0.0};  // network-wide joules over the search
    std::int64_t transmissions{0};
    std::int64_t max_round_transmissions{0};
    int final_ray_count{0};
    bool used_flood_fallback{false};
    double issued_at{0.0};
};

// Increasing Ray Search: query packets walk ray corridors via greedy
// geographic progress, the ray count doubles on every timeout, and the last
// escalation floods. A forwarder transmits at most once per round; its single
// broadcast aggregates the designations for every ray it serves.
class IrsSearch {
  public:
    struct Params {
        int k0{4};
        int k_max{64};
        double corridor_width{0.0};      // <= 0: defaults to radio range
        double timeout_per_round{0.0};   // <= 0: 2 * diameter * frame duration
        double frame_duration{0.0};      // for the timeout default
        int query_bytes{64};
        int reply_bytes{64};
        bool flood_only{false};          // plain flooding search (baseline stacks)
        int max_rounds{0};               // > 0: stop escalating after this many rounds
    };

    IrsSearch(Simulator& sim, Params params, Flooding& flooding, DutyCycleMac* mac);

    bool search_running() const { return active_; }

    void start_search(std::function<bool(NodeId)> predicate,
                      std::function<void(const SearchResult&)> on_complete);

    // deliveries of Query (non-flood rounds) and Reply packets
    void on_deliver(NodeId receiver, const Packet& packet, NodeId from);
    // deliveries of flood-round Query packets, after Flooding processed them
    void on_flood_query(NodeId receiver, const Packet& packet, NodeId from);

  private:
    Simulator& sim_;
    Params params_;
    Flooding& flooding_;
    DutyCycleMac* mac_;  // null in always-on stacks

    bool active_{false};
    int search_id_{0};
    int round_{0};
    int ray_count_{0};
    bool flood_round_{false};
    PacketId flood_query_id_{0};
    std::int64_t flood_tx_seen_{0};
    double issued_at_{0.0};
    double energy_at_start_{0.0};
    bool target_replied_this_round_{false};
    std::optional<double> latency_target_;
    std::int64_t total_tx_{0};
    std::int64_t round_tx_{0};
    std::int64_t max_round_tx_{0};
    bool used_fallback_{false};
    std::function<bool(NodeId)> predicate_;
    std::function<void(const SearchResult&)> on_complete_;
    std::vector<Ray> rays_;
    std::set<NodeId> forwarded_;               // nodes that transmitted this round
    std::map<NodeId, std::vector<QueryRayTask>> pending_;
    std::set<NodeId> send_scheduled_;
    std::vector<NodeId> held_;                 // nodes held awake for the round

    void run_round();
    void launch_queries();
    void finish_round();
    void complete(bool found);
    void send_reply(NodeId node, const std::vector<NodeId>& path_to_sender, int round);
    void forward_reply(NodeId node, const Packet& packet);
    void schedule_forward(NodeId node);
    Ray ray_for(int index) const;
    void hold_round_members();
    void release_round_members();
};

}  // namespace wsn
