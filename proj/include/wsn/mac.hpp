#pragma once

#include <map>
#include <vector>

#include "wsn/simulator.hpp"
#include "wsn/topology.hpp"

namespace wsn {

struct TreeLinks {
    std::map<NodeId, NodeId> parent;                 // absent for the sink
    std::map<NodeId, int> depth;                     // sink = 0
    std::map<NodeId, std::vector<NodeId>> children;  // sorted by id
};

// BFS layering from the sink; parent = lowest-id neighbor one layer up.
// Throws an Error naming the unreachable nodes on a disconnected topology.
TreeLinks bfs_tree(const Topology& topology);

struct SlotSchedule {
    int frame_length{16};
    double slot_duration{0.0};           // s
    int miss_limit{1};
    std::map<NodeId, int> send_slot;     // per non-sink node, within its parent's frame
    double frame_duration() const { return frame_length * slot_duration; }
};

// Each child gets a distinct send slot within its parent's frame, assigned in
// child-id order from the lowest free index, skipping the parent's own send
// slot so that send_slot != receive_slot holds for every node. The parent's
// matching receive slot equals the child's send slot.
SlotSchedule allocate_slots(const TreeLinks& tree, int frame_length, double slot_duration,
                            int miss_limit = 1);

// Writes parent/depth/children/send_slot into the simulator's node runtimes.
void install_tree(Simulator& sim, const TreeLinks& tree, const SlotSchedule& slots);

// Event-driven tree construction over the common channel: the sink beacons its
// depth, receivers adopt the first/strictly-better parent and re-beacon.
// Beacons contend with local-sense CSMA, so setup consumes energy and can
// suffer collisions and backoffs; repeats make convergence robust.
class TreeSetup {
  public:
    struct Params {
        int beacon_bytes{32};
        int repeats{3};
        double repeat_spacing{0.02};  // s between a node's beacon repeats
        double window{2.0};           // s; tree is frozen at this time
    };

    TreeSetup(Simulator& sim, Params params);

    void start();
    void on_deliver(NodeId receiver, const Packet& packet, NodeId from);
    TreeLinks finalize() const;  // throws when nodes ended up unparented

    static bool is_beacon(const Packet& p) {
        return p.kind == PacketKind::Control &&
               std::holds_alternative<TreeBeaconPayload>(p.meta);
    }

  private:
    Simulator& sim_;
    Params params_;
    std::map<NodeId, NodeId> parent_;
    std::map<NodeId, int> depth_;

    void broadcast_beacon(NodeId node);
};

// Immediate store-and-forward service for always-on stacks: drains a node's
// FIFO through arbitrated CSMA, one packet in flight per node.
class CsmaService {
  public:
    explicit CsmaService(Simulator& sim) : sim_(sim) {}

    void kick(NodeId node);  // start draining if not already

    // invoked right after a pop, before transmission (congestion marking)
    std::function<void(NodeId, Packet&)> on_forward;
    // invoked when a drained packet finished transmitting
    std::function<void(NodeId, const Packet&)> on_sent;

  private:
    Simulator& sim_;
    std::map<NodeId, bool> sending_;
    std::map<NodeId, Packet> last_sent_;
};

struct DutyParams {
    bool sleep_enabled{true};   // duty cycling on/off
    int resync_frames{4};       // inactive slots are re-sensed every this many frames
    double cs_window{0.001};    // s of listening before declaring a slot silent
    double wake_margin{1.0e-6}; // wake completes this early, before the slot starts
    int tx_attempts{5};         // slot sends per packet before giving up (no ACK heard)
    int ack_bytes{16};          // slot ACK; must serialize within the guard time
};

// ZigBee-style duty cycling over a TDMA slot frame: a node wakes for its send
// slot (skipped when its buffer is empty) and for each child's send slot,
// sleeps everywhere else, and deactivates receive slots after miss_limit
// consecutive silent frames. Deactivated slots are re-sensed periodically; a
// parent ACKs each slot delivery inside the guard time and a child keeps
// retrying its head packet until the ACK lands or the attempts run out.
class DutyCycleMac {
  public:
    DutyCycleMac(Simulator& sim, SlotSchedule schedule, const TreeLinks& tree,
                 double frames_start, DutyParams params);

    void start();

    // Keeps a node awake (search rounds, control windows). Counted; the node
    // may sleep again once every hold is released.
    void hold_awake(NodeId node);
    void release_hold(NodeId node);

    void notify_enqueue(NodeId node);  // send slot may now merit a wake
    void notify_rx_from(NodeId parent, NodeId child, PacketId packet);
    void on_ack(NodeId child, PacketId acked);

    const SlotSchedule& schedule() const { return schedule_; }
    double frames_start() const { return frames_start_; }
    std::int64_t giveups() const { return giveups_; }

    static bool is_slot_ack(const Packet& p) {
        return p.kind == PacketKind::Control &&
               std::holds_alternative<SlotAckPayload>(p.meta);
    }

    // when a relay forwards with buffer occupancy above this fraction of
    // stack_size, it sets the packet's congestion bit
    static constexpr double kCongestionFraction = 0.8;

  private:
    struct OwnedSlot {
        int slot{0};
        bool recv{false};
        NodeId child{kNoNode};
        bool active{true};
        int miss{0};
        double last_rx{-1.0};
    };
    struct NodeMac {
        std::vector<OwnedSlot> owned;
        int hold{0};
        std::uint64_t plan_epoch{0};
        bool sleeping_planned{false};
        PacketId head_id{0};
        int head_attempts{0};
    };

    Simulator& sim_;
    SlotSchedule schedule_;
    double frames_start_;
    DutyParams params_;
    std::map<NodeId, NodeMac> nodes_;
    std::int64_t giveups_{0};

    double next_slot_start(int slot, double after, int frame_multiple) const;
    void plan(NodeId node);
    void service_send(NodeId node, std::uint64_t epoch, double slot_start);
    void service_recv(NodeId node, std::uint64_t epoch, std::size_t owned_index,
                      double slot_start);
};

}  // namespace wsn
