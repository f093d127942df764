#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <random>
#include <unordered_set>
#include <vector>

#include "wsn/energy.hpp"
#include "wsn/metrics.hpp"
#include "wsn/topology.hpp"
#include "wsn/types.hpp"

namespace wsn {

enum class EventKind {
    TransmitStart,
    TransmitEnd,
    Deliver,
    Timer,
    WakeComplete,
    EpochBoundary,
    DeathCheck,
};

struct SimEvent {
    double time{0.0};
    std::uint64_t sequence{0};  // insertion order; breaks same-time ties
    EventKind kind{EventKind::Timer};
    NodeId subject{kNoNode};
    std::uint64_t tag{0};
    std::optional<Packet> packet;
    std::function<void()> action;
    std::function<void(bool)> tx_done;  // completion for the transmission this event starts
};

struct MacParams {
    int stack_size{8};            // buffer capacity, packets
    int max_packet_bytes{128};
    double backoff_unit{0.00032};  // s per backoff slot unit
    int backoff_window{32};        // backoff drawn uniform over [0, window) units
    int setup_retries{5};          // setup-phase CSMA attempts before abort
};

struct NodeRuntime {
    RadioState state{RadioState::Idle};
    double state_since{0.0};
    double consumed{0.0};          // J; never decreases, capped at initial energy
    double listen_since{0.0};      // start of the current uninterrupted listening stretch
    int carrier{0};                // in-range transmissions currently on the air
    double last_carrier_rise{-1.0};
    std::uint64_t state_epoch{0};  // invalidates stale wake / death-check events
    double collision_episode_end{-1.0e300};
    std::deque<Packet> buffer;     // FIFO, capacity = stack_size
    std::unordered_set<PacketId> seen;
    NodeId parent{kNoNode};
    int depth{-1};
    std::vector<NodeId> children;
    int send_slot{-1};
};

// Deterministic discrete-event core: (time, sequence)-ordered queue, broadcast
// packet propagation with temporal-overlap collisions, per-node FIFO buffers
// with tail drop, and per-state energy integration with exact death times.
//
// A Simulator instance is single-threaded; distinct instances are independent.
class Simulator {
  public:
    Simulator(const Topology& topology, EnergyModel energy, MacParams mac,
              std::uint64_t seed);

    const Topology& topology() const { return topology_; }
    const EnergyModel& energy_model() const { return energy_; }
    const MacParams& mac_params() const { return mac_; }
    double now() const { return now_; }
    std::mt19937_64& rng() { return rng_; }

    // --- event queue ---
    void schedule(SimEvent ev);  // error if ev.time < now
    void schedule_timer(double time, std::function<void()> action);
    void schedule_epoch(double time, std::function<void()> action);

    // Runs all events with time <= t_end and returns the metrics so far.
    // Repeated calls continue from the current time.
    MetricsRecord run_until(double t_end);

    // --- radio / medium ---
    // Starts a transmission at `start` (>= now). The sender occupies Transmit
    // for size_bytes*8/data_rate; on completion every alive neighbor that
    // listened through the whole interval receives the packet unless another
    // in-range transmission overlapped it there.
    void transmit(NodeId sender, const Packet& packet, double start);
    void transmit(NodeId sender, const Packet& packet) { transmit(sender, packet, now_); }

    // Data-plane send: local carrier sense plus a global channel claim, so
    // arbitrated sends never collide with each other. Retries (with jittered
    // backoff) until the channel frees; abandons if the node stops listening.
    // `build` may return nullopt to abandon. `done(sent)` fires at the end of
    // a successful transmission, or immediately on abandonment.
    void csma_send(NodeId sender, std::function<std::optional<Packet>()> build,
                   std::function<void(bool)> done = {});
    void csma_send(NodeId sender, Packet packet, std::function<void(bool)> done = {});

    // Setup-phase send: local carrier sense only, bounded retries, collisions
    // possible. Draws an initial dither before the first attempt.
    void csma_send_contended(NodeId sender, std::function<std::optional<Packet>()> build,
                             std::function<void(bool)> done = {});

    bool channel_busy_at(NodeId node) const { return runtime(node).carrier > 0; }

    // --- buffers ---
    bool enqueue(NodeId node, const Packet& packet);  // false + drop count on overflow
    std::optional<Packet> dequeue(NodeId node);
    std::size_t buffer_occupancy(NodeId node) const { return runtime(node).buffer.size(); }
    std::size_t max_buffer_occupancy_seen() const { return max_occupancy_; }

    // --- radio state control (used by the MAC layer) ---
    void radio_sleep(NodeId node);
    void radio_wake(NodeId node);  // completes wake_latency later; no-op when awake
    bool is_alive(NodeId node) const { return runtime(node).state != RadioState::Dead; }
    bool is_listening(NodeId node) const;
    RadioState radio_state(NodeId node) const { return runtime(node).state; }
    double remaining_energy(NodeId node) const;

    NodeRuntime& runtime(NodeId node);
    const NodeRuntime& runtime(NodeId node) const;
    bool mark_seen(NodeId node, PacketId id);  // true when newly seen

    PacketId next_packet_id() { return next_packet_id_++; }
    std::int64_t transmissions() const { return transmissions_; }
    std::int64_t csma_aborts() const { return csma_aborts_; }
    double total_consumed() const;

    MetricsCollector& metrics() { return metrics_; }
    const MetricsCollector& metrics() const { return metrics_; }

    // hooks
    std::function<void(NodeId receiver, const Packet&, NodeId transmitter)> on_deliver;
    std::function<void(NodeId)> on_enqueue;
    std::function<void(NodeId)> on_death;
    std::function<void(NodeId, RadioState from, RadioState to, double time)> on_state_change;

  private:
    struct Transmission {
        NodeId sender{kNoNode};
        Packet packet;
        double start{0.0};
        double end{0.0};            // scheduled end
        double effective_end{0.0};  // truncated if the sender dies mid-air
        bool aborted{false};
        bool carrier_released{false};
        std::function<void(bool)> done;
    };

    struct EventOrder {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.sequence > b.sequence;
        }
    };

    const Topology& topology_;
    EnergyModel energy_;
    MacParams mac_;
    std::mt19937_64 rng_;
    MetricsCollector metrics_;

    double now_{0.0};
    std::uint64_t next_sequence_{0};
    PacketId next_packet_id_{1};
    std::int64_t transmissions_{0};
    std::int64_t csma_aborts_{0};
    std::size_t max_occupancy_{0};
    double channel_claimed_until_{0.0};
    double max_serialization_{0.0};

    std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> queue_;
    std::vector<NodeRuntime> nodes_;               // in topology order
    std::unordered_map<NodeId, std::size_t> idx_;
    std::deque<Transmission> records_;
    std::uint64_t records_base_{0};  // absolute index of records_.front()

    std::size_t index_of(NodeId id) const;
    void account_interval(std::size_t idx);
    void set_state(std::size_t idx, RadioState next);
    void schedule_death_check(std::size_t idx);
    void kill(std::size_t idx);
    void release_carrier(Transmission& rec);
    void handle_transmit_start(SimEvent& ev);
    void handle_transmit_end(std::uint64_t rec_index);
    void csma_attempt(NodeId sender, std::function<std::optional<Packet>()> build,
                      std::function<void(bool)> done);
    void csma_attempt_contended(NodeId sender, std::function<std::optional<Packet>()> build,
                                std::function<void(bool)> done, int attempts_left);
    double backoff_jitter();
    Transmission& record_at(std::uint64_t abs_index);
    void start_transmission(NodeId sender, const Packet& packet, std::function<void(bool)> done);
    void check_sink_connectivity();
};

}  // namespace wsn
