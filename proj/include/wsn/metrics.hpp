#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "wsn/energy.hpp"
#include "wsn/types.hpp"

namespace wsn {

// The five measured quantities plus drop, collision and lifetime counters.
struct MetricsRecord {
    bool discovery_found{false};
    double total_energy{0.0};                // J
    std::map<NodeId, double> per_node_energy;
    std::optional<double> latency_target;    // query issue -> target receipt, s
    std::optional<double> latency_sink;      // query issue -> reply at sink, s
    std::int64_t sent_bytes{0};
    std::int64_t recv_bytes{0};
    std::int64_t sending_bytes{0};           // bytes handed to the radio; equals sent_bytes here
    std::int64_t drops{0};
    std::int64_t collisions{0};
    double lifetime{0.0};                    // first node death, or run end if none died
    std::optional<double> sink_disconnect_time;
    int dead_nodes{0};
};

struct MetricsAggregate {
    MetricsRecord mean;
    MetricsRecord min;
    MetricsRecord max;
    double discovery_probability{0.0};
    int runs{0};
};

class MetricsCollector {
  public:
    void on_sent(std::int64_t bytes) {
        sent_bytes_ += bytes;
        sending_bytes_ += bytes;
    }
    void on_received(std::int64_t bytes) { recv_bytes_ += bytes; }
    void on_drop() { ++drops_; }
    void on_collision() { ++collisions_; }

    void on_state_interval(NodeId node, RadioState state, double duration,
                           const EnergyModel& model);
    // Engine variant with the joules pinned by the caller (death clamps the
    // final interval so consumption lands exactly on the initial energy).
    void on_state_interval(NodeId node, RadioState state, double duration, double joules);
    void on_death(NodeId node, double time);

    void set_discovery(bool found, std::optional<double> latency_target,
                       std::optional<double> latency_sink);
    void set_sink_disconnect(double time);

    std::int64_t drops() const { return drops_; }
    std::int64_t collisions() const { return collisions_; }
    std::optional<double> first_death() const { return first_death_; }

    // Consumed energy recomputed from the per-state duration ledger; the
    // conservation check compares it against the running total.
    double energy_from_durations(const EnergyModel& model) const;
    double state_time(NodeId node, RadioState s) const;
    double total_state_time(NodeId node) const;

    MetricsRecord finalize(double run_duration) const;

  private:
    std::int64_t sent_bytes_{0};
    std::int64_t recv_bytes_{0};
    std::int64_t sending_bytes_{0};
    std::int64_t drops_{0};
    std::int64_t collisions_{0};
    std::map<NodeId, double> per_node_energy_;
    std::map<NodeId, std::array<double, kRadioStateCount>> per_node_state_time_;
    std::optional<double> first_death_;
    int deaths_{0};
    bool found_{false};
    std::optional<double> latency_target_;
    std::optional<double> latency_sink_;
    std::optional<double> sink_disconnect_;
};

// Mean/min/max per field; discovery probability = found fraction.
MetricsAggregate summarize(const std::vector<MetricsRecord>& records);

}  // namespace wsn
