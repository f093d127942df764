#include "wsn/metrics.hpp"

#include <algorithm>

namespace wsn {

void MetricsCollector::on_state_interval(NodeId node, RadioState state, double duration,
                                         const EnergyModel& model) {
    on_state_interval(node, state, duration, model.power(state) * duration);
}

void MetricsCollector::on_state_interval(NodeId node, RadioState state, double duration,
                                         double joules) {
    if (duration < 0.0) throw EngineBug("metrics: negative state interval");
    per_node_energy_[node] += joules;
    per_node_state_time_[node][static_cast<int>(state)] += duration;
}

void MetricsCollector::on_death(NodeId node, double time) {
    (void)node;
    ++deaths_;
    if (!first_death_) first_death_ = time;
}

void MetricsCollector::set_discovery(bool found, std::optional<double> latency_target,
                                     std::optional<double> latency_sink) {
    found_ = found;
    latency_target_ = latency_target;
    latency_sink_ = latency_sink;
}

void MetricsCollector::set_sink_disconnect(double time) {
    if (!sink_disconnect_) sink_disconnect_ = time;
}

double MetricsCollector::energy_from_durations(const EnergyModel& model) const {
    double total = 0.0;
    for (const auto& [node, times] : per_node_state_time_) {
        for (int s = 0; s < kRadioStateCount; ++s)
            total += times[s] * model.power(static_cast<RadioState>(s));
    }
    return total;
}

double MetricsCollector::state_time(NodeId node, RadioState s) const {
    auto it = per_node_state_time_.find(node);
    if (it == per_node_state_time_.end()) return 0.0;
    return it->second[static_cast<int>(s)];
}

double MetricsCollector::total_state_time(NodeId node) const {
    auto it = per_node_state_time_.find(node);
    if (it == per_node_state_time_.end()) return 0.0;
    double total = 0.0;
    for (double t : it->second) total += t;
    return total;
}

MetricsRecord MetricsCollector::finalize(double run_duration) const {
    MetricsRecord rec;
    rec.discovery_found = found_;
    rec.per_node_energy = per_node_energy_;
    for (const auto& [node, joules] : per_node_energy_) rec.total_energy += joules;
    rec.latency_target = latency_target_;
    rec.latency_sink = latency_sink_;
    rec.sent_bytes = sent_bytes_;
    rec.recv_bytes = recv_bytes_;
    rec.sending_bytes = sending_bytes_;
    rec.drops = drops_;
    rec.collisions = collisions_;
    rec.lifetime = first_death_ ? *first_death_ : run_duration;
    rec.sink_disconnect_time = sink_disconnect_;
    rec.dead_nodes = deaths_;
    return rec;
}

MetricsAggregate summarize(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw Error("summarize: no records");
    MetricsAggregate agg;
    agg.runs = static_cast<int>(records.size());
    const double n = static_cast<double>(records.size());

    int found = 0;
    for (const auto& r : records)
        if (r.discovery_found) ++found;
    agg.discovery_probability = static_cast<double>(found) / n;
    agg.mean.discovery_found = found == agg.runs;

    auto fold_double = [&](double MetricsRecord::* field) {
        double sum = 0.0;
        double lo = records.front().*field, hi = lo;
        for (const auto& r : records) {
            sum += r.*field;
            lo = std::min(lo, r.*field);
            hi = std::max(hi, r.*field);
        }
        agg.mean.*field = sum / n;
        agg.min.*field = lo;
        agg.max.*field = hi;
    };
    auto fold_count = [&](std::int64_t MetricsRecord::* field) {
        double sum = 0.0;
        std::int64_t lo = records.front().*field, hi = lo;
        for (const auto& r : records) {
            sum += static_cast<double>(r.*field);
            lo = std::min(lo, r.*field);
            hi = std::max(hi, r.*field);
        }
        agg.mean.*field = static_cast<std::int64_t>(sum / n);
        agg.min.*field = lo;
        agg.max.*field = hi;
    };
    // latency means skip the runs that produced none
    auto fold_latency = [&](std::optional<double> MetricsRecord::* field) {
        double sum = 0.0;
        int count = 0;
        std::optional<double> lo, hi;
        for (const auto& r : records) {
            if (!(r.*field)) continue;
            double v = *(r.*field);
            sum += v;
            ++count;
            if (!lo || v < *lo) lo = v;
            if (!hi || v > *hi) hi = v;
        }
        if (count > 0) {
            agg.mean.*field = sum / count;
            agg.min.*field = lo;
            agg.max.*field = hi;
        }
    };

    fold_double(&MetricsRecord::total_energy);
    fold_double(&MetricsRecord::lifetime);
    fold_count(&MetricsRecord::sent_bytes);
    fold_count(&MetricsRecord::recv_bytes);
    fold_count(&MetricsRecord::sending_bytes);
    fold_count(&MetricsRecord::drops);
    fold_count(&MetricsRecord::collisions);
    fold_latency(&MetricsRecord::latency_target);
    fold_latency(&MetricsRecord::latency_sink);

    double dead_sum = 0.0;
    int dead_lo = records.front().dead_nodes, dead_hi = dead_lo;
    for (const auto& r : records) {
        dead_sum += r.dead_nodes;
        dead_lo = std::min(dead_lo, r.dead_nodes);
        dead_hi = std::max(dead_hi, r.dead_nodes);
    }
    agg.mean.dead_nodes = static_cast<int>(dead_sum / n);
    agg.min.dead_nodes = dead_lo;
    agg.max.dead_nodes = dead_hi;
    return agg;
}

}  // namespace wsn
