#include "wsn/esrt.hpp"

#include <algorithm>

namespace wsn {

const char* to_string(EsrtRegion region) {
    switch (region) {
        case EsrtRegion::OOR: return "OOR";
        case EsrtRegion::NC_LR: return "NC_LR";
        case EsrtRegion::NC_HR: return "NC_HR";
        case EsrtRegion::C_HR: return "C_HR";
        case EsrtRegion::C_LR: return "C_LR";
    }
    return "?";
}

EpochObservation observe_epoch(double received_reports, bool any_congestion_bit,
                               double desired_reports) {
    if (desired_reports <= 0.0) throw Error("esrt: desired reports must be > 0");
    if (received_reports < 0.0) throw Error("esrt: negative report count");
    return {received_reports / desired_reports, any_congestion_bit};
}

EsrtRegion classify_region(double eta, bool congested, double epsilon) {
    if (eta < 0.0) throw Error("esrt: eta must be >= 0");
    if (congested) return eta > 1.0 + epsilon ? EsrtRegion::C_HR : EsrtRegion::C_LR;
    if (eta < 1.0 - epsilon) return EsrtRegion::NC_LR;
    if (eta > 1.0 + epsilon) return EsrtRegion::NC_HR;
    return EsrtRegion::OOR;
}

double update_frequency(double f, EsrtRegion region, double eta, double f_min, double f_max) {
    double next = f;
    switch (region) {
        case EsrtRegion::OOR:
            next = f;
            break;
        case EsrtRegion::NC_LR:
        case EsrtRegion::C_HR:
            next = eta > 0.0 ? f / eta : f_max;
            break;
        case EsrtRegion::NC_HR:
            next = eta > 0.0 ? (f / 2.0) * (1.0 + 1.0 / eta) : f_max;
            break;
        case EsrtRegion::C_LR:
            next = f * eta / 2.0;
            break;
    }
    return std::clamp(next, f_min, f_max);
}

EsrtController::EsrtController(Simulator& sim, EsrtParams params, Flooding& flooding,
                               std::vector<NodeId> sources)
    : sim_(sim), params_(params), flooding_(flooding), sources_(std::move(sources)),
      frequency_(params.f0) {
    for (NodeId s : sources_) source_current_[s] = params_.f0;
}

void EsrtController::start(double first_boundary) {
    sim_.schedule_epoch(first_boundary, [this, first_boundary] { boundary(first_boundary); });
}

void EsrtController::on_report(const Packet& packet) {
    received_ += 1.0;
    if (packet.congestion_bit) congestion_seen_ = true;
}

void EsrtController::on_frequency_packet(NodeId node, const Packet& packet) {
    if (!source_current_.count(node)) return;  // not a source
    source_pending_[node] = std::get<FrequencyPayload>(packet.meta).reports_per_second;
}

double EsrtController::source_frequency(NodeId node) const {
    auto it = source_current_.find(node);
    if (it == source_current_.end()) throw Error("esrt: node is not a source");
    return it->second;
}

void EsrtController::boundary(double time) {
    ++epoch_;
    if (on_epoch_boundary) on_epoch_boundary(epoch_, time);

    // sources that heard a broadcast switch over at the boundary
    for (auto& [node, f] : source_pending_) source_current_[node] = f;
    source_pending_.clear();

    EpochObservation obs = observe_epoch(received_, congestion_seen_, params_.desired_reports);
    received_ = 0.0;
    congestion_seen_ = false;

    EsrtRegion region = classify_region(obs.eta, obs.congested, params_.epsilon);
    double updated =
        update_frequency(frequency_, region, obs.eta, params_.f_min, params_.f_max);
    history_.push_back({epoch_, obs.eta, region, updated});

    // announcing a no-op would only spend energy
    if (updated != frequency_ && sim_.is_alive(sim_.topology().sink()))
        broadcast_frequency(updated);
    frequency_ = updated;

    sim_.schedule_epoch(time + params_.epoch_length,
                        [this, time] { boundary(time + params_.epoch_length); });
}

void EsrtController::broadcast_frequency(double f_new) {
    Packet p;
    p.id = sim_.next_packet_id();
    p.kind = PacketKind::Control;
    p.src = sim_.topology().sink();
    p.created_at = sim_.now();
    p.size_bytes = params_.control_bytes;
    p.meta = FrequencyPayload{f_new};
    flooding_.start_flood(sim_.topology().sink(), std::move(p));
}

}  // namespace wsn
