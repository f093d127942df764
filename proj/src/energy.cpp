#include "wsn/energy.hpp"

namespace wsn {

const char* to_string(RadioState s) {
    switch (s) {
        case RadioState::Transmit: return "transmit";
        case RadioState::Receive: return "receive";
        case RadioState::Idle: return "idle";
        case RadioState::Sleep: return "sleep";
        case RadioState::WakingUp: return "waking";
        case RadioState::Dead: return "dead";
    }
    return "?";
}

double EnergyModel::power(RadioState s) const {
    switch (s) {
        case RadioState::Transmit: return p_tx;
        case RadioState::Receive: return p_rx;
        case RadioState::Idle: return p_idle;
        case RadioState::WakingUp: return p_idle;
        case RadioState::Sleep: return p_sleep;
        case RadioState::Dead: return 0.0;
    }
    return 0.0;
}

double EnergyModel::serialization_time(int size_bytes) const {
    return static_cast<double>(size_bytes) * 8.0 / data_rate;
}

void EnergyModel::validate() const {
    if (!(p_sleep < p_idle && p_idle <= p_rx && p_rx <= p_tx))
        throw Error("energy model: require p_sleep < p_idle <= p_rx <= p_tx");
    if (!(wake_latency > 0.0)) throw Error("energy model: wake_latency must be > 0");
    if (!(data_rate > 0.0)) throw Error("energy model: data_rate must be > 0");
}

double energy_for_interval(RadioState s, double dt, const EnergyModel& model) {
    if (dt < 0.0) throw Error("energy_for_interval: negative duration");
    return model.power(s) * dt;
}

}  // namespace wsn
