#pragma once

#include <array>
#include <string>

#include "wsn/types.hpp"

namespace wsn {

enum class RadioState { Transmit, Receive, Idle, Sleep, WakingUp, Dead };
inline constexpr int kRadioStateCount = 6;

const char* to_string(RadioState s);

// Per-state power draws, wake latency and link data rate. Defaults are in the
// spirit of commodity 802.15.4 radios; all of them are configuration, not
// measured ground truth.
struct EnergyModel {
    double p_tx{0.060};        // W
    double p_rx{0.045};        // W
    double p_idle{0.045};      // W
    double p_sleep{3.0e-6};    // W
    double wake_latency{0.015};   // s; ZigBee-class radios reach active mode in ~15 ms
    double data_rate{250'000.0};  // bit/s

    // WakingUp draws p_idle: radios pull near-active current during startup.
    double power(RadioState s) const;
    double serialization_time(int size_bytes) const;
    double joules_per_bit() const { return p_tx / data_rate; }

    void validate() const;  // p_sleep < p_idle <= p_rx <= p_tx, wake_latency > 0
};

double energy_for_interval(RadioState s, double dt, const EnergyModel& model);

}  // namespace wsn
