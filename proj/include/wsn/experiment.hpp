#pragma once

#include <string>
#include <vector>

#include "wsn/metrics.hpp"
#include "wsn/placement.hpp"
#include "wsn/scenario.hpp"
#include "wsn/topology.hpp"

namespace wsn {

struct ExperimentConfig {
    int n_nodes{100};
    PlacementKind placement{PlacementKind::UniformRandom};
    double sigma{0.0};
    double bias{0.5};
    Vec2 area{500.0, 500.0};
    double radio_range{100.0};
    double initial_energy{10.0};  // J per node
    int stack_size{8};
    int max_packet_bytes{128};
    StackChoice stack{false, false, false, true};
    EnergyModel energy;  // data_rate inside
    std::uint64_t seed{42};
    double duration{60.0};
    int runs{1};
    ScenarioParams scenario;  // stack field is overwritten from `stack`

    void validate() const;  // throws Error naming the offending key
};

// flat `key = value` text; unknown keys rejected
void apply_config_file(ExperimentConfig& config, const std::string& text);
std::string echo_config(const ExperimentConfig& config);

// Builds the run's topology: placement positions (seeded), node 0 = sink at
// the center, the node farthest from the sink carries the target role.
Topology build_topology(const ExperimentConfig& config, std::uint64_t seed);

struct RunRow {
    int run_id{0};
    std::uint64_t seed{0};
    bool error{false};
    std::string error_message;
    MetricsRecord record;
};

struct ExperimentOutput {
    std::vector<RunRow> rows;
    double discovery_probability{0.0};
    int successful_runs{0};
    std::vector<std::pair<double, double>> power_series;    // (t, W) from run 0
    std::vector<std::pair<double, double>> latency_series;  // (t, s) per found search
};

// One simulation per run, seeded seed+i; rows in run order. Construction
// failures produce error rows, other runs proceed.
ExperimentOutput run_experiment(const ExperimentConfig& config);

std::string to_csv(const ExperimentConfig& config, const ExperimentOutput& out);
std::string power_dat(const ExperimentOutput& out);
std::string latency_dat(const ExperimentOutput& out);

struct PowerComparison {
    double baseline_mean{0.0};
    double candidate_mean{0.0};
    double reduction_pct{0.0};
    bool in_band{false};  // the paper's 10..19% calibration band
};

// reduction = 100 * (1 - mean(candidate energy) / mean(baseline energy));
// both CSVs must describe the same n_nodes and placement.
PowerComparison compare_power(const std::string& baseline_csv,
                              const std::string& candidate_csv);

std::string format_comparison(const PowerComparison& cmp);

}  // namespace wsn
