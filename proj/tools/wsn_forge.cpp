#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wsn/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw wsn::Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw wsn::Error("cannot write " + path);
    out << text;
}

std::string stem_of(const std::string& path) {
    std::size_t dot = path.rfind('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos) return path;
    return path.substr(0, dot);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wsn-forge: deterministic low-power WSN stack simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a seeded experiment and emit CSV rows");

    wsn::ExperimentConfig config;
    std::string config_path;
    std::string placement = "uniform";
    std::string protocol = "flood";
    std::string duty;
    std::string data_rate;
    std::string sources;
    std::string out_path;

    run->add_option("--config", config_path, "flat key = value config file");
    run->add_option("--nodes", config.n_nodes, "node count (>= 2)");
    run->add_option("--placement", placement, "grid|uniform|diffusion|biased");
    run->add_option("--sigma", config.sigma, "diffusion std dev (default width/4)");
    run->add_option("--bias", config.bias, "biased placement mixture weight");
    run->add_option("--area", [&config](const std::vector<std::string>& vals) {
        config.area.x = std::stod(vals.at(0));
        config.area.y = std::stod(vals.at(1));
        return true;
    }, "area width and height in meters")->expected(2);
    run->add_option("--range", config.radio_range, "radio range in meters");
    run->add_option("--energy", config.initial_energy, "initial joules per node");
    run->add_option("--stack-size", config.stack_size, "buffer capacity in packets");
    run->add_option("--protocol", protocol, "e.g. flood, irs, zigbee-irs-esrt-flood");
    run->add_option("--duty-cycle", duty, "on|off (overrides the zigbee token)");
    run->add_option("--data-rate", data_rate, "250k|1000k");
    run->add_option("--rays", config.scenario.rays_k0, "initial ray count k0");
    run->add_option("--corridor", config.scenario.corridor_width, "corridor width in meters");
    run->add_option("--kmax", config.scenario.rays_max, "ray cap before flooding fallback");
    run->add_option("--desired-reports", config.scenario.esrt.desired_reports,
                    "ESRT target reports per epoch");
    run->add_option("--epoch", config.scenario.esrt.epoch_length, "ESRT epoch seconds");
    run->add_option("--epsilon", config.scenario.esrt.epsilon, "ESRT OOR tolerance");
    run->add_option("--frame-length", config.scenario.frame_length, "TDMA slots per frame");
    run->add_option("--miss-limit", config.scenario.miss_limit,
                    "empty receive slots before sleeping");
    run->add_option("--sources", sources, "target|all report sources");
    run->add_option("--report-rate", config.scenario.fixed_report_rate,
                    "reports/s when ESRT is off");
    run->add_option("--search-period", config.scenario.search_period,
                    "seconds between discovery searches");
    run->add_option("--seed", config.seed, "base seed; run i uses seed+i");
    run->add_option("--duration", config.duration, "simulated seconds per run");
    run->add_option("--runs", config.runs, "repetitions");
    run->add_option("--out", out_path, "CSV output path (power/latency .dat beside it)");

    auto* compare = app.add_subcommand("compare", "power reduction of candidate vs baseline");
    std::string baseline_path, candidate_path;
    compare->add_option("baseline", baseline_path, "baseline CSV")->required();
    compare->add_option("candidate", candidate_path, "candidate CSV")->required();

    // the config file loads first so that flags passed on the command line win
    try {
        for (int i = 1; i < argc; ++i) {
            std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc)
                config_path = argv[i + 1];
            else if (arg.rfind("--config=", 0) == 0)
                config_path = arg.substr(9);
        }
        if (!config_path.empty()) wsn::apply_config_file(config, read_file(config_path));
    } catch (const wsn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            // flag values override whatever the file set
            auto kind = wsn::placement_from_string(placement);
            if (!kind) throw wsn::Error("unknown placement '" + placement + "'");
            if (run->count("--placement") || config_path.empty()) config.placement = *kind;
            if (run->count("--protocol") || config_path.empty()) {
                auto stack = wsn::stack_from_string(protocol);
                if (!stack) throw wsn::Error("unknown protocol stack '" + protocol + "'");
                config.stack = *stack;
            }
            if (!duty.empty()) {
                if (duty == "on") config.stack.duty_cycle = true;
                else if (duty == "off") config.stack.duty_cycle = false;
                else throw wsn::Error("--duty-cycle takes on or off");
            }
            if (!data_rate.empty()) {
                if (data_rate == "250k") config.energy.data_rate = 250000.0;
                else if (data_rate == "1000k") config.energy.data_rate = 1000000.0;
                else throw wsn::Error("--data-rate takes 250k or 1000k");
            }
            if (!sources.empty()) {
                if (sources == "all") config.scenario.sources_all = true;
                else if (sources == "target") config.scenario.sources_all = false;
                else throw wsn::Error("--sources takes target or all");
            }
            config.validate();

            std::cout << "# resolved configuration\n" << wsn::echo_config(config);
            wsn::ExperimentOutput out = wsn::run_experiment(config);
            std::string csv = wsn::to_csv(config, out);
            if (!out_path.empty()) {
                write_file(out_path, csv);
                write_file(stem_of(out_path) + "_power.dat", wsn::power_dat(out));
                write_file(stem_of(out_path) + "_latency.dat", wsn::latency_dat(out));
                std::cout << "# wrote " << out_path << '\n';
            } else {
                std::cout << csv;
            }
            for (const auto& row : out.rows)
                if (row.error)
                    std::cerr << "run " << row.run_id << " failed: " << row.error_message
                              << '\n';
            return 0;
        }
        if (compare->parsed()) {
            auto cmp = wsn::compare_power(read_file(baseline_path), read_file(candidate_path));
            std::cout << wsn::format_comparison(cmp);
            return 0;
        }
    } catch (const wsn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
