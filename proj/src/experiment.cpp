#include "wsn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "wsn/simulator.hpp"

namespace wsn {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string rate_token(double rate) {
    if (rate == 250000.0) return "250k";
    if (rate == 1000000.0) return "1000k";
    return fmt(rate);
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n_nodes < 2) throw Error("config: nodes must be >= 2");
    if (duration <= 0.0) throw Error("config: duration must be > 0");
    if (runs < 1) throw Error("config: runs must be >= 1");
    if (!stack.irs && !stack.flood)
        throw Error("config: protocol needs at least one of irs or flood");
    if (stack.esrt && !stack.flood && !stack.duty_cycle)
        throw Error("config: esrt needs flood routing or the duty-cycled tree for reports");
    if (stack_size < 1) throw Error("config: stack-size must be >= 1");
    if (radio_range <= 0.0) throw Error("config: range must be > 0");
    if (area.x <= 0.0 || area.y <= 0.0) throw Error("config: area must be positive");
    if (initial_energy <= 0.0) throw Error("config: energy must be > 0");
    energy.validate();
}

namespace {

// single definition of the config-file key set and its application
bool apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    auto as_double = [&]() { return std::stod(value); };
    auto as_int = [&]() { return std::stoi(value); };
    if (key == "nodes") c.n_nodes = as_int();
    else if (key == "placement") {
        auto kind = placement_from_string(value);
        if (!kind) throw Error("config: unknown placement '" + value + "'");
        c.placement = *kind;
    } else if (key == "sigma") c.sigma = as_double();
    else if (key == "bias") c.bias = as_double();
    else if (key == "area_width") c.area.x = as_double();
    else if (key == "area_height") c.area.y = as_double();
    else if (key == "range") c.radio_range = as_double();
    else if (key == "energy") c.initial_energy = as_double();
    else if (key == "stack_size") c.stack_size = as_int();
    else if (key == "max_packet") c.max_packet_bytes = as_int();
    else if (key == "protocol") {
        auto stack = stack_from_string(value);
        if (!stack) throw Error("config: unknown protocol stack '" + value + "'");
        c.stack = *stack;
    } else if (key == "duty_cycle") {
        if (value == "on") c.stack.duty_cycle = true;
        else if (value == "off") c.stack.duty_cycle = false;
        else throw Error("config: duty_cycle must be on or off");
    } else if (key == "data_rate") {
        if (value == "250k") c.energy.data_rate = 250000.0;
        else if (value == "1000k") c.energy.data_rate = 1000000.0;
        else throw Error("config: data_rate must be 250k or 1000k");
    } else if (key == "p_tx") c.energy.p_tx = as_double();
    else if (key == "p_rx") c.energy.p_rx = as_double();
    else if (key == "p_idle") c.energy.p_idle = as_double();
    else if (key == "p_sleep") c.energy.p_sleep = as_double();
    else if (key == "wake_latency") c.energy.wake_latency = as_double();
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "duration") c.duration = as_double();
    else if (key == "runs") c.runs = as_int();
    else if (key == "rays") c.scenario.rays_k0 = as_int();
    else if (key == "kmax") c.scenario.rays_max = as_int();
    else if (key == "corridor") c.scenario.corridor_width = as_double();
    else if (key == "desired_reports") c.scenario.esrt.desired_reports = as_double();
    else if (key == "epoch") c.scenario.esrt.epoch_length = as_double();
    else if (key == "epsilon") c.scenario.esrt.epsilon = as_double();
    else if (key == "f0") c.scenario.esrt.f0 = as_double();
    else if (key == "f_min") c.scenario.esrt.f_min = as_double();
    else if (key == "f_max") c.scenario.esrt.f_max = as_double();
    else if (key == "frame_length") c.scenario.frame_length = as_int();
    else if (key == "miss_limit") c.scenario.miss_limit = as_int();
    else if (key == "resync_frames") c.scenario.resync_frames = as_int();
    else if (key == "setup_window") c.scenario.setup_window = as_double();
    else if (key == "search_period") c.scenario.search_period = as_double();
    else if (key == "report_rate") c.scenario.fixed_report_rate = as_double();
    else if (key == "report_bytes") c.scenario.report_bytes = as_int();
    else if (key == "sources") {
        if (value == "all") c.scenario.sources_all = true;
        else if (value == "target") c.scenario.sources_all = false;
        else throw Error("config: sources must be target or all");
    } else return false;
    return true;
}

}  // namespace

void apply_config_file(ExperimentConfig& config, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw Error("config file line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (!apply_key(config, key, value))
            throw Error("config file line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
}

std::string echo_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "nodes = " << c.n_nodes << '\n';
    out << "placement = " << to_string(c.placement) << '\n';
    out << "sigma = " << fmt(c.sigma) << '\n';
    out << "bias = " << fmt(c.bias) << '\n';
    out << "area_width = " << fmt(c.area.x) << '\n';
    out << "area_height = " << fmt(c.area.y) << '\n';
    out << "range = " << fmt(c.radio_range) << '\n';
    out << "energy = " << fmt(c.initial_energy) << '\n';
    out << "stack_size = " << c.stack_size << '\n';
    out << "max_packet = " << c.max_packet_bytes << '\n';
    out << "protocol = " << to_string(c.stack) << '\n';
    out << "duty_cycle = " << (c.stack.duty_cycle ? "on" : "off") << '\n';
    out << "data_rate = " << rate_token(c.energy.data_rate) << '\n';
    out << "p_tx = " << fmt(c.energy.p_tx) << '\n';
    out << "p_rx = " << fmt(c.energy.p_rx) << '\n';
    out << "p_idle = " << fmt(c.energy.p_idle) << '\n';
    out << "p_sleep = " << fmt(c.energy.p_sleep) << '\n';
    out << "wake_latency = " << fmt(c.energy.wake_latency) << '\n';
    out << "seed = " << c.seed << '\n';
    out << "duration = " << fmt(c.duration) << '\n';
    out << "runs = " << c.runs << '\n';
    out << "rays = " << c.scenario.rays_k0 << '\n';
    out << "kmax = " << c.scenario.rays_max << '\n';
    out << "corridor = " << fmt(c.scenario.corridor_width) << '\n';
    out << "desired_reports = " << fmt(c.scenario.esrt.desired_reports) << '\n';
    out << "epoch = " << fmt(c.scenario.esrt.epoch_length) << '\n';
    out << "epsilon = " << fmt(c.scenario.esrt.epsilon) << '\n';
    out << "f0 = " << fmt(c.scenario.esrt.f0) << '\n';
    out << "f_min = " << fmt(c.scenario.esrt.f_min) << '\n';
    out << "f_max = " << fmt(c.scenario.esrt.f_max) << '\n';
    out << "frame_length = " << c.scenario.frame_length << '\n';
    out << "miss_limit = " << c.scenario.miss_limit << '\n';
    out << "resync_frames = " << c.scenario.resync_frames << '\n';
    out << "setup_window = " << fmt(c.scenario.setup_window) << '\n';
    out << "search_period = " << fmt(c.scenario.search_period) << '\n';
    out << "report_rate = " << fmt(c.scenario.fixed_report_rate) << '\n';
    out << "report_bytes = " << c.scenario.report_bytes << '\n';
    out << "sources = " << (c.scenario.sources_all ? "all" : "target") << '\n';
    return out.str();
}

Topology build_topology(const ExperimentConfig& config, std::uint64_t seed) {
    PlacementSpec spec;
    spec.kind = config.placement;
    spec.n = config.n_nodes;
    spec.area = config.area;
    spec.seed = seed;
    spec.sigma = config.sigma;
    spec.bias = config.bias;
    std::vector<Vec2> positions = generate_placement(spec);

    // the farthest node from the sink holds the searched-for information
    std::size_t target = 0;
    double best = -1.0;
    for (std::size_t i = 1; i < positions.size(); ++i) {
        double d = distance(positions[i], positions[0]);
        if (d > best) {
            best = d;
            target = i;
        }
    }

    std::vector<NodeRecord> nodes;
    nodes.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        NodeRecord n;
        n.id = static_cast<NodeId>(i);
        n.position = positions[i];
        n.initial_energy = config.initial_energy;
        n.role = i == 0 ? NodeRole::Sink : (i == target ? NodeRole::Target : NodeRole::Sensor);
        nodes.push_back(n);
    }
    return Topology(std::move(nodes), config.radio_range, config.area);
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentOutput out;
    int found_runs = 0;

    for (int i = 0; i < config.runs; ++i) {
        std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(i);
        RunRow row;
        row.run_id = i;
        row.seed = run_seed;
        try {
            Topology topology = build_topology(config, run_seed);
            if (config.stack.duty_cycle && !topology.is_connected())
                throw Error("topology disconnected; tree setup impossible");
            MacParams mac;
            mac.stack_size = config.stack_size;
            mac.max_packet_bytes = config.max_packet_bytes;
            Simulator sim(topology, config.energy, mac, run_seed);
            ScenarioParams sp = config.scenario;
            sp.stack = config.stack;
            Scenario scenario(sim, sp);
            scenario.start();

            if (i == 0) {
                // 1 s bins of network-wide average power for the .dat series
                double prev = 0.0;
                for (double t = 1.0; t <= config.duration + 1e-9; t += 1.0) {
                    sim.run_until(std::min(t, config.duration));
                    double now_total = sim.total_consumed();
                    out.power_series.push_back({sim.now(), now_total - prev});
                    prev = now_total;
                }
            }
            row.record = scenario.finish(config.duration);
            if (i == 0) {
                for (const SearchResult& s : scenario.searches())
                    if (s.found && s.latency_sink)
                        out.latency_series.push_back(
                            {s.issued_at + *s.latency_sink, *s.latency_sink});
            }
            out.successful_runs++;
            if (row.record.discovery_found) found_runs++;
        } catch (const Error& e) {
            row.error = true;
            row.error_message = e.what();
        }
        out.rows.push_back(std::move(row));
    }
    if (out.successful_runs > 0)
        out.discovery_probability =
            static_cast<double>(found_runs) / static_cast<double>(out.successful_runs);
    return out;
}

static const char* kCsvHeader =
    "run_id,seed,n_nodes,placement,stack,data_rate,total_energy_J,latency_target_s,"
    "latency_sink_s,sent_bytes,recv_bytes,sending_bytes,drops,collisions,discovery_found,"
    "lifetime_s,dead_nodes";

std::string to_csv(const ExperimentConfig& config, const ExperimentOutput& out) {
    std::ostringstream csv;
    csv << kCsvHeader << '\n';
    std::vector<const MetricsRecord*> good;
    for (const RunRow& row : out.rows) {
        csv << row.run_id << ',' << row.seed << ',' << config.n_nodes << ','
            << to_string(config.placement) << ',' << to_string(config.stack) << ','
            << rate_token(config.energy.data_rate) << ',';
        if (row.error) {
            csv << ",,,,,,,,error,,\n";
            continue;
        }
        const MetricsRecord& r = row.record;
        good.push_back(&r);
        csv << fmt(r.total_energy) << ',' << fmt_opt(r.latency_target) << ','
            << fmt_opt(r.latency_sink) << ',' << r.sent_bytes << ',' << r.recv_bytes << ','
            << r.sending_bytes << ',' << r.drops << ',' << r.collisions << ','
            << (r.discovery_found ? 1 : 0) << ',' << fmt(r.lifetime) << ',' << r.dead_nodes
            << '\n';
    }
    if (!good.empty()) {
        std::vector<MetricsRecord> records;
        records.reserve(good.size());
        for (const auto* r : good) records.push_back(*r);
        MetricsAggregate agg = summarize(records);
        const MetricsRecord& m = agg.mean;
        // the aggregate row appends the discovery probability as an extra field
        csv << "aggregate," << config.seed << ',' << config.n_nodes << ','
            << to_string(config.placement) << ',' << to_string(config.stack) << ','
            << rate_token(config.energy.data_rate) << ',' << fmt(m.total_energy) << ','
            << fmt_opt(m.latency_target) << ',' << fmt_opt(m.latency_sink) << ','
            << m.sent_bytes << ',' << m.recv_bytes << ',' << m.sending_bytes << ',' << m.drops
            << ',' << m.collisions << ',' << fmt(agg.discovery_probability) << ','
            << fmt(m.lifetime) << ',' << m.dead_nodes << ',' << fmt(agg.discovery_probability)
            << '\n';
    }
    return csv.str();
}

std::string power_dat(const ExperimentOutput& out) {
    std::ostringstream dat;
    dat << "# time_s avg_power_W\n";
    for (const auto& [t, w] : out.power_series) dat << fmt(t) << ' ' << fmt(w) << '\n';
    return dat.str();
}

std::string latency_dat(const ExperimentOutput& out) {
    std::ostringstream dat;
    dat << "# completed_at_s latency_s\n";
    for (const auto& [t, l] : out.latency_series) dat << fmt(t) << ' ' << fmt(l) << '\n';
    return dat.str();
}

namespace {

struct CsvRunData {
    std::vector<double> energies;
    std::string n_nodes;
    std::string placement;
};

CsvRunData parse_run_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("compare: empty csv");
    std::vector<std::string> header;
    {
        std::stringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) header.push_back(cell);
    }
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("compare: csv lacks column " + name);
    };
    std::size_t energy_col = column("total_energy_J");
    std::size_t nodes_col = column("n_nodes");
    std::size_t placement_col = column("placement");
    std::size_t id_col = column("run_id");

    CsvRunData data;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() <= energy_col) continue;
        if (cells[id_col] == "aggregate") continue;
        if (cells[energy_col].empty()) continue;  // error row
        data.energies.push_back(std::stod(cells[energy_col]));
        data.n_nodes = cells[nodes_col];
        data.placement = cells[placement_col];
    }
    if (data.energies.empty()) throw Error("compare: csv holds no successful runs");
    return data;
}

}  // namespace

PowerComparison compare_power(const std::string& baseline_csv,
                              const std::string& candidate_csv) {
    CsvRunData base = parse_run_csv(baseline_csv);
    CsvRunData cand = parse_run_csv(candidate_csv);
    if (base.n_nodes != cand.n_nodes || base.placement != cand.placement)
        throw Error("compare: scenario keys differ (n_nodes " + base.n_nodes + " vs " +
                    cand.n_nodes + ", placement " + base.placement + " vs " + cand.placement +
                    ")");
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    PowerComparison cmp;
    cmp.baseline_mean = mean(base.energies);
    cmp.candidate_mean = mean(cand.energies);
    cmp.reduction_pct = 100.0 * (1.0 - cmp.candidate_mean / cmp.baseline_mean);
    cmp.in_band = cmp.reduction_pct >= 10.0 && cmp.reduction_pct <= 19.0;
    return cmp;
}

std::string format_comparison(const PowerComparison& cmp) {
    std::ostringstream out;
    out << "baseline_mean_J " << fmt(cmp.baseline_mean) << '\n';
    out << "candidate_mean_J " << fmt(cmp.candidate_mean) << '\n';
    out << "reduction_pct " << fmt(cmp.reduction_pct) << '\n';
    out << "within_10_19_band " << (cmp.in_band ? "yes" : "no") << '\n';
    if (!cmp.in_band)
        out << "note reduction lies outside the reported 10-19% calibration band\n";
    return out.str();
}

}  // namespace wsn
