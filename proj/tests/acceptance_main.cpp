// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "wsn/esrt.hpp"
#include "wsn/experiment.hpp"
#include "wsn/flooding.hpp"
#include "wsn/irs.hpp"
#include "wsn/mac.hpp"
#include "wsn/scenario.hpp"

using namespace wsn;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

NodeRecord node(NodeId id, double x, double y, NodeRole role = NodeRole::Sensor,
                double energy = 1000.0) {
    return {id, {x, y}, energy, role};
}

// ---------------------------------------------------------------------------
// 1. headline power reduction on the reference scenario

void criterion_power_reduction() {
    double t0 = now_seconds();

    ExperimentConfig base;
    base.n_nodes = 100;
    base.placement = PlacementKind::UniformRandom;
    base.seed = 42;
    base.runs = 10;
    base.duration = 60.0;
    base.stack = *stack_from_string("flood");
    base.energy.data_rate = 250000.0;

    ExperimentConfig cand = base;
    cand.stack = *stack_from_string("zigbee-irs-esrt-flood");
    cand.energy.data_rate = 1000000.0;

    ExperimentOutput base_out = run_experiment(base);
    ExperimentOutput cand_out = run_experiment(cand);
    PowerComparison cmp =
        compare_power(to_csv(base, base_out), to_csv(cand, cand_out));

    double wall = now_seconds() - t0;
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "power reduction %.1f%% (baseline %.1f J, combined %.1f J); %s the 10-19%% "
                  "band%s; wall %.1f s",
                  cmp.reduction_pct, cmp.baseline_mean, cmp.candidate_mean,
                  cmp.in_band ? "inside" : "outside",
                  cmp.in_band ? "" : " [deviation flagged]", wall);
    report(1, cmp.reduction_pct >= 10.0 && wall < 30.0, detail);
}

// ---------------------------------------------------------------------------
// 2. duty-cycle energy bookkeeping on a zero-traffic run

void criterion_duty_cycle_energy() {
    ExperimentConfig c;
    c.n_nodes = 40;
    c.seed = 42;
    c.duration = 60.0;
    c.stack = *stack_from_string("zigbee-flood");
    c.scenario.instant_tree = true;  // the configured slot schedule, no setup traffic
    c.scenario.max_searches = 0;
    c.scenario.fixed_report_rate = 0.0;

    Topology topology = build_topology(c, c.seed);
    MacParams mac;
    Simulator duty(topology, c.energy, mac, c.seed);
    ScenarioParams sp = c.scenario;
    sp.stack = c.stack;
    Scenario scenario(duty, sp);
    scenario.start();
    MetricsRecord duty_rec = duty.run_until(c.duration);

    double t_sleep = 0.0, t_awake = 0.0;
    for (const auto& rec : topology.nodes()) {
        t_sleep += duty.metrics().state_time(rec.id, RadioState::Sleep);
        t_awake += duty.metrics().state_time(rec.id, RadioState::Idle) +
                   duty.metrics().state_time(rec.id, RadioState::WakingUp) +
                   duty.metrics().state_time(rec.id, RadioState::Receive) +
                   duty.metrics().state_time(rec.id, RadioState::Transmit);
    }

    Simulator always(topology, c.energy, mac, c.seed);
    MetricsRecord always_rec = always.run_until(c.duration);

    double measured = duty_rec.total_energy / always_rec.total_energy;
    double expected = (c.energy.p_sleep * t_sleep + c.energy.p_idle * t_awake) /
                      (c.energy.p_idle * c.n_nodes * c.duration);
    double rel = std::abs(measured - expected) / expected;

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "duty/always energy ratio %.6f vs bookkeeping %.6f (rel err %.2e, "
                  "sleep fraction %.3f)",
                  measured, expected, rel, t_sleep / (t_sleep + t_awake));
    report(2, rel <= 0.01, detail);
}

// ---------------------------------------------------------------------------
// 3. flooding oracle: receiver set == BFS set on 50 random connected topologies

Topology random_connected(std::mt19937_64& rng, int max_nodes, double range) {
    std::uniform_int_distribution<int> count(2, max_nodes);
    std::uniform_real_distribution<double> coord(0.0, 100.0);
    for (;;) {
        int n = count(rng);
        std::vector<NodeRecord> nodes;
        for (int i = 0; i < n; ++i)
            nodes.push_back(node(i, coord(rng), coord(rng),
                                 i == 0 ? NodeRole::Sink : NodeRole::Sensor));
        Topology t(std::move(nodes), range, {100.0, 100.0});
        if (t.is_connected()) return t;
    }
}

void criterion_flooding_oracle() {
    double t0 = now_seconds();
    std::mt19937_64 rng(424242);
    int exact = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        Topology t = random_connected(rng, 30, 28.0);
        MacParams mac;
        mac.stack_size = 100000;  // unlimited buffers
        Simulator sim(t, EnergyModel{}, mac, 9000 + trial);
        CsmaService service(sim);
        Flooding flooding(sim, Flooding::SendMode::Buffered, &service);
        service.on_sent = [&](NodeId, const Packet& p) { flooding.note_transmission(p); };
        sim.on_deliver = [&](NodeId r, const Packet& p, NodeId from) {
            flooding.handle_flood_packet(r, p, from);
        };
        Packet p;
        p.id = sim.next_packet_id();
        p.kind = PacketKind::Report;
        p.src = t.sink();
        p.size_bytes = 100;
        flooding.start_flood(t.sink(), std::move(p));
        sim.run_until(60.0);

        std::set<NodeId> expected;
        for (const auto& rec : t.nodes()) expected.insert(rec.id);  // connected: everyone
        std::set<NodeId> got = flooding.stats(1).receivers;
        got.insert(t.sink());
        if (got == expected) ++exact;
    }
    double wall = now_seconds() - t0;
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "flood receiver set == BFS set on %d/%d topologies; wall %.1f s", exact,
                  trials, wall);
    report(3, exact == trials && wall < 5.0, detail);
}

// ---------------------------------------------------------------------------
// 4 & 5. IRS economy and escalation monotonicity over seeded 200-node fields

struct SearchCase {
    Topology topology;
    NodeId target;
};

// uniform 200-node field with the target on the round-1 ray-0 corridor
std::optional<SearchCase> economy_case(std::uint64_t seed) {
    PlacementSpec spec;
    spec.kind = PlacementKind::UniformRandom;
    spec.n = 200;
    spec.area = {500.0, 500.0};
    spec.seed = seed;
    auto positions = generate_placement(spec);

    Vec2 center = positions[0];
    std::size_t target = 0;
    double best_proj = 40.0;
    for (std::size_t i = 1; i < positions.size(); ++i) {
        double proj = positions[i].x - center.x;
        double perp = std::abs(positions[i].y - center.y);
        if (perp <= 75.0 / 2.0 && proj > best_proj) {
            best_proj = proj;
            target = i;
        }
    }
    if (target == 0) return std::nullopt;

    std::vector<NodeRecord> nodes;
    for (std::size_t i = 0; i < positions.size(); ++i)
        nodes.push_back(node(static_cast<NodeId>(i), positions[i].x, positions[i].y,
                             i == 0 ? NodeRole::Sink
                                    : (i == target ? NodeRole::Target : NodeRole::Sensor)));
    Topology t(std::move(nodes), 75.0, {500.0, 500.0});
    if (!t.is_connected()) return std::nullopt;
    return SearchCase{std::move(t), static_cast<NodeId>(target)};
}

struct SearchRun {
    SearchResult result;
};

SearchResult run_search_on(const Topology& t, NodeId target, IrsSearch::Params params,
                           std::uint64_t seed) {
    Simulator sim(t, EnergyModel{}, MacParams{}, seed);
    CsmaService service(sim);
    Flooding flooding(sim, Flooding::SendMode::Buffered, &service);
    service.on_sent = [&](NodeId, const Packet& p) { flooding.note_transmission(p); };
    if (params.frame_duration <= 0.0)
        params.frame_duration = 16.0 * (sim.energy_model().serialization_time(128) + 0.001);
    IrsSearch irs(sim, params, flooding, nullptr);
    sim.on_deliver = [&](NodeId r, const Packet& p, NodeId from) {
        if (p.kind == PacketKind::Query) {
            const auto* q = std::get_if<QueryPayload>(&p.meta);
            if (q && q->flood_round) {
                flooding.handle_flood_packet(r, p, from);
                irs.on_flood_query(r, p, from);
            } else {
                irs.on_deliver(r, p, from);
            }
        } else if (p.kind == PacketKind::Reply) {
            irs.on_deliver(r, p, from);
        }
    };
    SearchResult out;
    irs.start_search([target](NodeId id) { return id == target; },
                     [&](const SearchResult& r) { out = r; });
    sim.run_until(600.0);
    return out;
}

void criterion_irs_economy() {
    double t0 = now_seconds();
    int found_cases = 0, strict_wins = 0, containment = 0;
    std::uint64_t seed = 1;
    while (found_cases < 100 && seed < 2000) {
        auto c = economy_case(seed++);
        if (!c) continue;

        IrsSearch::Params ray_params;
        SearchResult ray = run_search_on(c->topology, c->target, ray_params, 7000 + seed);
        if (!ray.found) continue;

        IrsSearch::Params flood_params;
        flood_params.flood_only = true;
        SearchResult flood = run_search_on(c->topology, c->target, flood_params, 8000 + seed);
        if (!flood.found) continue;

        ++found_cases;
        if (ray.transmissions < flood.transmissions) ++strict_wins;
        if (ray.max_round_transmissions <= flood.transmissions) ++containment;
    }
    double wall = now_seconds() - t0;
    char detail[192];
    std::snprintf(detail, sizeof(detail),
                  "IRS vs flood search on %d found cases: strict wins %d (need >= 95), "
                  "containment %d (need 100); wall %.1f s",
                  found_cases, strict_wins, containment, wall);
    report(4, found_cases == 100 && strict_wins >= 95 && containment == 100, detail);
}

void criterion_irs_escalation() {
    // single-round searches with k rays; random off-corridor targets
    const int ks[4] = {4, 8, 16, 32};
    double p[4] = {0, 0, 0, 0};
    int population = 0;
    std::uint64_t seed = 1;
    std::mt19937_64 pick_rng(5150);
    while (population < 100 && seed < 2000) {
        PlacementSpec spec;
        spec.kind = PlacementKind::UniformRandom;
        spec.n = 200;
        spec.area = {500.0, 500.0};
        spec.seed = seed++;
        auto positions = generate_placement(spec);
        std::uniform_int_distribution<std::size_t> pick(1, positions.size() - 1);
        std::size_t target = pick(pick_rng);
        std::vector<NodeRecord> nodes;
        for (std::size_t i = 0; i < positions.size(); ++i)
            nodes.push_back(node(static_cast<NodeId>(i), positions[i].x, positions[i].y,
                                 i == 0 ? NodeRole::Sink
                                        : (i == target ? NodeRole::Target : NodeRole::Sensor)));
        Topology t(std::move(nodes), 75.0, {500.0, 500.0});
        if (!t.is_connected()) continue;
        ++population;

        for (int i = 0; i < 4; ++i) {
            IrsSearch::Params params;
            params.k0 = ks[i];
            params.k_max = ks[i];
            params.max_rounds = 1;
            SearchResult r =
                run_search_on(t, static_cast<NodeId>(target), params, 100000 + seed);
            if (r.found) p[i] += 1.0;
        }
    }
    for (double& x : p) x /= population;
    bool ok = population == 100;
    for (int i = 0; i + 1 < 4; ++i)
        if (p[i + 1] < p[i] - 0.05) ok = false;
    char detail[192];
    std::snprintf(detail, sizeof(detail),
                  "discovery probability p(4)=%.2f p(8)=%.2f p(16)=%.2f p(32)=%.2f over %d "
                  "seeds; doubling never loses more than 0.05",
                  p[0], p[1], p[2], p[3], population);
    report(5, ok, detail);
}

// ---------------------------------------------------------------------------
// 6. ESRT convergence under a stationary delivery ratio

void criterion_esrt_convergence() {
    const double delivery = 0.8;
    const double R = 100.0;
    const double sources = 79.0;
    const double epoch = 2.0;
    const double f_min = 0.1, f_max = 100.0, eps = 0.05;

    bool ok = true;
    std::string detail = "OOR entry epochs:";
    for (double f0 : {f_min, 1.0, f_max}) {
        double f = f0;
        int entered_at = -1;
        bool stayed = true;
        for (int i = 1; i <= 40; ++i) {
            double eta = delivery * f * sources * epoch / R;
            EsrtRegion region = classify_region(eta, false, eps);
            f = update_frequency(f, region, eta, f_min, f_max);
            bool in_band = std::abs(delivery * f * sources * epoch / R - 1.0) <= eps;
            if (in_band && entered_at < 0) entered_at = i;
            if (entered_at > 0 && i <= entered_at + 20 && !in_band) stayed = false;
        }
        if (entered_at < 0 || entered_at > 20 || !stayed) ok = false;
        char buf[48];
        std::snprintf(buf, sizeof(buf), " f0=%g->%d", f0, entered_at);
        detail += buf;
    }
    report(6, ok, detail + " (need <= 20, then stable for 20)");
}

// ---------------------------------------------------------------------------
// 7. serialization timing and the wake-to-transmit gap

void criterion_timing() {
    bool ok = true;
    std::string detail;

    for (double rate : {250000.0, 1000000.0}) {
        Topology t({node(0, 0, 0, NodeRole::Sink), node(1, 5, 0)}, 10.0, {100, 100});
        EnergyModel em;
        em.data_rate = rate;
        Simulator sim(t, em, MacParams{}, 1);
        double delivered = -1.0;
        sim.on_deliver = [&](NodeId, const Packet&, NodeId) { delivered = sim.now(); };
        Packet p;
        p.id = sim.next_packet_id();
        p.kind = PacketKind::Report;
        p.src = 0;
        p.size_bytes = 125;
        sim.transmit(0, p, 0.0);
        sim.run_until(1.0);
        double expected = rate == 250000.0 ? 0.004 : 0.001;
        if (std::abs(delivered - expected) > 1e-12) ok = false;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "125 B @ %gk -> %.6f s; ", rate / 1000.0, delivered);
        detail += buf;
    }

    // min observed gap between leaving Sleep and entering Transmit, duty run
    ExperimentConfig c;
    c.n_nodes = 30;
    c.seed = 42;
    c.duration = 20.0;
    c.stack = *stack_from_string("zigbee-esrt-flood");
    c.energy.data_rate = 1000000.0;
    c.scenario.setup_window = 1.0;
    c.scenario.esrt.f0 = 2.0;
    c.scenario.sources_all = true;
    Topology topology = build_topology(c, c.seed);
    Simulator sim(topology, c.energy, MacParams{}, c.seed);
    ScenarioParams sp = c.scenario;
    sp.stack = c.stack;
    Scenario scenario(sim, sp);
    std::map<NodeId, double> woke_at;
    double min_gap = 1e9;
    long transitions = 0;
    sim.on_state_change = [&](NodeId id, RadioState from, RadioState to, double when) {
        if (from == RadioState::Sleep) woke_at[id] = when;
        if (to == RadioState::Transmit) {
            auto it = woke_at.find(id);
            if (it != woke_at.end()) {
                min_gap = std::min(min_gap, when - it->second);
                ++transitions;
            }
        }
    };
    scenario.start();
    sim.run_until(c.duration);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "min sleep->transmit gap %.4f s over %ld wakes (need >= 0.015)",
                  min_gap, transitions);
    detail += buf;
    if (!(transitions > 0 && min_gap >= 0.015)) ok = false;
    report(7, ok, detail);
}

// ---------------------------------------------------------------------------
// 8. determinism: byte-identical CSV across executions

void criterion_determinism() {
    ExperimentConfig c;
    c.n_nodes = 40;
    c.seed = 42;
    c.runs = 2;
    c.duration = 15.0;
    c.stack = *stack_from_string("zigbee-irs-esrt-flood");
    c.energy.data_rate = 1000000.0;
    c.scenario.setup_window = 1.0;
    c.scenario.search_period = 5.0;

    std::string a = to_csv(c, run_experiment(c));
    std::string b = to_csv(c, run_experiment(c));

    ExperimentConfig f;
    f.n_nodes = 40;
    f.seed = 7;
    f.runs = 2;
    f.duration = 15.0;
    f.stack = *stack_from_string("flood");
    std::string fa = to_csv(f, run_experiment(f));
    std::string fb = to_csv(f, run_experiment(f));

    bool ok = a == b && fa == fb;
    report(8, ok, ok ? "combined and baseline configs reproduce byte-identical CSV"
                     : "CSV outputs differ between executions");
}

// ---------------------------------------------------------------------------
// 9. energy conservation and the per-node consumption bound

void criterion_energy_conservation() {
    bool ok = true;
    std::string detail;
    int which = 0;
    for (const char* stack : {"flood", "zigbee-irs-esrt-flood"}) {
        ExperimentConfig c;
        c.n_nodes = 40;
        c.seed = 42;
        c.duration = 20.0;
        c.stack = *stack_from_string(stack);
        c.initial_energy = which == 0 ? 0.5 : 10.0;  // the first run kills nodes
        if (c.stack.duty_cycle) c.energy.data_rate = 1000000.0;
        c.scenario.setup_window = 1.0;
        c.scenario.sources_all = true;
        c.scenario.esrt.f0 = 2.0;
        ++which;

        Topology topology = build_topology(c, c.seed);
        Simulator sim(topology, c.energy, MacParams{}, c.seed);
        ScenarioParams sp = c.scenario;
        sp.stack = c.stack;
        Scenario scenario(sim, sp);
        scenario.start();
        MetricsRecord rec = scenario.finish(c.duration);

        double from_durations = sim.metrics().energy_from_durations(c.energy);
        double rel = std::abs(from_durations - rec.total_energy) /
                     std::max(rec.total_energy, 1e-30);
        if (rel > 1e-9) ok = false;
        for (const auto& [id, joules] : rec.per_node_energy)
            if (joules > topology.node(id).initial_energy) ok = false;

        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s: rel err %.2e, dead %d; ", stack, rel,
                      rec.dead_nodes);
        detail += buf;
    }
    report(9, ok, detail + "per-node consumption <= initial energy everywhere");
}

}  // namespace

int main() {
    criterion_power_reduction();
    criterion_duty_cycle_energy();
    criterion_flooding_oracle();
    criterion_irs_economy();
    criterion_irs_escalation();
    criterion_esrt_convergence();
    criterion_timing();
    criterion_determinism();
    criterion_energy_conservation();
    if (failures == 0)
        std::printf("all 9 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
