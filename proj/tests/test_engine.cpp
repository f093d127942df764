#include <doctest.h>

#include <vector>

#include "wsn/simulator.hpp"

using namespace wsn;

namespace {

NodeRecord node(NodeId id, double x, double y, NodeRole role = NodeRole::Sensor,
                double energy = 100.0) {
    return {id, {x, y}, energy, role};
}

Packet packet(Simulator& sim, int bytes, NodeId src, PacketKind kind = PacketKind::Report) {
    Packet p;
    p.id = sim.next_packet_id();
    p.kind = kind;
    p.src = src;
    p.created_at = sim.now();
    p.size_bytes = bytes;
    return p;
}

// sink - B - C line where the ends are out of each other's range
Topology hidden_terminal() {
    return Topology({node(0, 0.0, 0.0, NodeRole::Sink), node(1, 10.0, 0.0),
                     node(2, 20.0, 0.0)},
                    10.0, {100.0, 100.0});
}

}  // namespace

TEST_CASE("event ordering: same-time events run in insertion order, past is an error") {
    Topology t({node(0, 0, 0, NodeRole::Sink)}, 10.0, {10, 10});
    Simulator sim(t, EnergyModel{}, MacParams{}, 1);

    std::vector<int> order;
    sim.schedule_timer(1.0, [&] { order.push_back(1); });
    sim.schedule_timer(0.5, [&] { order.push_back(0); });
    sim.schedule_timer(1.0, [&] { order.push_back(2); });
    sim.run_until(2.0);
    CHECK(order == std::vector<int>{0, 1, 2});

    CHECK_THROWS_AS(sim.schedule_timer(1.5, [] {}), EngineBug);  // now is 2.0
    sim.schedule_timer(2.0, [] {});                              // t == now is fine
}

TEST_CASE("125-byte packet occupies exactly 4 ms at 250 kbps and 1 ms at 1000 kbps") {
    EnergyModel m250;
    m250.data_rate = 250'000.0;
    CHECK(m250.serialization_time(125) == doctest::Approx(0.004).epsilon(1e-12));

    EnergyModel m1000;
    m1000.data_rate = 1'000'000.0;
    CHECK(m1000.serialization_time(125) == doctest::Approx(0.001).epsilon(1e-12));

    // observed on the wire: transmit start to delivery
    Topology t({node(0, 0, 0, NodeRole::Sink), node(1, 5, 0)}, 10.0, {10, 10});
    Simulator sim(t, m250, MacParams{}, 1);
    double delivered_at = -1.0;
    sim.on_deliver = [&](NodeId, const Packet&, NodeId) { delivered_at = sim.now(); };
    sim.transmit(0, packet(sim, 125, 0), 0.0);
    sim.run_until(1.0);
    CHECK(delivered_at == doctest::Approx(0.004).epsilon(1e-12));
}

TEST_CASE("hidden terminal: overlapping transmissions corrupt both at the shared receiver") {
    Topology t = hidden_terminal();
    Simulator sim(t, EnergyModel{}, MacParams{}, 1);
    std::vector<std::pair<NodeId, NodeId>> deliveries;  // (receiver, transmitter)
    sim.on_deliver = [&](NodeId r, const Packet&, NodeId from) {
        deliveries.push_back({r, from});
    };
    sim.transmit(0, packet(sim, 125, 0), 0.000);  // 0 -> air [0, 4ms]
    sim.transmit(2, packet(sim, 125, 2), 0.001);  // 2 -> air [1ms, 5ms], overlaps at node 1
    sim.run_until(1.0);

    CHECK(deliveries.empty());  // node 1 receives neither; 0 and 2 hear nothing of each other
    CHECK(sim.metrics().collisions() == 1);  // one overlap episode
    CHECK(sim.radio_state(0) == RadioState::Idle);
    CHECK(sim.radio_state(2) == RadioState::Idle);
}

TEST_CASE("non-overlapping transmissions both deliver") {
    Topology t = hidden_terminal();
    Simulator sim(t, EnergyModel{}, MacParams{}, 1);
    int deliveries = 0;
    sim.on_deliver = [&](NodeId, const Packet&, NodeId) { ++deliveries; };
    sim.transmit(0, packet(sim, 125, 0), 0.000);
    sim.transmit(2, packet(sim, 125, 2), 0.004);  // starts exactly at the first one's end
    sim.run_until(1.0);
    CHECK(deliveries == 2);
    CHECK(sim.metrics().collisions() == 0);
}

TEST_CASE("transmit preconditions: dead or sleeping senders are errors") {
    Topology t({node(0, 0, 0, NodeRole::Sink), node(1, 5, 0)}, 10.0, {10, 10});
    Simulator sim(t, EnergyModel{}, MacParams{}, 1);
    sim.radio_sleep(1);
    CHECK_THROWS_AS(sim.transmit(1, packet(sim, 10, 1)), EngineBug);
    CHECK_THROWS_AS(sim.transmit(0, packet(sim, 0, 0)), EngineBug);      // empty packet
    CHECK_THROWS_AS(sim.transmit(0, packet(sim, 4096, 0)), EngineBug);   // oversized
}

TEST_CASE("enqueue honors the stack size with tail drop") {
    Topology t({node(0, 0, 0, NodeRole::Sink)}, 10.0, {10, 10});
    MacParams mac;
    mac.stack_size = 8;
    Simulator sim(t, EnergyModel{}, mac, 1);
    for (int i = 0; i < 8; ++i) CHECK(sim.enqueue(0, packet(sim, 10, 0)));
    CHECK_FALSE(sim.enqueue(0, packet(sim, 10, 0)));
    CHECK(sim.metrics().drops() == 1);
    CHECK(sim.buffer_occupancy(0) == 8);
}

TEST_CASE("stack_size=1: first accepted, second dropped") {
    Topology t({node(0, 0, 0, NodeRole::Sink)}, 10.0, {10, 10});
    MacParams mac;
    mac.stack_size = 1;
    Simulator sim(t, EnergyModel{}, mac, 1);
    CHECK(sim.enqueue(0, packet(sim, 10, 0)));
    CHECK_FALSE(sim.enqueue(0, packet(sim, 10, 0)));
    CHECK(sim.metrics().drops() == 1);
}

TEST_CASE("run_until(0) with zero idle power consumes nothing") {
    Topology t({node(0, 0, 0, NodeRole::Sink), node(1, 5, 0)}, 10.0, {10, 10});
    EnergyModel m;
    m.p_idle = 1e-12;  // validate() needs p_sleep < p_idle
    m.p_sleep = 0.0;
    m.p_rx = 1e-12;
    MetricsRecord rec = Simulator(t, m, MacParams{}, 1).run_until(0.0);
    CHECK(rec.total_energy == 0.0);
    CHECK(rec.dead_nodes == 0);
}

TEST_CASE("energy is monotone and states partition time") {
    Topology t = hidden_terminal();
    EnergyModel m;
    Simulator sim(t, m, MacParams{}, 3);
    sim.transmit(0, packet(sim, 100, 0), 0.5);
    sim.radio_sleep(2);

    double last_total = 0.0;
    for (double horizon = 0.2; horizon <= 2.01; horizon += 0.2) {
        sim.run_until(horizon);
        double total = sim.total_consumed();
        CHECK(total >= last_total);
        last_total = total;
    }
    for (const auto& rec : t.nodes()) {
        double sum = sim.metrics().total_state_time(rec.id);
        CHECK(sum == doctest::Approx(sim.now()).epsilon(1e-12));
    }
}

TEST_CASE("nodes die exactly when their energy runs out") {
    Topology t({node(0, 0, 0, NodeRole::Sink, 100.0), node(1, 5, 0, NodeRole::Sensor, 0.045)},
               10.0, {10, 10});
    EnergyModel m;  // p_idle = 45 mW: node 1 dies at t = 1.0
    Simulator sim(t, m, MacParams{}, 1);
    MetricsRecord rec = sim.run_until(5.0);
    CHECK(rec.dead_nodes == 1);
    CHECK(rec.lifetime == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sim.radio_state(1) == RadioState::Dead);
    CHECK(sim.remaining_energy(1) == 0.0);
    CHECK(rec.per_node_energy.at(1) <= 0.045);
}

TEST_CASE("a sender dying mid-transmission delivers nothing") {
    Topology t({node(0, 0, 0, NodeRole::Sink, 100.0),
                node(1, 5, 0, NodeRole::Sensor, 0.060 * 0.002)},  // dies 2 ms into tx
               10.0, {10, 10});
    EnergyModel m;
    Simulator sim(t, m, MacParams{}, 1);
    int deliveries = 0;
    sim.on_deliver = [&](NodeId, const Packet&, NodeId) { ++deliveries; };
    sim.transmit(1, packet(sim, 125, 1), 0.0);  // needs 4 ms on air
    MetricsRecord rec = sim.run_until(1.0);
    CHECK(deliveries == 0);
    CHECK(rec.dead_nodes == 1);
    CHECK(rec.sent_bytes == 0);  // aborted transmissions never complete
}

TEST_CASE("same seed and config give identical runs") {
    Topology t = hidden_terminal();
    auto run = [&] {
        Simulator sim(t, EnergyModel{}, MacParams{}, 77);
        sim.csma_send(0, packet(sim, 64, 0));
        sim.csma_send(2, packet(sim, 64, 2));
        return sim.run_until(3.0);
    };
    MetricsRecord a = run();
    MetricsRecord b = run();
    CHECK(a.total_energy == b.total_energy);
    CHECK(a.sent_bytes == b.sent_bytes);
    CHECK(a.recv_bytes == b.recv_bytes);
    CHECK(a.collisions == b.collisions);
    CHECK(a.lifetime == b.lifetime);
}

TEST_CASE("collision outcome is independent of transmit call order") {
    Topology t = hidden_terminal();
    auto run = [&](bool swap) {
        Simulator sim(t, EnergyModel{}, MacParams{}, 5);
        int deliveries = 0;
        sim.on_deliver = [&](NodeId, const Packet&, NodeId) { ++deliveries; };
        if (swap) {
            sim.transmit(2, packet(sim, 125, 2), 0.001);
            sim.transmit(0, packet(sim, 125, 0), 0.000);
        } else {
            sim.transmit(0, packet(sim, 125, 0), 0.000);
            sim.transmit(2, packet(sim, 125, 2), 0.001);
        }
        sim.run_until(1.0);
        return std::pair{deliveries, sim.metrics().collisions()};
    };
    CHECK(run(false) == run(true));
}

TEST_CASE("arbitrated csma sends never collide with each other") {
    Topology t = hidden_terminal();
    Simulator sim(t, EnergyModel{}, MacParams{}, 9);
    int deliveries = 0;
    sim.on_deliver = [&](NodeId, const Packet&, NodeId) { ++deliveries; };
    sim.csma_send(0, packet(sim, 125, 0));
    sim.csma_send(2, packet(sim, 125, 2));
    sim.run_until(2.0);
    CHECK(deliveries == 2);  // node 1 hears both, serialized by the channel claim
    CHECK(sim.metrics().collisions() == 0);
}
