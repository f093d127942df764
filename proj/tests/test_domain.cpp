#include <doctest.h>

#include <random>
#include <set>

#include "wsn/topology.hpp"

using namespace wsn;

namespace {

NodeRecord node(NodeId id, double x, double y, NodeRole role = NodeRole::Sensor,
                double energy = 1.0) {
    return {id, {x, y}, energy, role};
}

Topology line3(double spacing, double range) {
    // sink - A - B, collinear
    return Topology({node(0, 0.0, 50.0, NodeRole::Sink), node(1, spacing, 50.0),
                     node(2, 2.0 * spacing, 50.0)},
                    range, {1000.0, 100.0});
}

// independent connectivity oracle
struct UnionFind {
    std::vector<int> up;
    explicit UnionFind(int n) : up(n) {
        for (int i = 0; i < n; ++i) up[i] = i;
    }
    int find(int x) { return up[x] == x ? x : up[x] = find(up[x]); }
    void join(int a, int b) { up[find(a)] = find(b); }
};

Topology random_topology(std::mt19937_64& rng, int max_nodes, double range) {
    std::uniform_int_distribution<int> count(1, max_nodes);
    std::uniform_real_distribution<double> coord(0.0, 100.0);
    int n = count(rng);
    std::vector<NodeRecord> nodes;
    for (int i = 0; i < n; ++i)
        nodes.push_back(node(i, coord(rng), coord(rng),
                             i == 0 ? NodeRole::Sink : NodeRole::Sensor));
    return Topology(std::move(nodes), range, {100.0, 100.0});
}

}  // namespace

TEST_CASE("neighbors at exactly radio range are adjacent (inclusive boundary)") {
    Topology t({node(0, 0.0, 0.0, NodeRole::Sink), node(1, 10.0, 0.0)}, 10.0, {100.0, 100.0});
    CHECK(t.neighbors(0) == std::vector<NodeId>{1});
    CHECK(t.neighbors(1) == std::vector<NodeId>{0});
}

TEST_CASE("isolated node has no neighbors") {
    Topology t({node(0, 0.0, 0.0, NodeRole::Sink), node(1, 50.0, 0.0)}, 10.0, {100.0, 100.0});
    CHECK(t.neighbors(1).empty());
}

TEST_CASE("three collinear nodes spaced exactly one range apart") {
    // pairwise distances: 0-1 = 10, 1-2 = 10, 0-2 = 20; only the middle sees both
    Topology t = line3(10.0, 10.0);
    CHECK(t.neighbors(0) == std::vector<NodeId>{1});
    CHECK(t.neighbors(1) == std::vector<NodeId>{0, 2});
    CHECK(t.neighbors(2) == std::vector<NodeId>{1});
}

TEST_CASE("neighbors of an unknown id is an error") {
    Topology t({node(0, 0.0, 0.0, NodeRole::Sink)}, 10.0, {100.0, 100.0});
    CHECK_THROWS_AS(t.neighbors(42), Error);
}

TEST_CASE("is_connected: singleton, disconnected pair, 3x3 grid at spacing=range") {
    Topology single({node(0, 5.0, 5.0, NodeRole::Sink)}, 10.0, {100.0, 100.0});
    CHECK(single.is_connected());

    Topology apart({node(0, 0.0, 0.0, NodeRole::Sink), node(1, 50.0, 0.0)}, 10.0,
                   {100.0, 100.0});
    CHECK_FALSE(apart.is_connected());

    // BFS over the 9-node lattice: every node within one hop of a grid neighbor
    std::vector<NodeRecord> grid;
    int id = 0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            grid.push_back(node(id++, 10.0 * c, 10.0 * r,
                                (r == 0 && c == 0) ? NodeRole::Sink : NodeRole::Sensor));
    Topology lattice(std::move(grid), 10.0, {100.0, 100.0});
    CHECK(lattice.is_connected());
}

TEST_CASE("topology construction rejects bad inputs") {
    CHECK_THROWS_AS(Topology({node(0, 0, 0, NodeRole::Sink), node(0, 1, 1)}, 10.0, {10, 10}),
                    Error);  // duplicate id
    CHECK_THROWS_AS(Topology({node(0, 0, 0)}, 10.0, {10, 10}), Error);  // no sink
    CHECK_THROWS_AS(
        Topology({node(0, 0, 0, NodeRole::Sink), node(1, 1, 1, NodeRole::Sink)}, 10.0, {10, 10}),
        Error);  // two sinks
    CHECK_THROWS_AS(Topology({node(0, 20, 0, NodeRole::Sink)}, 10.0, {10, 10}),
                    Error);  // outside area
    CHECK_THROWS_AS(Topology({node(0, 5, 5, NodeRole::Sink)}, -1.0, {10, 10}), Error);
}

TEST_CASE("adjacency is symmetric and never reflexive on random topologies") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        Topology t = random_topology(rng, 25, 30.0);
        for (const auto& a : t.nodes()) {
            const auto& nbs = t.neighbors(a.id);
            CHECK(std::find(nbs.begin(), nbs.end(), a.id) == nbs.end());
            for (NodeId b : nbs) {
                const auto& back = t.neighbors(b);
                CHECK(std::find(back.begin(), back.end(), a.id) != back.end());
            }
        }
    }
}

TEST_CASE("is_connected agrees with a union-find oracle on 100 random topologies") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Topology t = random_topology(rng, 30, 25.0);
        int n = static_cast<int>(t.size());
        UnionFind uf(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (distance(t.nodes()[i].position, t.nodes()[j].position) <= 25.0)
                    uf.join(i, j);
        bool oracle = true;
        for (int i = 1; i < n; ++i)
            if (uf.find(i) != uf.find(0)) oracle = false;
        CHECK(t.is_connected() == oracle);
    }
}

TEST_CASE("topology text format round-trips and matches the golden form") {
    Topology t({node(0, 5.0, 5.0, NodeRole::Sink, 2.5), node(1, 1.25, 9.0),
                node(7, 3.0, 0.5, NodeRole::Target)},
               4.5, {10.0, 10.0});
    std::string text = t.serialize();
    CHECK(text ==
          "area 10 10 range 4.5\n"
          "node 0 5 5 2.5 sink\n"
          "node 1 1.25 9 1 sensor\n"
          "node 7 3 0.5 1 target\n");
    Topology back = Topology::parse(text);
    CHECK(back.serialize() == text);
    CHECK(back.radio_range() == t.radio_range());
    CHECK(back.sink() == 0);
    CHECK(back.target() == std::optional<NodeId>{7});
}
