#include "wsn/topology.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <istream>
#include <sstream>
#include <unordered_map>

namespace wsn {

const char* to_string(NodeRole role) {
    switch (role) {
        case NodeRole::Sink: return "sink";
        case NodeRole::Sensor: return "sensor";
        case NodeRole::Target: return "target";
    }
    return "?";
}

std::optional<NodeRole> role_from_string(const std::string& s) {
    if (s == "sink") return NodeRole::Sink;
    if (s == "sensor") return NodeRole::Sensor;
    if (s == "target") return NodeRole::Target;
    return std::nullopt;
}

const char* to_string(PacketKind kind) {
    switch (kind) {
        case PacketKind::Query: return "query";
        case PacketKind::Report: return "report";
        case PacketKind::Reply: return "reply";
        case PacketKind::Control: return "control";
    }
    return "?";
}

namespace {

// Stable float formatting for the golden-file text format.
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

Topology::Topology(std::vector<NodeRecord> nodes, double radio_range, Vec2 area)
    : nodes_(std::move(nodes)), radio_range_(radio_range), area_(area) {
    if (nodes_.empty()) throw Error("topology: node set is empty");
    if (radio_range_ <= 0.0) throw Error("topology: radio_range must be > 0");
    if (area_.x <= 0.0 || area_.y <= 0.0) throw Error("topology: area must be positive");

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const NodeRecord& n = nodes_[i];
        if (n.id < 0) throw Error("topology: node id " + std::to_string(n.id) + " is negative");
        if (!index_.emplace(n.id, i).second)
            throw Error("topology: duplicate node id " + std::to_string(n.id));
        if (n.position.x < 0.0 || n.position.x > area_.x || n.position.y < 0.0 ||
            n.position.y > area_.y)
            throw Error("topology: node " + std::to_string(n.id) + " lies outside the area");
        if (n.initial_energy <= 0.0)
            throw Error("topology: node " + std::to_string(n.id) + " needs initial_energy > 0");
        if (n.role == NodeRole::Sink) {
            if (sink_ != kNoNode) throw Error("topology: more than one sink");
            sink_ = n.id;
        } else if (n.role == NodeRole::Target) {
            if (target_) throw Error("topology: more than one target");
            target_ = n.id;
        }
    }
    if (sink_ == kNoNode) throw Error("topology: exactly one sink is required");

    // Unit-disk adjacency, boundary inclusive, never self-adjacent.
    adjacency_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
            if (distance(nodes_[i].position, nodes_[j].position) <= radio_range_) {
                adjacency_[i].push_back(nodes_[j].id);
                adjacency_[j].push_back(nodes_[i].id);
            }
        }
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::size_t Topology::index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error("topology: unknown node id " + std::to_string(id));
    return it->second;
}

const NodeRecord& Topology::node(NodeId id) const { return nodes_[index_of(id)]; }

bool Topology::contains(NodeId id) const { return index_.count(id) != 0; }

bool Topology::adjacent(NodeId a, NodeId b) const {
    if (a == b) return false;
    const auto& adj = adjacency_[index_of(a)];
    return std::binary_search(adj.begin(), adj.end(), b);
}

const std::vector<NodeId>& Topology::neighbors(NodeId id) const {
    return adjacency_[index_of(id)];
}

std::vector<int> Topology::hop_depths() const {
    std::vector<int> depth(nodes_.size(), -1);
    std::deque<std::size_t> frontier;
    depth[index_of(sink_)] = 0;
    frontier.push_back(index_of(sink_));
    while (!frontier.empty()) {
        std::size_t u = frontier.front();
        frontier.pop_front();
        for (NodeId v : adjacency_[u]) {
            std::size_t vi = index_.at(v);
            if (depth[vi] < 0) {
                depth[vi] = depth[u] + 1;
                frontier.push_back(vi);
            }
        }
    }
    return depth;
}

bool Topology::is_connected() const {
    for (int d : hop_depths())
        if (d < 0) return false;
    return true;
}

int Topology::diameter_hops() const {
    int diameter = 0;
    std::vector<int> depth(nodes_.size());
    for (std::size_t s = 0; s < nodes_.size(); ++s) {
        std::fill(depth.begin(), depth.end(), -1);
        std::deque<std::size_t> frontier{s};
        depth[s] = 0;
        while (!frontier.empty()) {
            std::size_t u = frontier.front();
            frontier.pop_front();
            diameter = std::max(diameter, depth[u]);
            for (NodeId v : adjacency_[u]) {
                std::size_t vi = index_.at(v);
                if (depth[vi] < 0) {
                    depth[vi] = depth[u] + 1;
                    frontier.push_back(vi);
                }
            }
        }
    }
    return diameter;
}

std::string Topology::serialize() const {
    std::ostringstream out;
    out << "area " << fmt_double(area_.x) << ' ' << fmt_double(area_.y) << " range "
        << fmt_double(radio_range_) << '\n';
    for (const auto& n : nodes_) {
        out << "node " << n.id << ' ' << fmt_double(n.position.x) << ' '
            << fmt_double(n.position.y) << ' ' << fmt_double(n.initial_energy) << ' '
            << to_string(n.role) << '\n';
    }
    return out.str();
}

Topology Topology::parse(std::istream& in) {
    std::string word;
    if (!(in >> word) || word != "area") throw Error("topology parse: expected 'area'");
    Vec2 area;
    double range = 0.0;
    if (!(in >> area.x >> area.y)) throw Error("topology parse: bad area");
    if (!(in >> word) || word != "range") throw Error("topology parse: expected 'range'");
    if (!(in >> range)) throw Error("topology parse: bad range");

    std::vector<NodeRecord> nodes;
    while (in >> word) {
        if (word != "node") throw Error("topology parse: expected 'node', got '" + word + "'");
        NodeRecord n;
        std::string role;
        if (!(in >> n.id >> n.position.x >> n.position.y >> n.initial_energy >> role))
            throw Error("topology parse: bad node line");
        auto r = role_from_string(role);
        if (!r) throw Error("topology parse: unknown role '" + role + "'");
        n.role = *r;
        nodes.push_back(n);
    }
    return Topology(std::move(nodes), range, area);
}

Topology Topology::parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

}  // namespace wsn
