#pragma once

#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "wsn/types.hpp"

namespace wsn {

// Immutable node set + positions + radio range. Adjacency is the unit-disk
// graph: u ~ v iff euclidean distance <= radio_range, boundary inclusive.
class Topology {
  public:
    Topology(std::vector<NodeRecord> nodes, double radio_range, Vec2 area);

    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const NodeRecord& node(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }
    double radio_range() const { return radio_range_; }
    Vec2 area() const { return area_; }
    NodeId sink() const { return sink_; }
    std::optional<NodeId> target() const { return target_; }

    bool contains(NodeId id) const;
    bool adjacent(NodeId a, NodeId b) const;

    // Node ids at distance <= radio_range, excluding id itself. Sorted by id.
    const std::vector<NodeId>& neighbors(NodeId id) const;

    // True iff BFS from the sink reaches every node.
    bool is_connected() const;

    // BFS hop distance from the sink; -1 for unreachable nodes.
    std::vector<int> hop_depths() const;

    // Max pairwise BFS hop distance over the connected component of the sink.
    int diameter_hops() const;

    std::string serialize() const;
    static Topology parse(std::istream& in);
    static Topology parse(const std::string& text);

  private:
    std::vector<NodeRecord> nodes_;
    double radio_range_;
    Vec2 area_;
    NodeId sink_{kNoNode};
    std::optional<NodeId> target_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::vector<std::vector<NodeId>> adjacency_;  // by node index, values are ids

    std::size_t index_of(NodeId id) const;
};

}  // namespace wsn
