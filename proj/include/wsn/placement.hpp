#pragma once

#include <cstdint>
#include <vector>

#include "wsn/types.hpp"

namespace wsn {

enum class PlacementKind { Grid, UniformRandom, SimpleDiffusion, BiasedRandom };

const char* to_string(PlacementKind kind);
std::optional<PlacementKind> placement_from_string(const std::string& s);

struct PlacementSpec {
    PlacementKind kind{PlacementKind::UniformRandom};
    int n{2};
    Vec2 area{500.0, 500.0};
    std::uint64_t seed{0};
    double sigma{0.0};  // SimpleDiffusion std dev; <= 0 means width/4
    double bias{0.5};   // BiasedRandom mixture weight, in [0, 1]
};

// Deterministic for a fixed spec. The first position is the sink: the exact
// area center for random kinds, the lattice point nearest the center for Grid.
std::vector<Vec2> generate_placement(const PlacementSpec& spec);

}  // namespace wsn
