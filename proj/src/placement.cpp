#include "wsn/placement.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace wsn {

const char* to_string(PlacementKind kind) {
    switch (kind) {
        case PlacementKind::Grid: return "grid";
        case PlacementKind::UniformRandom: return "uniform";
        case PlacementKind::SimpleDiffusion: return "diffusion";
        case PlacementKind::BiasedRandom: return "biased";
    }
    return "?";
}

std::optional<PlacementKind> placement_from_string(const std::string& s) {
    if (s == "grid") return PlacementKind::Grid;
    if (s == "uniform") return PlacementKind::UniformRandom;
    if (s == "diffusion") return PlacementKind::SimpleDiffusion;
    if (s == "biased") return PlacementKind::BiasedRandom;
    return std::nullopt;
}

namespace {

Vec2 draw_uniform(std::mt19937_64& rng, Vec2 area) {
    std::uniform_real_distribution<double> ux(0.0, area.x);
    std::uniform_real_distribution<double> uy(0.0, area.y);
    double x = ux(rng);
    double y = uy(rng);  // fixed draw order keeps output seed-stable
    return {x, y};
}

// 2-D Gaussian centered on the sink, rejection-sampled into the area.
Vec2 draw_diffusion(std::mt19937_64& rng, Vec2 area, Vec2 center, double sigma) {
    std::normal_distribution<double> gx(center.x, sigma);
    std::normal_distribution<double> gy(center.y, sigma);
    for (;;) {
        double x = gx(rng);
        double y = gy(rng);
        if (x >= 0.0 && x <= area.x && y >= 0.0 && y <= area.y) return {x, y};
    }
}

std::vector<Vec2> grid_positions(int n, Vec2 area) {
    int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    std::vector<Vec2> lattice;
    lattice.reserve(n);
    for (int row = 0; row < side && static_cast<int>(lattice.size()) < n; ++row) {
        for (int col = 0; col < side && static_cast<int>(lattice.size()) < n; ++col) {
            lattice.push_back({(col + 0.5) * area.x / side, (row + 0.5) * area.y / side});
        }
    }
    // the lattice point nearest the center becomes the sink (index 0)
    Vec2 center{area.x / 2.0, area.y / 2.0};
    std::size_t best = 0;
    for (std::size_t i = 1; i < lattice.size(); ++i) {
        if (distance(lattice[i], center) < distance(lattice[best], center)) best = i;
    }
    std::swap(lattice[0], lattice[best]);
    return lattice;
}

}  // namespace

std::vector<Vec2> generate_placement(const PlacementSpec& spec) {
    if (spec.n < 2) throw Error("placement: n must be >= 2");
    if (spec.area.x <= 0.0 || spec.area.y <= 0.0) throw Error("placement: area must be positive");
    if (spec.bias < 0.0 || spec.bias > 1.0) throw Error("placement: bias must be in [0, 1]");

    if (spec.kind == PlacementKind::Grid) return grid_positions(spec.n, spec.area);

    Vec2 center{spec.area.x / 2.0, spec.area.y / 2.0};
    double sigma = spec.sigma > 0.0 ? spec.sigma : spec.area.x / 4.0;

    std::mt19937_64 rng(spec.seed);
    std::vector<Vec2> out;
    out.reserve(spec.n);
    out.push_back(center);  // sink
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    while (static_cast<int>(out.size()) < spec.n) {
        switch (spec.kind) {
            case PlacementKind::UniformRandom:
                out.push_back(draw_uniform(rng, spec.area));
                break;
            case PlacementKind::SimpleDiffusion:
                out.push_back(draw_diffusion(rng, spec.area, center, sigma));
                break;
            case PlacementKind::BiasedRandom:
                if (coin(rng) < spec.bias)
                    out.push_back(draw_diffusion(rng, spec.area, center, sigma));
                else
                    out.push_back(draw_uniform(rng, spec.area));
                break;
            case PlacementKind::Grid:
                break;  // handled above
        }
    }
    return out;
}

}  // namespace wsn
