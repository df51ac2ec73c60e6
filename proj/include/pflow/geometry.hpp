#pragma once

#include "pflow/grid.hpp"

#include <string>
#include <vector>

namespace pflow {

/// Reference obstacle shape: contained in [-1,1]^2 with the origin strictly
/// interior and a C^{1,1} boundary. The disk is the closed unit disk; the
/// smoothed square is [-1,1]^2 with corners rounded at the given radius.
struct ObstacleShape {
    enum class Kind { disk, smoothed_square };
    Kind kind = Kind::disk;
    double corner_radius = 0.25; // smoothed_square only, in (0, 1]

    static ObstacleShape disk() { return {Kind::disk, 0.0}; }
    static ObstacleShape smoothed_square(double r = 0.25);

    /// Point membership in the closed reference set.
    bool contains(const Vector2d& p) const;
    /// Signed distance to the boundary, negative inside.
    double signed_distance(const Vector2d& p) const;
    /// Reference-set area (exact).
    double area() const;
    std::string name() const;
};

struct LatticeConfig {
    double epsilon = 0.1;   // obstacle scale
    double d_epsilon = 0.1; // half the inter-obstacle separation
    double mu = 1.0;        // lattice anisotropy in [0,1]: 0 = line, 1 = square
    ObstacleShape shape;

    void validate() const;
};

/// Realized obstacle lattice: centers z_ij = (eps,eps) + 2(eps+d)(i-1, j-1).
struct Geometry {
    LatticeConfig config;
    int n1 = 0;
    int n2 = 0;
    std::vector<Vector2d> centers; // ordered j-major: (i=1..n1) fastest

    int count() const { return n1 * n2; }
};

/// Node masks for the solid region, the fluid exterior, and the sleeve of
/// punctured inflated cells around the obstacles.
struct RegionMask {
    Grid grid;
    BoolArray solid;
    BoolArray fluid;
    BoolArray sleeve;
    int cell_count = 0;
};

Geometry lattice_centers(const LatticeConfig& cfg);
bool check_disjoint(const Geometry& geo);
RegionMask rasterize(const Geometry& geo, const Grid& grid);

std::string to_json(const Geometry& geo);
Geometry geometry_from_json(const std::string& text);

} // namespace pflow
