#include "pflow/geometry.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace pflow {

ObstacleShape ObstacleShape::smoothed_square(double r) {
    if (!(r > 0.0 && r <= 1.0))
        throw std::invalid_argument("smoothed_square: corner radius must be in (0,1]");
    return {Kind::smoothed_square, r};
}

bool ObstacleShape::contains(const Vector2d& p) const {
    if (kind == Kind::disk) return p.squaredNorm() <= 1.0;
    // Minkowski sum of [-1+r,1-r]^2 with a disk of radius r.
    const double r = corner_radius;
    const double qx = std::max(std::abs(p.x()) - (1.0 - r), 0.0);
    const double qy = std::max(std::abs(p.y()) - (1.0 - r), 0.0);
    return qx * qx + qy * qy <= r * r;
}

double ObstacleShape::signed_distance(const Vector2d& p) const {
    if (kind == Kind::disk) return p.norm() - 1.0;
    const double r = corner_radius;
    const double qx = std::abs(p.x()) - (1.0 - r);
    const double qy = std::abs(p.y()) - (1.0 - r);
    const double outside = Vector2d(std::max(qx, 0.0), std::max(qy, 0.0)).norm();
    const double inside = std::min(std::max(qx, qy), 0.0);
    return outside + inside - r;
}

double ObstacleShape::area() const {
    if (kind == Kind::disk) return kPi;
    const double r = corner_radius;
    return 4.0 - (4.0 - kPi) * r * r;
}

std::string ObstacleShape::name() const {
    return kind == Kind::disk ? "disk" : "smoothed_square";
}

void LatticeConfig::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("LatticeConfig: epsilon must be positive");
    if (d_epsilon < epsilon)
        throw std::invalid_argument(
            "LatticeConfig: d_epsilon < epsilon is outside the supported regime");
    if (d_epsilon > 1.0) throw std::invalid_argument("LatticeConfig: d_epsilon must be <= 1");
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("LatticeConfig: mu must be in [0,1]");
}

namespace {

// Integer part with a relative guard against one-ulp misses; ratios like
// 1.2/0.4 must count as 3.
int integer_part(double x) { return static_cast<int>(std::floor(x * (1.0 + 1e-12))); }

} // namespace

Geometry lattice_centers(const LatticeConfig& cfg) {
    cfg.validate();
    const double eps = cfg.epsilon, d = cfg.d_epsilon;
    const int n1 = integer_part((1.0 + 2.0 * d) / (2.0 * (eps + d)));
    if (n1 < 1) throw std::invalid_argument("lattice_centers: no room for a single obstacle (n1 = 0)");
    const int n2 = integer_part(std::pow(static_cast<double>(n1), cfg.mu));

    Geometry geo;
    geo.config = cfg;
    geo.n1 = n1;
    geo.n2 = n2;
    geo.centers.reserve(static_cast<size_t>(n1) * n2);
    for (int j = 1; j <= n2; ++j)
        for (int i = 1; i <= n1; ++i)
            geo.centers.emplace_back(eps + 2.0 * (eps + d) * (i - 1),
                                     eps + 2.0 * (eps + d) * (j - 1));
    return geo;
}

bool check_disjoint(const Geometry& geo) {
    // Inflated cells z + eps*(-2,2)^2 are open squares of half-width 2*eps;
    // two are disjoint iff the centers are >= 4*eps apart in the max norm.
    const double min_sep = 4.0 * geo.config.epsilon;
    for (size_t a = 0; a < geo.centers.size(); ++a)
        for (size_t b = a + 1; b < geo.centers.size(); ++b) {
            const Vector2d diff = geo.centers[a] - geo.centers[b];
            if (std::max(std::abs(diff.x()), std::abs(diff.y())) < min_sep) return false;
        }
    return true;
}

RegionMask rasterize(const Geometry& geo, const Grid& grid) {
    const double eps = geo.config.epsilon;
    if (grid.h > eps / 8.0 + 1e-14)
        throw std::invalid_argument("rasterize: grid spacing h = " + std::to_string(grid.h) +
                                    " does not resolve epsilon = " + std::to_string(eps) +
                                    " (need h <= epsilon/8)");

    RegionMask m;
    m.grid = grid;
    m.solid = BoolArray::Constant(grid.size(), false);
    m.fluid = BoolArray::Constant(grid.size(), true);
    m.sleeve = BoolArray::Constant(grid.size(), false);
    m.cell_count = geo.count();

    for (const Vector2d& z : geo.centers) {
        // Only nodes inside the inflated cell can be solid or sleeve.
        const int i0 = std::max(0, static_cast<int>(std::ceil((z.x() - 2.0 * eps - grid.origin.x()) / grid.h)));
        const int i1 = std::min(grid.nx - 1, static_cast<int>(std::floor((z.x() + 2.0 * eps - grid.origin.x()) / grid.h)));
        const int j0 = std::max(0, static_cast<int>(std::ceil((z.y() - 2.0 * eps - grid.origin.y()) / grid.h)));
        const int j1 = std::min(grid.ny - 1, static_cast<int>(std::floor((z.y() + 2.0 * eps - grid.origin.y()) / grid.h)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const Vector2d p = grid.pos(i, j);
                const Vector2d q = (p - z) / eps;
                if (std::max(std::abs(q.x()), std::abs(q.y())) >= 2.0) continue;
                const int k = grid.idx(i, j);
                if (geo.config.shape.contains(q)) {
                    m.solid[k] = true;
                    m.fluid[k] = false;
                } else {
                    m.sleeve[k] = true;
                }
            }
    }
    return m;
}

std::string to_json(const Geometry& geo) {
    nlohmann::json j;
    j["epsilon"] = geo.config.epsilon;
    j["d_epsilon"] = geo.config.d_epsilon;
    j["mu"] = geo.config.mu;
    j["shape"] = geo.config.shape.name();
    if (geo.config.shape.kind == ObstacleShape::Kind::smoothed_square)
        j["corner_radius"] = geo.config.shape.corner_radius;
    j["n1"] = geo.n1;
    j["n2"] = geo.n2;
    auto centers = nlohmann::json::array();
    for (const Vector2d& z : geo.centers) centers.push_back({z.x(), z.y()});
    j["centers"] = centers;
    return j.dump(2);
}

Geometry geometry_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    LatticeConfig cfg;
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.d_epsilon = j.at("d_epsilon").get<double>();
    cfg.mu = j.at("mu").get<double>();
    const std::string shape = j.at("shape").get<std::string>();
    if (shape == "disk")
        cfg.shape = ObstacleShape::disk();
    else if (shape == "smoothed_square")
        cfg.shape = ObstacleShape::smoothed_square(j.value("corner_radius", 0.25));
    else
        throw std::invalid_argument("geometry_from_json: unknown shape " + shape);

    Geometry geo = lattice_centers(cfg);
    if (j.contains("n1") && (j.at("n1").get<int>() != geo.n1 || j.at("n2").get<int>() != geo.n2))
        throw std::invalid_argument("geometry_from_json: stored counts disagree with the config");
    return geo;
}

} // namespace pflow
