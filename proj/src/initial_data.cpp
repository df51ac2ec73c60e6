#include "pflow/initial_data.hpp"

#include "pflow/calculus.hpp"
#include "pflow/cutoff.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>

namespace pflow {

namespace {

inline Vector2d perp(const Vector2d& a) { return {-a.y(), a.x()}; }

// Image-term integrals for one disk obstacle at reference position X = (x-z)/eps
// with |X| >= 1 (fluid side):
//   scalar  I(x) = (1/2pi) sum w_k ln(|X| / |X - Yk*|)
//   vector  J(x) = (1/(2pi eps)) sum w_k perp(X/|X|^2 - (X - Yk*)/|X - Yk*|^2)
// where Yk* = Yk/|Yk|^2 is the conjugate point of Yk = (yk-z)/eps.
struct ImageTerms {
    double I = 0.0;
    Vector2d J = Vector2d::Zero();
};

ImageTerms image_terms(const SourceCloud& src, const Vector2d& z, double eps,
                       const Vector2d& x) {
    const Vector2d X = (x - z) / eps;
    const double X2 = X.squaredNorm();
    ImageTerms t;
    if (X2 < 1.0 - 1e-12) return t; // inside the obstacle: not part of the flow domain
    const Vector2d c = X / X2;
    double acc_i = 0.0;
    Vector2d acc_j = Vector2d::Zero();
    for (size_t k = 0; k < src.points.size(); ++k) {
        const Vector2d Y = (src.points[k] - z) / eps;
        const Vector2d Ystar = Y / Y.squaredNorm();
        const Vector2d D = X - Ystar;
        const double D2 = D.squaredNorm();
        acc_i += src.weights[k] * 0.5 * std::log(X2 / D2);
        acc_j += src.weights[k] * (c - D / D2);
    }
    t.I = acc_i / (2.0 * kPi);
    t.J = perp(acc_j) / (2.0 * kPi * eps);
    return t;
}

struct ObstacleLocal {
    bool active = false; // inside the inflated cell of exactly one obstacle
    size_t index = 0;
    double bump = 0.0;      // phi((x-z)/eps)
    Vector2d bump_grad = Vector2d::Zero();
};

ObstacleLocal locate(const Geometry& geo, const Vector2d& x) {
    const double eps = geo.config.epsilon;
    const CutoffProfile prof = CutoffProfile::smoothstep();
    ObstacleLocal loc;
    for (size_t k = 0; k < geo.centers.size(); ++k) {
        const Vector2d r = x - geo.centers[k];
        if (std::max(std::abs(r.x()), std::abs(r.y())) >= 2.0 * eps) continue;
        loc.active = true;
        loc.index = k;
        loc.bump = obstacle_cutoff(r, eps, prof);
        loc.bump_grad = obstacle_cutoff_grad(r, eps, prof);
        return loc; // inflated cells are disjoint
    }
    return loc;
}

void require_disk(const Geometry& geo, const char* who) {
    if (geo.config.shape.kind != ObstacleShape::Kind::disk)
        throw std::invalid_argument(std::string(who) +
                                    ": exact image correction exists for disks only");
}

void require_outside_obstacles(const Geometry& geo, const SourceCloud& src,
                               const char* who) {
    const double eps = geo.config.epsilon;
    for (const Vector2d& y : src.points)
        for (const Vector2d& z : geo.centers)
            if (geo.config.shape.contains((y - z) / eps))
                throw std::invalid_argument(std::string(who) +
                                            ": vorticity support intersects an obstacle");
}

} // namespace

SourceCloud make_cloud(const ScalarField& omega) {
    SourceCloud c;
    const Grid& g = omega.grid;
    const double w = g.h * g.h;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double v = omega(i, j);
            if (v == 0.0) continue;
            c.points.push_back(g.pos(i, j));
            c.weights.push_back(v * w);
            c.circulation += v * w;
        }
    return c;
}

SourceCloud make_cloud(const VorticityBlob& blob, int n) {
    const double R = blob.support_radius();
    const double hq = 2.0 * R / n;
    Grid g(blob.center - Vector2d(R, R) + 0.5 * hq * Vector2d(1, 1), hq, n, n,
           Boundary::open);
    return make_cloud(sample(blob, g));
}

std::vector<Vector2d> cloud_velocity_at(const SourceCloud& src,
                                        const std::vector<Vector2d>& points) {
    std::vector<Vector2d> out(points.size(), Vector2d::Zero());
    for (size_t n = 0; n < points.size(); ++n) {
        Vector2d acc = Vector2d::Zero();
        for (size_t k = 0; k < src.points.size(); ++k) {
            const Vector2d d = points[n] - src.points[k];
            const double r2 = d.squaredNorm();
            if (r2 == 0.0) continue;
            acc += src.weights[k] / r2 * perp(d);
        }
        out[n] = acc / (2.0 * kPi);
    }
    return out;
}

VectorField corrected_velocity_disk(const Geometry& geo, const ScalarField& omega0,
                                    const Grid& grid) {
    require_disk(geo, "corrected_velocity_disk");
    const SourceCloud src = make_cloud(omega0);
    require_outside_obstacles(geo, src, "corrected_velocity_disk");

    VectorField v = biot_savart_fft(omega0);
    if (!v.grid.same_layout(grid))
        throw std::invalid_argument("corrected_velocity_disk: omega grid must match target grid");

    const double eps = geo.config.epsilon;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Vector2d x = grid.pos(i, j);
            const ObstacleLocal loc = locate(geo, x);
            if (!loc.active) continue;
            const ImageTerms t = image_terms(src, geo.centers[loc.index], eps, x);
            const Vector2d add = perp(loc.bump_grad) * t.I + loc.bump * t.J;
            const int k = grid.idx(i, j);
            v.x[k] += add.x();
            v.y[k] += add.y();
        }
    return v;
}

std::vector<Vector2d> corrected_velocity_at(const Geometry& geo, const SourceCloud& src,
                                            const std::vector<Vector2d>& points) {
    require_disk(geo, "corrected_velocity_at");
    require_outside_obstacles(geo, src, "corrected_velocity_at");
    std::vector<Vector2d> v = cloud_velocity_at(src, points);
    const double eps = geo.config.epsilon;
    for (size_t n = 0; n < points.size(); ++n) {
        const ObstacleLocal loc = locate(geo, points[n]);
        if (!loc.active) continue;
        const ImageTerms t = image_terms(src, geo.centers[loc.index], eps, points[n]);
        v[n] += perp(loc.bump_grad) * t.I + loc.bump * t.J;
    }
    return v;
}

std::vector<Vector2d> w2_plus_w4_at(const Geometry& geo, const SourceCloud& src,
                                    const std::vector<Vector2d>& points) {
    require_disk(geo, "w2_plus_w4_at");
    require_outside_obstacles(geo, src, "w2_plus_w4_at");
    std::vector<Vector2d> out(points.size(), Vector2d::Zero());
    const double eps = geo.config.epsilon;
    for (size_t n = 0; n < points.size(); ++n) {
        const ObstacleLocal loc = locate(geo, points[n]);
        if (!loc.active) continue;
        const ImageTerms t = image_terms(src, geo.centers[loc.index], eps, points[n]);
        // w2 carries ln(|X - Y*|/|X|) = -I, w4 the reversed kernel bracket = -J.
        out[n] = -perp(loc.bump_grad) * t.I - loc.bump * t.J;
    }
    return out;
}

WDecomposition w_decomposition(const Geometry& geo, const ScalarField& omega0,
                               const Grid& grid) {
    require_disk(geo, "w_decomposition");
    const SourceCloud src = make_cloud(omega0);
    require_outside_obstacles(geo, src, "w_decomposition");

    WDecomposition w;
    w.w1 = VectorField(grid); // identically zero for disks (identity map)
    w.w3 = VectorField(grid);
    w.w2 = VectorField(grid);
    w.w4 = VectorField(grid);

    const double eps = geo.config.epsilon;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Vector2d x = grid.pos(i, j);
            const ObstacleLocal loc = locate(geo, x);
            if (!loc.active) continue;
            const ImageTerms t = image_terms(src, geo.centers[loc.index], eps, x);
            const Vector2d w2v = -perp(loc.bump_grad) * t.I;
            const Vector2d w4v = -loc.bump * t.J;
            const int k = grid.idx(i, j);
            w.w2.x[k] = w2v.x();
            w.w2.y[k] = w2v.y();
            w.w4.x[k] = w4v.x();
            w.w4.y[k] = w4v.y();
        }

    const RegionMask mask = rasterize(geo, grid);
    w.l2_w1 = 0.0;
    w.l2_w3 = 0.0;
    w.l2_w2 = lp_norm(w.w2, 2.0, &mask.fluid);
    w.l2_w4 = lp_norm(w.w4, 2.0, &mask.fluid);
    return w;
}

double initial_error_l2(const Geometry& geo, const SourceCloud& src, const Grid& grid) {
    require_disk(geo, "initial_error_l2");
    require_outside_obstacles(geo, src, "initial_error_l2");
    const RegionMask mask = rasterize(geo, grid);

    std::vector<Vector2d> pts;
    std::vector<int> idx;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const int k = grid.idx(i, j);
            if (mask.sleeve[k] && mask.fluid[k]) {
                pts.push_back(grid.pos(i, j));
                idx.push_back(k);
            }
        }
    const std::vector<Vector2d> diff = w2_plus_w4_at(geo, src, pts);
    double acc = 0.0;
    for (const Vector2d& d : diff) acc += d.squaredNorm();
    return std::sqrt(acc * grid.h * grid.h);
}

BoundaryReport boundary_residuals(const Geometry& geo, const SourceCloud& src,
                                  int samples_per_obstacle) {
    require_disk(geo, "boundary_residuals");
    const double eps = geo.config.epsilon;
    BoundaryReport rep;
    for (const Vector2d& z : geo.centers) {
        std::vector<Vector2d> pts;
        pts.reserve(samples_per_obstacle);
        for (int m = 0; m < samples_per_obstacle; ++m) {
            const double th = 2.0 * kPi * m / samples_per_obstacle;
            pts.push_back(z + eps * Vector2d(std::cos(th), std::sin(th)));
        }
        const std::vector<Vector2d> v = corrected_velocity_at(geo, src, pts);
        double circ = 0.0;
        const double ds = 2.0 * kPi * eps / samples_per_obstacle;
        for (int m = 0; m < samples_per_obstacle; ++m) {
            const Vector2d n = (pts[m] - z).normalized();
            const Vector2d tau = perp(n);
            rep.max_normal_residual = std::max(rep.max_normal_residual, std::abs(v[m].dot(n)));
            rep.velocity_scale = std::max(rep.velocity_scale, v[m].norm());
            circ += v[m].dot(tau) * ds;
        }
        rep.max_abs_circulation = std::max(rep.max_abs_circulation, std::abs(circ));
    }
    return rep;
}

VectorField u0_eps_grid(const Geometry& geo, const ScalarField& omega0, const Grid& grid) {
    if (!omega0.grid.same_layout(grid))
        throw std::invalid_argument("u0_eps_grid: omega grid must match target grid");
    const SourceCloud src = make_cloud(omega0);
    require_outside_obstacles(geo, src, "u0_eps_grid");
    const RegionMask mask = rasterize(geo, grid);
    const int nobs = geo.count();

    // Assign solid nodes to their obstacle (inflated cells are disjoint).
    std::vector<int> owner(grid.size(), -1);
    const double eps = geo.config.epsilon;
    for (int k = 0; k < grid.size(); ++k) {
        if (!mask.solid[k]) continue;
        const Vector2d x = grid.pos(k % grid.nx, k / grid.nx);
        for (int m = 0; m < nobs; ++m) {
            const Vector2d r = x - geo.centers[m];
            if (std::max(std::abs(r.x()), std::abs(r.y())) < 2.0 * eps) {
                owner[k] = m;
                break;
            }
        }
    }

    // Unknowns: fluid nodes strictly inside the box.
    std::vector<int> unknown(grid.size(), -1);
    int n_unknown = 0;
    for (int j = 1; j < grid.ny - 1; ++j)
        for (int i = 1; i < grid.nx - 1; ++i) {
            const int k = grid.idx(i, j);
            if (mask.fluid[k]) unknown[k] = n_unknown++;
        }

    // Free-plane stream values on the outer ring (log-kernel sum).
    ScalarField psi_outer(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            if (i != 0 && i != grid.nx - 1 && j != 0 && j != grid.ny - 1) continue;
            const Vector2d x = grid.pos(i, j);
            double acc = 0.0;
            for (size_t s = 0; s < src.points.size(); ++s)
                acc += src.weights[s] * std::log((x - src.points[s]).norm());
            psi_outer(i, j) = acc / (2.0 * kPi);
        }

    // 5-point Dirichlet Laplacian, factored once and reused for every
    // right-hand side (the particular solve and one harmonic lift per obstacle).
    Eigen::SparseMatrix<double> L(n_unknown, n_unknown);
    {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(n_unknown) * 5);
        const double w = 1.0 / (grid.h * grid.h);
        for (int j = 1; j < grid.ny - 1; ++j)
            for (int i = 1; i < grid.nx - 1; ++i) {
                const int k = grid.idx(i, j);
                const int a = unknown[k];
                if (a < 0) continue;
                trip.emplace_back(a, a, 4.0 * w);
                const int nb[4] = {grid.idx(i - 1, j), grid.idx(i + 1, j),
                                   grid.idx(i, j - 1), grid.idx(i, j + 1)};
                for (int q = 0; q < 4; ++q)
                    if (unknown[nb[q]] >= 0) trip.emplace_back(a, unknown[nb[q]], -w);
            }
        L.setFromTriplets(trip.begin(), trip.end());
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(L);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("u0_eps_grid: Laplacian factorization failed");

    // Dirichlet data per solve: boundary_value(k) for non-unknown nodes.
    auto solve_with = [&](const ScalarField& rhs,
                          const std::function<double(int)>& bval) -> ScalarField {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n_unknown);
        const double w = 1.0 / (grid.h * grid.h);
        for (int j = 1; j < grid.ny - 1; ++j)
            for (int i = 1; i < grid.nx - 1; ++i) {
                const int k = grid.idx(i, j);
                const int a = unknown[k];
                if (a < 0) continue;
                b[a] = -rhs(i, j);
                const int nb[4] = {grid.idx(i - 1, j), grid.idx(i + 1, j),
                                   grid.idx(i, j - 1), grid.idx(i, j + 1)};
                for (int q = 0; q < 4; ++q)
                    if (unknown[nb[q]] < 0) b[a] += w * bval(nb[q]);
            }
        const Eigen::VectorXd x = ldlt.solve(b);
        ScalarField out(grid);
        for (int k = 0; k < grid.size(); ++k)
            out.v[k] = unknown[k] >= 0 ? x[unknown[k]] : bval(k);
        return out;
    };

    // Particular solve: stream of the vorticity with zero obstacle constants.
    const ScalarField psi_p = solve_with(omega0, [&](int k) {
        return mask.solid[k] ? 0.0 : psi_outer.v[k];
    });

    // Harmonic lift per obstacle.
    ScalarField zero_rhs(grid);
    std::vector<ScalarField> lifts;
    for (int m = 0; m < nobs; ++m)
        lifts.push_back(solve_with(zero_rhs, [&](int k) {
            return (mask.solid[k] && owner[k] == m) ? 1.0 : 0.0;
        }));

    // Discrete flux of psi through each obstacle's node boundary.
    auto flux = [&](const ScalarField& psi, int m) {
        double acc = 0.0;
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                const int k = grid.idx(i, j);
                if (!mask.solid[k] || owner[k] != m) continue;
                const int nb[4] = {grid.idx(std::max(i - 1, 0), j),
                                   grid.idx(std::min(i + 1, grid.nx - 1), j),
                                   grid.idx(i, std::max(j - 1, 0)),
                                   grid.idx(i, std::min(j + 1, grid.ny - 1))};
                for (int q = 0; q < 4; ++q)
                    if (!mask.solid[nb[q]]) acc += psi.v[nb[q]] - psi.v[k];
            }
        return acc;
    };

    // Zero-circulation conditions fix the obstacle constants (dense solve).
    Eigen::MatrixXd F(nobs, nobs);
    Eigen::VectorXd rhs_c(nobs);
    for (int m = 0; m < nobs; ++m) {
        rhs_c[m] = -flux(psi_p, m);
        for (int q = 0; q < nobs; ++q) F(m, q) = flux(lifts[q], m);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(F);
    if (!lu.isInvertible())
        throw std::runtime_error("u0_eps_grid: singular circulation constraint system");
    const Eigen::VectorXd c = lu.solve(rhs_c);

    ScalarField psi = psi_p;
    for (int m = 0; m < nobs; ++m) psi.v += c[m] * lifts[m].v;

    return perp_grad(psi);
}

double distance_rule(const std::string& rule, double epsilon) {
    if (rule == "d=eps") return epsilon;
    if (rule.rfind("d=eps^", 0) == 0) {
        const double alpha = std::stod(rule.substr(6));
        return std::pow(epsilon, alpha);
    }
    if (rule.rfind("fixed:", 0) == 0) return std::stod(rule.substr(6));
    throw std::invalid_argument("distance_rule: unknown rule " + rule);
}

std::vector<InitialRateRow> measure_initial_rate(const ObstacleShape& shape,
                                                 const VorticityBlob& blob,
                                                 const std::vector<double>& eps_list,
                                                 const std::string& d_rule, double mu) {
    if (shape.kind != ObstacleShape::Kind::disk)
        throw std::invalid_argument("measure_initial_rate: disk obstacles only");
    const SourceCloud src = make_cloud(blob);

    std::vector<InitialRateRow> rows;
    for (const double eps : eps_list) {
        LatticeConfig cfg;
        cfg.epsilon = eps;
        cfg.d_epsilon = distance_rule(d_rule, eps);
        cfg.mu = mu;
        cfg.shape = shape;
        const Geometry geo = lattice_centers(cfg);

        // Local grid covering the inflated lattice with a small margin;
        // bounds on the node lattice so obstacle centers are nodes.
        const double h = eps / 8.0;
        double xmax = 0.0, ymax = 0.0;
        for (const Vector2d& z : geo.centers) {
            xmax = std::max(xmax, z.x());
            ymax = std::max(ymax, z.y());
        }
        const int margin = 20; // nodes beyond the inflated cells
        const int nx = static_cast<int>(std::round(xmax / h)) + 16 + 2 * margin + 1;
        const int ny = static_cast<int>(std::round(ymax / h)) + 16 + 2 * margin + 1;
        Grid grid(Vector2d(-(16 + margin) * h + eps, -(16 + margin) * h + eps), h, nx, ny,
                  Boundary::open);

        InitialRateRow row;
        row.epsilon = eps;
        row.d_epsilon = cfg.d_epsilon;
        row.mu = mu;
        row.l2_error = initial_error_l2(geo, src, grid);
        row.bound_shape = eps * std::abs(std::log(eps)) /
                          std::pow(cfg.d_epsilon, (1.0 + mu) / 2.0);
        row.ratio = row.l2_error / row.bound_shape;
        rows.push_back(row);
    }
    return rows;
}

} // namespace pflow
