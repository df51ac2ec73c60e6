#include "pflow/corrector.hpp"

#include "pflow/calculus.hpp"
#include "pflow/interp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pflow {

namespace {

int checked_int(double x, const char* what) {
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-8)
        throw std::invalid_argument(std::string("assemble_h_epsilon: ") + what +
                                    " is not grid-aligned (value " + std::to_string(x) + ")");
    return static_cast<int>(r);
}

BoolArray dilate(const BoolArray& m, const Grid& g, int steps) {
    BoolArray cur = m;
    for (int s = 0; s < steps; ++s) {
        BoolArray next = cur;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (cur[g.idx(i, j)]) continue;
                const bool near = (i > 0 && cur[g.idx(i - 1, j)]) ||
                                  (i + 1 < g.nx && cur[g.idx(i + 1, j)]) ||
                                  (j > 0 && cur[g.idx(i, j - 1)]) ||
                                  (j + 1 < g.ny && cur[g.idx(i, j + 1)]);
                if (near) next[g.idx(i, j)] = true;
            }
        cur = next;
    }
    return cur;
}

} // namespace

CorrectorAssembly assemble_h_epsilon(const Geometry& geo, const VectorField& uE,
                                     const Grid& grid, int cell_nc) {
    if (!uE.grid.same_layout(grid))
        throw std::invalid_argument("assemble_h_epsilon: uE grid mismatch");
    const double eps = geo.config.epsilon;
    if (grid.h > eps / 8.0 + 1e-14)
        throw std::invalid_argument("assemble_h_epsilon: grid does not resolve epsilon");

    CorrectorAssembly a;
    a.geo = geo;
    a.grid = grid;
    a.solver = CellDivergenceSolver::shared(geo.config.shape, cell_nc);

    const double hc = a.solver->hc();
    a.stride = checked_int(grid.h / (eps * hc), "cell-lattice stride h/(eps*hc)");
    if (a.stride < 1)
        throw std::invalid_argument("assemble_h_epsilon: grid finer than the cell lattice");

    const Grid cgrid = a.solver->cell_center_grid();
    const BoolArray& fluid_cells = a.solver->fluid_cells();
    const CutoffProfile profile = CutoffProfile::smoothstep();

    a.h_eps = VectorField(grid);
    for (const Vector2d& z : geo.centers) {
        checked_int((z.x() - grid.origin.x()) / grid.h, "obstacle center x");
        checked_int((z.y() - grid.origin.y()) / grid.h, "obstacle center y");

        // Cell rhs f(X) = eps * (grad(phi_eps) . uE)(z + eps X); only this
        // obstacle's bump is active inside its own inflated cell.
        ArrayXd f = ArrayXd::Zero(cgrid.size());
        for (int j = 0; j < cgrid.ny; ++j)
            for (int i = 0; i < cgrid.nx; ++i) {
                const int c = cgrid.idx(i, j);
                if (!fluid_cells[c]) continue;
                const Vector2d X = cgrid.pos(i, j);
                const Vector2d x = z + eps * X;
                const Vector2d gphi = -obstacle_cutoff_grad(x - z, eps, profile);
                if (gphi.isZero()) continue;
                f[c] = eps * gphi.dot(sample_bicubic(uE, x));
            }
        CellSolution sol = a.solver->solve(f, 1e-9, /*project_mean=*/true);
        const double fscale = f.abs().maxCoeff();
        a.max_mean_subtracted =
            std::max(a.max_mean_subtracted,
                     fscale > 0 ? std::abs(sol.mean_subtracted) / fscale : 0.0);
        a.max_cell_residual = std::max(a.max_cell_residual, sol.residual_rel);
        a.cells.push_back(std::move(sol));
    }

    // Paste nodal cell solutions onto the grid: main nodes inside each inflated
    // cell land exactly on cell-lattice nodes (stride-checked above).
    const int nc = a.solver->nc();
    const int half_span = checked_int(2.0 * eps / grid.h, "cell half-span");
    if (half_span * a.stride != nc / 2)
        throw std::invalid_argument("assemble_h_epsilon: inconsistent stride/span alignment");
    for (size_t k = 0; k < geo.centers.size(); ++k) {
        const Vector2d& z = geo.centers[k];
        const int zi = static_cast<int>(std::round((z.x() - grid.origin.x()) / grid.h));
        const int zj = static_cast<int>(std::round((z.y() - grid.origin.y()) / grid.h));
        const VectorField& hn = a.cells[k].h;
        for (int dj = -half_span + 1; dj < half_span; ++dj) {
            const int j = zj + dj;
            if (j < 0 || j >= grid.ny) continue;
            const int vj = nc / 2 + dj * a.stride;
            for (int di = -half_span + 1; di < half_span; ++di) {
                const int i = zi + di;
                if (i < 0 || i >= grid.nx) continue;
                const int ui = nc / 2 + di * a.stride;
                const int kk = grid.idx(i, j);
                a.h_eps.x[kk] = hn.x[hn.grid.idx(ui, vj)];
                a.h_eps.y[kk] = hn.y[hn.grid.idx(ui, vj)];
            }
        }
    }

    // Pin the no-slip band: zero on solid and solid-adjacent nodes.
    const RegionMask mask = rasterize(geo, grid);
    const BoolArray band = dilate(mask.solid, grid, 1);
    for (Eigen::Index k = 0; k < band.size(); ++k)
        if (band[k]) {
            a.h_eps.x[k] = 0.0;
            a.h_eps.y[k] = 0.0;
        }
    return a;
}

VectorField euler_corrector(const Geometry& geo, const VectorField& uE,
                            const CorrectorAssembly& assembly) {
    const ScalarField phi = lattice_cutoff(geo, assembly.grid);
    VectorField u(assembly.grid);
    u.x = phi.v * uE.x - assembly.h_eps.x;
    u.y = phi.v * uE.y - assembly.h_eps.y;
    const RegionMask mask = rasterize(geo, assembly.grid);
    const BoolArray band = dilate(mask.solid, assembly.grid, 1);
    for (Eigen::Index k = 0; k < band.size(); ++k)
        if (band[k]) {
            u.x[k] = 0.0;
            u.y[k] = 0.0;
        }
    return u;
}

double corrector_lp_norm(const CorrectorAssembly& a, double p) {
    const double eps = a.geo.config.epsilon;
    double acc = 0.0;
    for (const CellSolution& c : a.cells) acc += std::pow(cell_lp_norm(c.h, p), p);
    return std::pow(eps * eps * acc, 1.0 / p);
}

double corrector_grad_lp_norm(const CorrectorAssembly& a, double p) {
    const double eps = a.geo.config.epsilon;
    double acc = 0.0;
    for (const CellSolution& c : a.cells) acc += std::pow(cell_grad_lp_norm(c.h, p), p);
    return std::pow(std::pow(eps, 2.0 - p) * acc, 1.0 / p);
}

ScaledNormCheck scaled_sobolev_norm_check(const CorrectorAssembly& a, double p) {
    const double eps = a.geo.config.epsilon;
    const int s = a.stride;
    const double h_phys = a.grid.h;
    const double w_phys = h_phys * h_phys;

    // Physical route: value and gradient sums over the stride sub-lattice of
    // each cell with explicit physical spacing (ranges match cell_lp_norm /
    // cell_grad_lp_norm so the comparison isolates the eps bookkeeping).
    double val_acc = 0.0, grad_acc = 0.0;
    for (const CellSolution& c : a.cells) {
        const Grid& ng = c.h.grid;
        for (int j = 0; j + 1 < ng.ny; j += s)
            for (int i = 0; i + 1 < ng.nx; i += s)
                val_acc += std::pow(c.h.at(i, j).norm(), p) * w_phys;
        for (int j = 0; j + s < ng.ny; j += s)
            for (int i = 0; i + s < ng.nx; i += s) {
                const Vector2d h00 = c.h.at(i, j);
                const Vector2d hx = (c.h.at(i + s, j) - h00) / h_phys;
                const Vector2d hy = (c.h.at(i, j + s) - h00) / h_phys;
                grad_acc +=
                    std::pow(std::sqrt(hx.squaredNorm() + hy.squaredNorm()), p) * w_phys;
            }
    }
    ScaledNormCheck out;
    out.physical = std::pow(std::pow(eps, -p) * val_acc + grad_acc, 1.0 / p);

    double book = 0.0;
    for (const CellSolution& c : a.cells)
        book += std::pow(eps, 2.0 - p) * (std::pow(cell_lp_norm(c.h, p, s), p) +
                                          std::pow(cell_grad_lp_norm(c.h, p, s), p));
    out.bookkeeping = std::pow(book, 1.0 / p);
    return out;
}

double corrector_divergence_residual(const CorrectorAssembly& a, const VectorField& uE) {
    const VectorField u_eps = euler_corrector(a.geo, uE, a);
    const ScalarField d = div(u_eps);

    const RegionMask mask = rasterize(a.geo, a.grid);
    const BoolArray band = dilate(mask.solid, a.grid, 2);
    BoolArray measure = mask.fluid;
    for (Eigen::Index k = 0; k < measure.size(); ++k)
        if (band[k]) measure[k] = false;

    const VectorField gphi = lattice_cutoff_gradient(a.geo, a.grid);
    ScalarField data(a.grid);
    data.v = gphi.x * uE.x + gphi.y * uE.y;

    return lp_norm(d, 2.0, &measure) / lp_norm(data, 2.0);
}

CorrectorBoundRatios corrector_bound_ratios(const Geometry& geo, const Grid& grid,
                                            const VectorField& uE_t0,
                                            const VectorField& uE_t1, double dt_snap,
                                            int cell_nc) {
    const CorrectorAssembly a0 = assemble_h_epsilon(geo, uE_t0, grid, cell_nc);
    const CorrectorAssembly a1 = assemble_h_epsilon(geo, uE_t1, grid, cell_nc);

    const double eps = geo.config.epsilon;
    const double d = geo.config.d_epsilon;
    const double mu = geo.config.mu;
    const double shape4 = std::sqrt(eps) / std::pow(d, (1.0 + mu) / 4.0);
    const double shape2grad = std::pow(d, (1.0 + mu) / 2.0);

    CorrectorBoundRatios r;
    r.h_l4_over_shape = corrector_lp_norm(a0, 4.0) / shape4;
    r.gradh_l2_times_shape = corrector_grad_lp_norm(a0, 2.0) * shape2grad;

    double acc = 0.0;
    for (size_t k = 0; k < a0.cells.size(); ++k) {
        VectorField dh = a0.cells[k].h;
        dh.x = (a1.cells[k].h.x - dh.x) / dt_snap;
        dh.y = (a1.cells[k].h.y - dh.y) / dt_snap;
        acc += std::pow(cell_lp_norm(dh, 2.0), 2.0);
    }
    r.dth_l2_over_shape = std::sqrt(eps * eps * acc) / shape4;

    // |uE - u_eps|_L4 over its support (the inflated cells).
    const VectorField u_eps = euler_corrector(geo, uE_t0, a0);
    const RegionMask mask = rasterize(geo, grid);
    BoolArray support = mask.solid;
    for (Eigen::Index k = 0; k < support.size(); ++k)
        support[k] = support[k] || mask.sleeve[k];
    VectorField diff(grid);
    diff.x = uE_t0.x - u_eps.x;
    diff.y = uE_t0.y - u_eps.y;
    r.err_l4_over_shape = lp_norm(diff, 4.0, &support) / shape4;
    return r;
}

ArrayXd random_cell_rhs(const CellDivergenceSolver& solver, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> pos(-1.9, 1.9);
    std::uniform_real_distribution<double> width(0.2, 0.6);
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    std::bernoulli_distribution sign(0.5);

    const Grid cg = solver.cell_center_grid();
    const BoolArray& fluid = solver.fluid_cells();
    ArrayXd f = ArrayXd::Zero(cg.size());
    for (int b = 0; b < 10; ++b) {
        const Vector2d c(pos(rng), pos(rng));
        const double s2 = width(rng) * width(rng);
        const double a = (sign(rng) ? 1.0 : -1.0) * amp(rng);
        for (int j = 0; j < cg.ny; ++j)
            for (int i = 0; i < cg.nx; ++i) {
                const int k = cg.idx(i, j);
                if (!fluid[k]) continue;
                f[k] += a * std::exp(-0.5 * (cg.pos(i, j) - c).squaredNorm() / s2);
            }
    }
    // Exact fluid-mean removal; the lemma hypothesis for the solve.
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index k = 0; k < f.size(); ++k)
        if (fluid[k]) {
            sum += f[k];
            ++n;
        }
    const double mean = sum / n;
    for (Eigen::Index k = 0; k < f.size(); ++k)
        if (fluid[k]) f[k] -= mean;
    return f;
}

CellConstants estimate_constants(const ObstacleShape& shape, double p, int ensemble,
                                 unsigned seed, int cell_nc) {
    if (ensemble < 20)
        throw std::invalid_argument("estimate_constants: ensemble must be >= 20");
    auto solver = CellDivergenceSolver::shared(shape, cell_nc);

    CellConstants out;
    out.shape = shape.name();
    out.p = p;
    out.ensemble = ensemble;

    const Grid cg = solver->cell_center_grid();
    const BoolArray& fluid = solver->fluid_cells();
    for (int e = 0; e < ensemble; ++e) {
        const ArrayXd f = random_cell_rhs(*solver, seed + 17 * e);
        const CellSolution sol = solver->solve(f, 1e-7, false);
        double facc = 0.0;
        for (int k = 0; k < cg.size(); ++k)
            if (fluid[k]) facc += std::pow(std::abs(f[k]), p) * cg.h * cg.h;
        const double fnorm = std::pow(facc, 1.0 / p);
        const double hnorm = std::pow(std::pow(cell_lp_norm(sol.h, p), p) +
                                          std::pow(cell_grad_lp_norm(sol.h, p), p),
                                      1.0 / p);
        const double ratio = hnorm / fnorm;
        out.c_tilde_samples.push_back(ratio);
        out.c_tilde = std::max(out.c_tilde, ratio);
    }

    // Random fields vanishing on the obstacle boundary (smooth taper of the
    // signed distance) probe the Poincare and L4 embedding ratios.
    std::mt19937 rng(seed ^ 0x9e3779b9u);
    std::uniform_real_distribution<double> pos(-1.9, 1.9);
    std::uniform_real_distribution<double> width(0.25, 0.7);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    const Grid ng = solver->node_grid();
    const double delta = 0.25;
    for (int e = 0; e < ensemble; ++e) {
        VectorField u(ng);
        for (int b = 0; b < 12; ++b) {
            const Vector2d c(pos(rng), pos(rng));
            const double s2 = width(rng) * width(rng);
            const double ax = amp(rng), ay = amp(rng);
            for (int j = 0; j < ng.ny; ++j)
                for (int i = 0; i < ng.nx; ++i) {
                    const double gkern =
                        std::exp(-0.5 * (ng.pos(i, j) - c).squaredNorm() / s2);
                    u.x[ng.idx(i, j)] += ax * gkern;
                    u.y[ng.idx(i, j)] += ay * gkern;
                }
        }
        for (int j = 0; j < ng.ny; ++j)
            for (int i = 0; i < ng.nx; ++i) {
                const double sd = shape.signed_distance(ng.pos(i, j));
                const double t = std::clamp(sd / delta, 0.0, 1.0);
                const double taper = ((6.0 * t - 15.0) * t + 10.0) * t * t * t;
                u.x[ng.idx(i, j)] *= taper;
                u.y[ng.idx(i, j)] *= taper;
            }
        const double g2 = cell_grad_lp_norm(u, 2.0);
        out.k1 = std::max(out.k1, cell_lp_norm(u, 2.0) / g2);
        out.k2 = std::max(out.k2, cell_lp_norm(u, 4.0) / g2);
    }
    return out;
}

} // namespace pflow
