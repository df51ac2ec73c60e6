#include "pflow/cell_problem.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace pflow {

namespace {

struct FaceIds {
    int nc;
    int n_u() const { return (nc + 1) * nc; }
    int n_v() const { return nc * (nc + 1); }
    int u(int i, int j) const { return j * (nc + 1) + i; }  // i in [0,nc], j in [0,nc)
    int v(int i, int j) const { return n_u() + j * nc + i; } // i in [0,nc), j in [0,nc]
    int cell(int i, int j) const { return j * nc + i; }
};

} // namespace

struct CellDivergenceSolver::Impl {
    ObstacleShape shape;
    int nc;
    double hc;
    FaceIds ids;

    BoolArray solid; // cells
    BoolArray fluid; // cells
    std::vector<int> face_unknown;    // face id -> unknown index or -1 (Dirichlet)
    std::vector<int> cell_constraint; // cell id -> constraint index or -1
    int n_unknowns = 0;
    int n_constraints = 0;
    int reference_cell = -1;
    double fluid_area = 0.0;

    Eigen::SparseMatrix<double> kkt;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    bool u_dirichlet(int i, int j) const {
        if (i == 0 || i == nc) return true;
        return solid[ids.cell(i - 1, j)] || solid[ids.cell(i, j)];
    }
    bool v_dirichlet(int i, int j) const {
        if (j == 0 || j == nc) return true;
        return solid[ids.cell(i, j - 1)] || solid[ids.cell(i, j)];
    }

    // Difference pairs of the minimized energy sum (value_a - value_b)^2 / hc^2;
    // a partner of -1 means a zero value (Dirichlet face, wall ghost). Each
    // free-free pair is emitted once.
    template <typename Emit>
    void for_energy_pairs(Emit&& emit) const {
        for (int j = 0; j < nc; ++j)
            for (int i = 0; i <= nc; ++i) {
                if (u_dirichlet(i, j)) continue;
                const int a = ids.u(i, j);
                if (i + 1 <= nc) emit(a, u_dirichlet(i + 1, j) ? -1 : ids.u(i + 1, j));
                if (i - 1 >= 0 && u_dirichlet(i - 1, j)) emit(a, -1);
                if (j + 1 < nc)
                    emit(a, u_dirichlet(i, j + 1) ? -1 : ids.u(i, j + 1));
                else
                    emit(a, -1); // wall ghost above
                if (j - 1 >= 0) {
                    if (u_dirichlet(i, j - 1)) emit(a, -1);
                } else {
                    emit(a, -1); // wall ghost below
                }
            }
        for (int j = 0; j <= nc; ++j)
            for (int i = 0; i < nc; ++i) {
                if (v_dirichlet(i, j)) continue;
                const int a = ids.v(i, j);
                if (j + 1 <= nc) emit(a, v_dirichlet(i, j + 1) ? -1 : ids.v(i, j + 1));
                if (j - 1 >= 0 && v_dirichlet(i, j - 1)) emit(a, -1);
                if (i + 1 < nc)
                    emit(a, v_dirichlet(i + 1, j) ? -1 : ids.v(i + 1, j));
                else
                    emit(a, -1);
                if (i - 1 >= 0) {
                    if (v_dirichlet(i - 1, j)) emit(a, -1);
                } else {
                    emit(a, -1);
                }
            }
    }
};

CellDivergenceSolver::CellDivergenceSolver(const ObstacleShape& shape, int nc)
    : impl_(std::make_unique<Impl>()) {
    if (nc < 16) throw std::invalid_argument("CellDivergenceSolver: nc too small");
    Impl& im = *impl_;
    im.shape = shape;
    im.nc = nc;
    im.hc = 4.0 / nc;
    im.ids.nc = nc;

    im.solid = BoolArray::Constant(nc * nc, false);
    im.fluid = BoolArray::Constant(nc * nc, true);
    for (int j = 0; j < nc; ++j)
        for (int i = 0; i < nc; ++i) {
            const Vector2d c(-2.0 + (i + 0.5) * im.hc, -2.0 + (j + 0.5) * im.hc);
            if (shape.contains(c)) {
                im.solid[im.ids.cell(i, j)] = true;
                im.fluid[im.ids.cell(i, j)] = false;
            }
        }
    im.fluid_area = im.fluid.cast<double>().sum() * im.hc * im.hc;

    im.face_unknown.assign(im.ids.n_u() + im.ids.n_v(), -1);
    for (int j = 0; j < nc; ++j)
        for (int i = 0; i <= nc; ++i)
            if (!im.u_dirichlet(i, j)) im.face_unknown[im.ids.u(i, j)] = im.n_unknowns++;
    for (int j = 0; j <= nc; ++j)
        for (int i = 0; i < nc; ++i)
            if (!im.v_dirichlet(i, j)) im.face_unknown[im.ids.v(i, j)] = im.n_unknowns++;

    // Constraint per fluid cell, one reference cell dropped (its equation is the
    // negative sum of the others whenever the data has zero mean).
    im.cell_constraint.assign(nc * nc, -1);
    for (int c = 0; c < nc * nc; ++c) {
        if (!im.fluid[c]) continue;
        if (im.reference_cell < 0) {
            im.reference_cell = c;
            continue;
        }
        im.cell_constraint[c] = im.n_constraints++;
    }

    const int N = im.n_unknowns + im.n_constraints;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(N) * 7);

    const double w = 1.0 / (im.hc * im.hc);
    std::vector<double> diag(im.n_unknowns, 0.0);
    im.for_energy_pairs([&](int fa, int fb) {
        const int a = im.face_unknown[fa];
        diag[a] += w;
        if (fb >= 0) {
            const int b = im.face_unknown[fb];
            diag[b] += w;
            trip.emplace_back(a, b, -w);
            trip.emplace_back(b, a, -w);
        }
    });
    for (int a = 0; a < im.n_unknowns; ++a) trip.emplace_back(a, a, diag[a]);

    const double dw = 1.0 / im.hc;
    for (int j = 0; j < nc; ++j)
        for (int i = 0; i < nc; ++i) {
            const int row = im.cell_constraint[im.ids.cell(i, j)];
            if (row < 0) continue;
            const int r = im.n_unknowns + row;
            const int f[4] = {im.ids.u(i + 1, j), im.ids.u(i, j), im.ids.v(i, j + 1),
                              im.ids.v(i, j)};
            const double s[4] = {dw, -dw, dw, -dw};
            for (int k = 0; k < 4; ++k) {
                const int a = im.face_unknown[f[k]];
                if (a < 0) continue;
                trip.emplace_back(r, a, s[k]);
                trip.emplace_back(a, r, s[k]);
            }
        }

    im.kkt.resize(N, N);
    im.kkt.setFromTriplets(trip.begin(), trip.end());
    im.kkt.makeCompressed();
    im.lu.compute(im.kkt);
    if (im.lu.info() != Eigen::Success)
        throw std::runtime_error("CellDivergenceSolver: factorization failed");
}

CellDivergenceSolver::~CellDivergenceSolver() = default;

int CellDivergenceSolver::nc() const { return impl_->nc; }
double CellDivergenceSolver::hc() const { return impl_->hc; }
const BoolArray& CellDivergenceSolver::solid_cells() const { return impl_->solid; }
const BoolArray& CellDivergenceSolver::fluid_cells() const { return impl_->fluid; }
double CellDivergenceSolver::fluid_area() const { return impl_->fluid_area; }

Grid CellDivergenceSolver::cell_center_grid() const {
    const Impl& im = *impl_;
    return Grid(Vector2d(-2.0 + 0.5 * im.hc, -2.0 + 0.5 * im.hc), im.hc, im.nc, im.nc,
                Boundary::open);
}

Grid CellDivergenceSolver::node_grid() const {
    const Impl& im = *impl_;
    return Grid(Vector2d(-2.0, -2.0), im.hc, im.nc + 1, im.nc + 1, Boundary::open);
}

ArrayXd CellDivergenceSolver::face_divergence(const ArrayXd& u_faces,
                                              const ArrayXd& v_faces) const {
    const Impl& im = *impl_;
    const int nc = im.nc;
    ArrayXd div = ArrayXd::Zero(nc * nc);
    for (int j = 0; j < nc; ++j)
        for (int i = 0; i < nc; ++i) {
            if (!im.fluid[im.ids.cell(i, j)]) continue;
            div[im.ids.cell(i, j)] =
                (u_faces[im.ids.u(i + 1, j)] - u_faces[im.ids.u(i, j)] +
                 v_faces[im.ids.v(i, j + 1) - im.ids.n_u()] -
                 v_faces[im.ids.v(i, j) - im.ids.n_u()]) /
                im.hc;
        }
    return div;
}

double CellDivergenceSolver::quadratic_energy(const ArrayXd& u_faces,
                                              const ArrayXd& v_faces) const {
    const Impl& im = *impl_;
    auto value = [&](int fid) {
        return fid < im.ids.n_u() ? u_faces[fid] : v_faces[fid - im.ids.n_u()];
    };
    double e = 0.0;
    im.for_energy_pairs([&](int fa, int fb) {
        const double d = value(fa) - (fb >= 0 ? value(fb) : 0.0);
        e += d * d;
    });
    return e; // (hc/hc)^2 weights cancel: sum of squared differences ~ integral |grad|^2
}

CellSolution CellDivergenceSolver::solve(const ArrayXd& f_cells, double mean_tolerance,
                                         bool project_mean) const {
    const Impl& im = *impl_;
    const int nc = im.nc;
    if (f_cells.size() != nc * nc)
        throw std::invalid_argument("CellDivergenceSolver::solve: f size mismatch");

    double sum = 0.0, abs_sum = 0.0;
    int n_fluid = 0;
    for (int c = 0; c < nc * nc; ++c) {
        if (!im.fluid[c]) continue;
        sum += f_cells[c];
        abs_sum += std::abs(f_cells[c]);
        ++n_fluid;
    }
    const double mean = sum / n_fluid;
    const double scale = abs_sum / n_fluid;
    double subtracted = 0.0;
    if (std::abs(mean) > mean_tolerance * (scale > 0 ? scale : 1.0)) {
        if (!project_mean)
            throw std::invalid_argument(
                "solve_cell_divergence: rhs must have zero mean over the cell "
                "(relative mean = " +
                std::to_string(scale > 0 ? mean / scale : mean) + ")");
        subtracted = mean;
    } else if (project_mean) {
        subtracted = mean; // remove rounding-level mean so the dropped row stays consistent
    }

    Eigen::VectorXd b = Eigen::VectorXd::Zero(im.n_unknowns + im.n_constraints);
    for (int c = 0; c < nc * nc; ++c) {
        const int row = im.cell_constraint[c];
        if (row >= 0) b[im.n_unknowns + row] = f_cells[c] - subtracted;
    }

    Eigen::VectorXd x = im.lu.solve(b);
    if (im.lu.info() != Eigen::Success)
        throw std::runtime_error("solve_cell_divergence: back-substitution failed");

    CellSolution sol;
    sol.mean_subtracted = subtracted;
    sol.u_faces = ArrayXd::Zero(im.ids.n_u());
    sol.v_faces = ArrayXd::Zero(im.ids.n_v());
    for (int f = 0; f < im.ids.n_u(); ++f)
        if (im.face_unknown[f] >= 0) sol.u_faces[f] = x[im.face_unknown[f]];
    for (int f = 0; f < im.ids.n_v(); ++f)
        if (im.face_unknown[im.ids.n_u() + f] >= 0)
            sol.v_faces[f] = x[im.face_unknown[im.ids.n_u() + f]];

    // Algebraic residual over all fluid cells, the dropped one included.
    const ArrayXd div = face_divergence(sol.u_faces, sol.v_faces);
    double num = 0.0, den = 0.0;
    for (int c = 0; c < nc * nc; ++c) {
        if (!im.fluid[c]) continue;
        const double target = f_cells[c] - subtracted;
        num += (div[c] - target) * (div[c] - target);
        den += target * target;
    }
    sol.residual_rel = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    sol.energy = quadratic_energy(sol.u_faces, sol.v_faces);

    // Face-average resampling to nodes; wall and staircase nodes come out exactly 0.
    sol.h = VectorField(node_grid());
    for (int j = 0; j <= nc; ++j)
        for (int i = 0; i <= nc; ++i) {
            const int k = sol.h.grid.idx(i, j);
            if (j == 0 || j == nc)
                sol.h.x[k] = 0.0;
            else
                sol.h.x[k] =
                    0.5 * (sol.u_faces[im.ids.u(i, j - 1)] + sol.u_faces[im.ids.u(i, j)]);
            if (i == 0 || i == nc)
                sol.h.y[k] = 0.0;
            else
                sol.h.y[k] = 0.5 * (sol.v_faces[im.ids.v(i - 1, j) - im.ids.n_u()] +
                                    sol.v_faces[im.ids.v(i, j) - im.ids.n_u()]);
        }
    return sol;
}

std::shared_ptr<const CellDivergenceSolver> CellDivergenceSolver::shared(
    const ObstacleShape& shape, int nc) {
    static std::mutex m;
    static std::map<std::pair<std::string, int>,
                    std::shared_ptr<const CellDivergenceSolver>>
        cache;
    std::lock_guard<std::mutex> lock(m);
    std::string key_name = shape.name();
    if (shape.kind == ObstacleShape::Kind::smoothed_square)
        key_name += ":" + std::to_string(shape.corner_radius);
    const auto key = std::make_pair(key_name, nc);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto solver = std::make_shared<const CellDivergenceSolver>(shape, nc);
    cache.emplace(key, solver);
    return solver;
}

CellSolution solve_cell_divergence(const CellProblem& problem) {
    auto solver = CellDivergenceSolver::shared(problem.shape, problem.nc);
    return solver->solve(problem.f_cells, problem.tolerance, false);
}

double cell_lp_norm(const VectorField& h_nodal, double p, int stride) {
    const Grid& g = h_nodal.grid;
    const double w = (stride * g.h) * (stride * g.h);
    if (std::isinf(p)) {
        double m = 0.0;
        for (int j = 0; j + 1 < g.ny; j += stride)
            for (int i = 0; i + 1 < g.nx; i += stride)
                m = std::max(m, h_nodal.at(i, j).norm());
        return m;
    }
    double acc = 0.0;
    for (int j = 0; j + 1 < g.ny; j += stride)
        for (int i = 0; i + 1 < g.nx; i += stride)
            acc += std::pow(h_nodal.at(i, j).norm(), p) * w;
    return std::pow(acc, 1.0 / p);
}

double cell_grad_lp_norm(const VectorField& h_nodal, double p, int stride) {
    const Grid& g = h_nodal.grid;
    const double hs = stride * g.h;
    const double w = hs * hs;
    double acc = 0.0, mx = 0.0;
    for (int j = 0; j + stride < g.ny; j += stride)
        for (int i = 0; i + stride < g.nx; i += stride) {
            const Vector2d h00 = h_nodal.at(i, j);
            const Vector2d hx = (h_nodal.at(i + stride, j) - h00) / hs;
            const Vector2d hy = (h_nodal.at(i, j + stride) - h00) / hs;
            const double frob = std::sqrt(hx.squaredNorm() + hy.squaredNorm());
            if (std::isinf(p))
                mx = std::max(mx, frob);
            else
                acc += std::pow(frob, p) * w;
        }
    if (std::isinf(p)) return mx;
    return std::pow(acc, 1.0 / p);
}

} // namespace pflow
