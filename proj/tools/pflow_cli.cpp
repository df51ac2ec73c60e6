// Command-line front end: geometry/cutoff/constants/initial-rate reports and
// the euler, ns, and study drivers. Field snapshots use the PFLOW1 format.

#include "pflow/calculus.hpp"
#include "pflow/corrector.hpp"
#include "pflow/cutoff.hpp"
#include "pflow/euler.hpp"
#include "pflow/field_io.hpp"
#include "pflow/geometry.hpp"
#include "pflow/initial_data.hpp"
#include "pflow/ns.hpp"
#include "pflow/study.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace pflow;

namespace {

ObstacleShape parse_shape(const std::string& name, double corner_radius) {
    if (name == "disk") return ObstacleShape::disk();
    if (name == "smoothed_square") return ObstacleShape::smoothed_square(corner_radius);
    throw CLI::ValidationError("shape must be disk or smoothed_square");
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
}

Grid lattice_grid(const Geometry& geo, int margin = 24) {
    const double eps = geo.config.epsilon;
    const double h = eps / 8.0;
    double xmax = 0, ymax = 0;
    for (const Vector2d& z : geo.centers) {
        xmax = std::max(xmax, z.x());
        ymax = std::max(ymax, z.y());
    }
    const int nx = static_cast<int>(std::round(xmax / h)) + 16 + 2 * margin + 1;
    const int ny = static_cast<int>(std::round(ymax / h)) + 16 + 2 * margin + 1;
    return Grid(Vector2d(eps - (16 + margin) * h, eps - (16 + margin) * h), h, nx, ny,
                Boundary::open);
}

VorticityBlob blob_from_json(const nlohmann::json& w) {
    VorticityBlob blob;
    blob.kind = w.value("kind", std::string("bump")) == "gaussian"
                    ? VorticityBlob::Kind::gaussian
                    : VorticityBlob::Kind::bump;
    blob.center = Vector2d(w.at("center")[0].get<double>(), w.at("center")[1].get<double>());
    blob.radius = w.at("radius").get<double>();
    blob.amplitude = w.value("amplitude", 1.0);
    return blob;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pflow: perforated-domain vanishing-viscosity laboratory"};
    app.require_subcommand(1);

    // ---- geometry ----------------------------------------------------------
    auto* geo_cmd = app.add_subcommand("geometry", "emit the obstacle lattice as JSON");
    double g_eps = 0.1, g_d = 0.1, g_mu = 1.0, g_corner = 0.25;
    std::string g_shape = "disk", g_out;
    geo_cmd->add_option("--epsilon", g_eps)->required();
    geo_cmd->add_option("--d", g_d)->required();
    geo_cmd->add_option("--mu", g_mu);
    geo_cmd->add_option("--shape", g_shape);
    geo_cmd->add_option("--corner-radius", g_corner);
    geo_cmd->add_option("--out", g_out, "output path (stdout when absent)");

    // ---- cutoff-norms ------------------------------------------------------
    auto* cut_cmd = app.add_subcommand("cutoff-norms",
                                       "CSV of cutoff norms against the scaling shape");
    std::vector<double> c_eps{0.1, 0.05, 0.025};
    std::vector<double> c_p{2.0, 4.0};
    double c_mu = 1.0;
    std::string c_drule = "d=eps", c_profile = "smoothstep", c_out;
    cut_cmd->add_option("--epsilons", c_eps);
    cut_cmd->add_option("--p", c_p);
    cut_cmd->add_option("--mu", c_mu);
    cut_cmd->add_option("--d-rule", c_drule);
    cut_cmd->add_option("--profile", c_profile, "smoothstep or harmonic");
    cut_cmd->add_option("--out", c_out);

    // ---- constants ---------------------------------------------------------
    auto* con_cmd = app.add_subcommand("constants",
                                       "CSV of measured reference-cell constants");
    std::string n_shape = "disk", n_out;
    double n_corner = 0.25;
    std::vector<double> n_p{2.0, 4.0};
    int n_ens = 20;
    unsigned n_seed = 2024;
    con_cmd->add_option("--shape", n_shape);
    con_cmd->add_option("--corner-radius", n_corner);
    con_cmd->add_option("--p", n_p);
    con_cmd->add_option("--ensemble", n_ens);
    con_cmd->add_option("--seed", n_seed);
    con_cmd->add_option("--out", n_out);

    // ---- initial-rate ------------------------------------------------------
    auto* rate_cmd = app.add_subcommand("initial-rate",
                                        "CSV of the initial-data convergence sweep");
    std::vector<double> r_eps{0.08, 0.04, 0.02};
    double r_mu = 0.0;
    std::string r_drule = "d=eps", r_out;
    double r_cx = 0.5, r_cy = 0.5, r_radius = 0.2, r_amp = 1.0;
    rate_cmd->add_option("--epsilons", r_eps);
    rate_cmd->add_option("--mu", r_mu);
    rate_cmd->add_option("--d-rule", r_drule);
    rate_cmd->add_option("--blob-center-x", r_cx);
    rate_cmd->add_option("--blob-center-y", r_cy);
    rate_cmd->add_option("--blob-radius", r_radius);
    rate_cmd->add_option("--blob-amplitude", r_amp);
    rate_cmd->add_option("--out", r_out);

    // ---- euler -------------------------------------------------------------
    auto* eul_cmd = app.add_subcommand("euler", "full-plane Euler run with snapshots");
    std::string e_config, e_outdir = "euler_out";
    eul_cmd->add_option("--config", e_config, "JSON config")->required();
    eul_cmd->add_option("--out-dir", e_outdir);

    // ---- ns ----------------------------------------------------------------
    auto* ns_cmd = app.add_subcommand("ns", "penalized Navier-Stokes run");
    std::string s_config, s_outdir = "ns_out";
    ns_cmd->add_option("--config", s_config, "JSON config")->required();
    ns_cmd->add_option("--out-dir", s_outdir);

    // ---- study -------------------------------------------------------------
    auto* st_cmd = app.add_subcommand("study", "vanishing-viscosity sweep");
    std::string t_config, t_outdir = "study_out";
    st_cmd->add_option("--config", t_config, "JSON config")->required();
    st_cmd->add_option("--out-dir", t_outdir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*geo_cmd) {
            LatticeConfig cfg{g_eps, g_d, g_mu, parse_shape(g_shape, g_corner)};
            const std::string text = to_json(lattice_centers(cfg));
            if (g_out.empty())
                std::cout << text << "\n";
            else
                write_file(g_out, text);
        }

        if (*cut_cmd) {
            std::ostringstream os;
            os << "epsilon,d_epsilon,mu,p,lhs,bound_shape,ratio\n";
            os.precision(10);
            for (const double eps : c_eps) {
                const double d = distance_rule(c_drule, eps);
                const Geometry geo = lattice_centers({eps, d, c_mu, ObstacleShape::disk()});
                const Grid grid = lattice_grid(geo);
                const CutoffProfile prof = c_profile == "harmonic"
                                               ? CutoffProfile::harmonic(eps, d)
                                               : CutoffProfile::smoothstep();
                for (const double p : c_p) {
                    const CutoffNormReport rep = verify_cutoff_norms(geo, grid, p, prof);
                    os << eps << ',' << d << ',' << c_mu << ',' << p << ',' << rep.lhs
                       << ',' << rep.bound_shape << ',' << rep.ratio() << '\n';
                }
            }
            if (c_out.empty())
                std::cout << os.str();
            else
                write_file(c_out, os.str());
        }

        if (*con_cmd) {
            std::ostringstream os;
            os << "shape,p,C_tilde,K1,K2,ensemble_size\n";
            os.precision(10);
            const ObstacleShape shape = parse_shape(n_shape, n_corner);
            for (const double p : n_p) {
                const CellConstants c = estimate_constants(shape, p, n_ens, n_seed);
                os << c.shape << ',' << c.p << ',' << c.c_tilde << ',' << c.k1 << ','
                   << c.k2 << ',' << c.ensemble << '\n';
            }
            if (n_out.empty())
                std::cout << os.str();
            else
                write_file(n_out, os.str());
        }

        if (*rate_cmd) {
            VorticityBlob blob;
            blob.kind = VorticityBlob::Kind::bump;
            blob.center = Vector2d(r_cx, r_cy);
            blob.radius = r_radius;
            blob.amplitude = r_amp;
            const auto rows =
                measure_initial_rate(ObstacleShape::disk(), blob, r_eps, r_drule, r_mu);
            std::ostringstream os;
            os << "epsilon,d_epsilon,mu,l2_error,bound_shape,ratio\n";
            os.precision(10);
            for (const auto& r : rows)
                os << r.epsilon << ',' << r.d_epsilon << ',' << r.mu << ',' << r.l2_error
                   << ',' << r.bound_shape << ',' << r.ratio << '\n';
            if (r_out.empty())
                std::cout << os.str();
            else
                write_file(r_out, os.str());
        }

        if (*eul_cmd) {
            std::ifstream in(e_config);
            if (!in) throw std::runtime_error("cannot open " + e_config);
            const auto j = nlohmann::json::parse(in);
            const VorticityBlob blob = blob_from_json(j.at("omega0"));
            const auto& gj = j.at("grid");
            const int n = gj.value("n", 256);
            const double x0 = gj.at("box")[0].get<double>();
            const double y0 = gj.at("box")[1].get<double>();
            const double side = gj.at("box")[2].get<double>();
            Grid grid(Vector2d(x0, y0), side / n, n, n, Boundary::open);
            const double T = j.value("T", 1.0);
            const int snaps = j.value("snapshots", 10);
            const double dt_max = j.value("dt_max", T / snaps);

            const EulerTrajectory traj = run_euler(sample(blob, grid), T, snaps, dt_max);
            std::filesystem::create_directories(e_outdir);
            for (size_t k = 0; k < traj.snapshots.size(); ++k) {
                write_snapshot(e_outdir + "/omega_" + std::to_string(k) + ".pflow1",
                               traj.snapshots[k].omega);
                write_snapshot(e_outdir + "/u_" + std::to_string(k) + ".pflow1",
                               traj.snapshots[k].u);
            }
            std::ostringstream os;
            os << "time,l1,l2,linf\n";
            os.precision(10);
            for (size_t k = 0; k < traj.conserved.time.size(); ++k)
                os << traj.conserved.time[k] << ',' << traj.conserved.l1[k] << ','
                   << traj.conserved.l2[k] << ',' << traj.conserved.linf[k] << '\n';
            write_file(e_outdir + "/conserved.csv", os.str());
            std::cout << "wrote " << traj.snapshots.size() << " snapshots to " << e_outdir
                      << "\n";
        }

        if (*ns_cmd) {
            std::ifstream in(s_config);
            if (!in) throw std::runtime_error("cannot open " + s_config);
            const auto j = nlohmann::json::parse(in);
            const VorticityBlob blob = blob_from_json(j.at("omega0"));
            const auto& gj = j.at("grid");
            const int n = gj.value("n", 256);
            const double x0 = gj.at("box")[0].get<double>();
            const double y0 = gj.at("box")[1].get<double>();
            const double side = gj.at("box")[2].get<double>();
            Grid grid(Vector2d(x0, y0), side / n, n, n, Boundary::periodic);
            Grid open = grid;
            open.boundary = Boundary::open;

            SimParams params;
            params.nu = j.at("nu").get<double>();
            params.dt = j.value("dt", 2e-3);
            params.T = j.value("T", 1.0);
            params.n_snapshots = j.value("snapshots", 50);
            if (j.contains("eta")) params.eta = j.at("eta").get<double>();

            const ScalarField om = sample(blob, open);
            VectorField u0(open);
            RegionMask mask;
            bool have_mask = false;
            if (j.contains("lattice")) {
                const auto& lj = j.at("lattice");
                LatticeConfig cfg;
                cfg.epsilon = lj.at("epsilon").get<double>();
                cfg.d_epsilon = lj.at("d_epsilon").get<double>();
                cfg.mu = lj.value("mu", 0.0);
                cfg.shape = parse_shape(lj.value("shape", std::string("disk")),
                                        lj.value("corner_radius", 0.25));
                const Geometry geo = lattice_centers(cfg);
                mask = rasterize(geo, open);
                mask.grid = grid;
                have_mask = true;
                u0 = cfg.shape.kind == ObstacleShape::Kind::disk
                         ? corrected_velocity_disk(geo, om, open)
                         : u0_eps_grid(geo, om, open);
                for (int k = 0; k < grid.size(); ++k)
                    if (mask.solid[k]) {
                        u0.x[k] = 0.0;
                        u0.y[k] = 0.0;
                    }
            } else {
                u0 = biot_savart_fft(om);
            }

            VectorField u0p(grid, u0.x, u0.y);
            const NSTrajectory traj = run_ns(u0p, params, have_mask ? &mask : nullptr);
            std::filesystem::create_directories(s_outdir);
            for (size_t k = 0; k < traj.snapshots.size(); ++k)
                write_snapshot(s_outdir + "/u_" + std::to_string(k) + ".pflow1",
                               traj.snapshots[k].u);
            std::ostringstream os;
            os << "time,energy,visc_diss,penal_diss,imbalance\n";
            os.precision(10);
            for (const LedgerRow& r : traj.ledger)
                os << r.time << ',' << r.energy << ',' << r.visc_diss << ','
                   << r.penal_diss << ',' << r.imbalance << '\n';
            write_file(s_outdir + "/energy_ledger.csv", os.str());
            std::cout << "wrote " << traj.snapshots.size() << " snapshots to " << s_outdir
                      << "\n";
        }

        if (*st_cmd) {
            std::ifstream in(t_config);
            if (!in) throw std::runtime_error("cannot open " + t_config);
            std::stringstream buf;
            buf << in.rdbuf();
            const StudyConfig config = study_config_from_json(buf.str());
            const StudyOutput out = run_study(config);
            std::filesystem::create_directories(t_outdir);
            write_file(t_outdir + "/records.csv", out.csv);
            write_file(t_outdir + "/summary.md", out.summary_md);
            std::cout << out.summary_md;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
