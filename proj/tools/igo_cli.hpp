#ifndef IGO_TOOLS_CLI_HPP
#define IGO_TOOLS_CLI_HPP

// Command-line front end: simulate | design | analyze | scan | manifolds.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 infeasible design,
// 4 solver failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "igo/io.hpp"

namespace igo::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kInfeasible = 3, kSolverFailure = 4 };

namespace detail {

namespace fs = std::filesystem;

inline std::string vec3_text(const Vec3& v) {
    return "(" + format_number(v[0]) + ", " + format_number(v[1]) + ", " + format_number(v[2]) + ")";
}

inline std::string complex_text(const std::complex<double>& z) {
    if (z.imag() == 0.0) return format_number(z.real());
    return format_number(z.real()) + (z.imag() < 0 ? " - " : " + ") + format_number(std::abs(z.imag())) + "i";
}

inline Vec3 to_vec3(const std::vector<double>& v, const char* flag) {
    if (v.size() != 3) throw ConfigError(std::string(flag) + ": expected three comma-separated numbers");
    return {v[0], v[1], v[2]};
}

inline DesignLimits to_limits(const std::vector<double>& v) {
    if (v.size() != 4) throw ConfigError("--limits: expected f1,f2,phi1,phi2");
    return {v[0], v[1], v[2], v[3]};
}

inline void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + path.string() + "'");
    body(os);
}

inline void print_manifolds(std::ostream& out, const SwitchingManifolds& s) {
    const auto show = [&](const char* name, const std::optional<double>& v) {
        out << "  " << name << " = " << (v ? format_number(*v) : std::string("none")) << '\n';
    };
    out << "switching manifolds (x3 thresholds):\n";
    show("cL_phi", s.cL_phi);
    show("cR_phi", s.cR_phi);
    show("cL_f", s.cL_f);
    show("cR_f", s.cR_f);
}

inline void print_controller(std::ostream& out, const ModulationParams& mp) {
    out << "k1 = " << format_number(mp.k1) << '\n'
        << "k2 = " << format_number(mp.k2) << '\n'
        << "k3 = " << format_number(mp.k3) << '\n'
        << "k4 = " << format_number(mp.k4) << '\n'
        << "limits: f1 = " << format_number(mp.f1) << ", f2 = " << format_number(mp.f2)
        << ", phi1 = " << format_number(mp.phi1) << ", phi2 = " << format_number(mp.phi2) << '\n';
}

inline void print_cycle(std::ostream& out, const ClosedLoop& cl, const CycleSolution& c) {
    const SwitchingManifolds s = ::igo::detail::manifolds_or_absent(cl.mp, cl.pd);
    out << "m = " << c.m << "  (Newton iterations " << c.iterations << ", residual " << format_number(c.residual)
        << ")\n";
    for (std::size_t i = 0; i < c.points.size(); ++i)
        out << "  X" << i + 1 << " = " << vec3_text(c.points[i]) << "  lambda = " << format_number(c.doses[i])
            << "  T = " << format_number(c.intervals[i])
            << "  manifold distance = " << format_number(manifold_distance(s, c.points[i][2])) << '\n';
    out << "multipliers:";
    for (const auto& z : c.multipliers) out << ' ' << complex_text(z);
    const StabilityVerdict v = classify_stability(c);
    out << "\nspectral radius = " << format_number(v.spectral_radius) << "  verdict: " << to_string(v.kind) << '\n';
}

// Controller flags shared by analyze and manifolds.
struct ControllerSource {
    std::string config;
    std::vector<double> k;
    std::vector<double> limits;
    std::optional<double> lambda, T, slope_f, slope_phi, ybar0;
    std::optional<double> design_alpha, design_gamma;

    void add_to(CLI::App* app) {
        app->add_option("--config", config, "JSON run configuration supplying the controller")->check(CLI::ExistingFile);
        app->add_option("--k", k, "explicit coefficients k1,k2,k3,k4")->delimiter(',')->expected(4);
        app->add_option("--limits", limits, "saturation limits f1,f2,phi1,phi2")->delimiter(',')->expected(4);
        app->add_option("--lambda", lambda, "designed dose lambda*");
        app->add_option("--T", T, "designed interval T*");
        app->add_option("--slope-f", slope_f, "dF/dybar at the operating point");
        app->add_option("--slope-phi", slope_phi, "dPhi/dybar at the operating point");
        app->add_option("--ybar0", ybar0, "operating output override for the design");
        app->add_option("--design-alpha", design_alpha, "patient alpha used for the design (default: population mean)");
        app->add_option("--design-gamma", design_gamma, "patient gamma used for the design (default: population mean)");
    }

    bool design_requested() const { return lambda || T || slope_f || slope_phi; }

    ModulationParams resolve(std::optional<RunConfig>& cfg) const {
        const int sources = int(!config.empty()) + int(!k.empty()) + int(design_requested());
        if (sources != 1) throw ConfigError("give exactly one controller source: --config, --k, or design flags");
        if (!config.empty()) {
            cfg = load_config(config);
            return resolve_controller(*cfg);
        }
        if (limits.empty()) throw ConfigError("--limits is required with --k or design flags");
        const DesignLimits lim = to_limits(limits);
        if (!k.empty()) {
            ModulationParams mp{k[0], k[1], k[2], k[3], lim.phi1, lim.phi2, lim.f1, lim.f2};
            mp.validate();
            return mp;
        }
        if (!(lambda && T && slope_f && slope_phi))
            throw ConfigError("design source needs --lambda, --T, --slope-f and --slope-phi");
        DesignSpec spec;
        spec.patient = {design_alpha.value_or(kAlphaMean), design_gamma.value_or(kGammaMean)};
        spec.lambda_star = *lambda;
        spec.T_star = *T;
        spec.slope_F = *slope_f;
        spec.slope_Phi = *slope_phi;
        spec.limits = lim;
        spec.ybar0 = ybar0;
        return design_controller(spec).controller;
    }
};

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace detail;
    CLI::App app{"Impulsive Goodwin oscillator: neuromuscular blockade dosing model"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate the closed loop from a run configuration");
    std::string sim_config;
    std::optional<double> sim_horizon;
    std::optional<std::size_t> sim_firings;
    std::vector<double> sim_x0;
    std::optional<std::string> sim_out;
    bool sim_plot = false;
    sim->add_option("config", sim_config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--horizon", sim_horizon, "simulated time in minutes");
    sim->add_option("--firings", sim_firings, "number of firings to simulate");
    sim->add_option("--x0", sim_x0, "initial state x1,x2,x3")->delimiter(',')->expected(3);
    sim->add_option("--out", sim_out, "output directory (default: config output.dir)");
    sim->add_flag("--plot-script", sim_plot, "also write plot.py");

    // design
    auto* des = app.add_subcommand("design", "synthesise a controller for a desired 1-cycle");
    double d_alpha = 0, d_gamma = 0, d_lambda = 0, d_T = 0, d_sf = 0, d_sp = 0;
    std::vector<double> d_limits;
    std::optional<double> d_ybar0;
    std::string d_out = ".";
    des->add_option("--alpha", d_alpha, "patient alpha")->required();
    des->add_option("--gamma", d_gamma, "patient gamma")->required();
    des->add_option("--lambda", d_lambda, "desired dose lambda*")->required();
    des->add_option("--T", d_T, "desired interval T*")->required();
    des->add_option("--slope-f", d_sf, "dF/dybar at the operating point")->required();
    des->add_option("--slope-phi", d_sp, "dPhi/dybar at the operating point")->required();
    des->add_option("--limits", d_limits, "f1,f2,phi1,phi2")->delimiter(',')->expected(4)->required();
    des->add_option("--ybar0", d_ybar0, "operating output override");
    des->add_option("--out", d_out, "output directory for cycles.csv");

    // analyze
    auto* ana = app.add_subcommand("analyze", "solve and classify an m-cycle");
    int a_m = 1;
    std::vector<double> a_guess;
    std::optional<double> a_alpha, a_gamma;
    std::string a_out = ".";
    ControllerSource a_src;
    ana->add_option("--m", a_m, "cycle period")->required()->check(CLI::PositiveNumber);
    ana->add_option("--guess", a_guess, "initial guess x1,x2,x3")->delimiter(',')->expected(3);
    ana->add_option("--alpha", a_alpha, "patient alpha (default: config or population mean)");
    ana->add_option("--gamma", a_gamma, "patient gamma (default: config or population mean)");
    ana->add_option("--out", a_out, "output directory for cycles.csv");
    a_src.add_to(ana);

    // scan
    auto* scn = app.add_subcommand("scan", "one- or two-parameter attractor scan");
    std::string s_config;
    std::vector<std::string> s_axes;
    std::string s_grid;
    std::optional<unsigned> s_workers;
    std::optional<std::string> s_out;
    bool s_plot = false;
    scn->add_option("config", s_config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    scn->add_option("--axis,--axes", s_axes, "axis name:min:max (repeat for two axes)");
    scn->add_option("--grid", s_grid, "points per axis: N or NxM");
    scn->add_option("--workers", s_workers, "worker threads (capped by IGO_THREADS)");
    scn->add_option("--out", s_out, "output directory (default: config output.dir)");
    scn->add_flag("--plot-script", s_plot, "also write plot.py");

    // manifolds
    auto* man = app.add_subcommand("manifolds", "print the switching manifolds of a controller");
    std::optional<double> m_gamma;
    ControllerSource m_src;
    man->add_option("--gamma", m_gamma, "Hill exponent of the plant (default: config or population mean)");
    m_src.add_to(man);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands()) sub = s;
        err << (sub ? sub->help() : app.help());
        return kUsage;
    }

    try {
        if (*sim) {
            RunConfig rc = load_config(sim_config);
            SimulationSettings s = rc.simulation;
            if (sim_horizon) s.horizon = sim_horizon;
            if (sim_firings) s.firings = sim_firings;
            if (!sim_x0.empty()) s.x0 = to_vec3(sim_x0, "--x0");
            for (double v : s.x0)
                if (!(v >= 0.0)) throw ConfigError("--x0: state must be nonnegative");
            if (sim_horizon && *sim_horizon < 0.0) throw ConfigError("--horizon: must be nonnegative");
            const ModulationParams mp = resolve_controller(rc);
            const ClosedLoop cl = make_closed_loop(rc.plant, mp);
            SimulationRequest req{s.x0, s.horizon, s.firings, s.sample_step, s.initial_dose};
            if (!req.horizon && !req.n_firings) throw ConfigError("simulation: give a horizon or a firing count");
            const Trajectory tr = simulate(cl, req);

            const fs::path dir(sim_out.value_or(rc.output_dir));
            write_file(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, tr); });
            write_file(dir / "firings.csv", [&](std::ostream& os) { write_firings_csv(os, tr.firings); });
            if (sim_plot || rc.plot_script)
                write_file(dir / "plot.py", [&](std::ostream& os) { os << plot_script_text(); });

            out << "firings: " << tr.firings.size() << "  t_end = " << format_number(tr.t_end) << " min\n";
            if (!tr.firings.empty()) {
                const FiringRecord& last = tr.firings.back();
                out << "last firing: lambda = " << format_number(last.dose) << "  T = " << format_number(last.interval)
                    << '\n';
                const StateVector xN = tr.samples.back().x;
                const std::optional<int> period = detect_period(cl, xN, 32, 1e-6);
                if (period) {
                    out << "period estimate: " << *period << '\n';
                    try {
                        const CycleSolution c = solve_m_cycle(cl, *period, xN);
                        const auto recs = c.records();
                        const Corridor cor = stationary_corridor(recs, cl.pk, cl.pd);
                        out << "stationary corridor: [" << format_number(cor.y_min) << ", " << format_number(cor.y_max)
                            << "] %\n";
                        out << "stationary (lambda, T):";
                        for (std::size_t i = 0; i < c.doses.size(); ++i)
                            out << " (" << format_number(c.doses[i]) << ", " << format_number(c.intervals[i]) << ')';
                        out << '\n';
                    } catch (const Error& e) {
                        out << "stationary corridor: unavailable (" << e.what() << ")\n";
                    }
                } else {
                    out << "period estimate: none up to 32\n";
                }
            }
            const auto window = s.window.value_or(std::pair{0.0, tr.t_end});
            const Corridor w = output_corridor(tr, window.first, std::min(window.second, tr.t_end));
            out << "y over [" << format_number(window.first) << ", " << format_number(std::min(window.second, tr.t_end))
                << "]: inf = " << format_number(w.y_min) << " at t = " << format_number(w.t_min)
                << ", sup = " << format_number(w.y_max) << " at t = " << format_number(w.t_max) << '\n';
            return kOk;
        }

        if (*des) {
            DesignSpec spec;
            spec.patient = {d_alpha, d_gamma};
            spec.lambda_star = d_lambda;
            spec.T_star = d_T;
            spec.slope_F = d_sf;
            spec.slope_Phi = d_sp;
            spec.limits = to_limits(d_limits);
            spec.ybar0 = d_ybar0;
            const DesignResult r = design_controller(spec);
            print_controller(out, r.controller);
            out << "fixed point X = " << vec3_text(r.report.fixed_point) << '\n'
                << "ybar0 = " << format_number(r.report.ybar0) << "  hill = " << format_number(r.report.hill_at_ybar0)
                << "  hill slope = " << format_number(r.report.hill_slope_at_ybar0) << '\n';
            out << "multipliers:";
            for (const auto& z : r.report.multipliers) out << ' ' << complex_text(z);
            out << "\nverdict: " << to_string(r.report.verdict.kind)
                << "  feedback coefficient = " << format_number(r.report.feedback_coefficient) << '\n';
            print_manifolds(out, r.report.manifolds);
            for (const auto& w : r.report.warnings) out << "warning: " << w << '\n';

            const ClosedLoop cl = make_closed_loop(spec.patient, r.controller);
            CycleSolution c;
            if (spec.ybar0) {
                c = solve_m_cycle(cl, 1, r.report.fixed_point);
            } else {
                c = validate_design(r.controller, spec).cycle;
            }
            write_file(fs::path(d_out) / "cycles.csv", [&](std::ostream& os) { write_cycles_csv(os, {c}); });
            return kOk;
        }

        if (*ana) {
            std::optional<RunConfig> cfg;
            const ModulationParams mp = a_src.resolve(cfg);
            PatientParams p = cfg ? cfg->plant : PatientParams{kAlphaMean, kGammaMean};
            if (a_alpha) p.alpha = *a_alpha;
            if (a_gamma) p.gamma = *a_gamma;
            const ClosedLoop cl = make_closed_loop(p, mp);
            StateVector guess{};
            if (!a_guess.empty()) {
                guess = to_vec3(a_guess, "--guess");
            } else if (a_m == 1) {
                guess = find_one_cycle(cl);
            }
            const CycleSolution c = solve_m_cycle(cl, a_m, guess);
            print_cycle(out, cl, c);
            write_file(fs::path(a_out) / "cycles.csv", [&](std::ostream& os) { write_cycles_csv(os, {c}); });
            return kOk;
        }

        if (*scn) {
            RunConfig rc = load_config(s_config);
            ScanConfig sc = to_scan_config(rc);
            if (!s_axes.empty()) {
                sc.axes.clear();
                for (const auto& a : s_axes) {
                    std::vector<std::string> parts;
                    std::stringstream ss(a);
                    std::string part;
                    while (std::getline(ss, part, ':')) parts.push_back(part);
                    if (parts.size() != 3) throw ConfigError("--axis '" + a + "': expected name:min:max");
                    if (!is_scan_axis(parts[0])) throw ConfigError("--axis: unknown axis '" + parts[0] + "'");
                    ScanAxis ax;
                    ax.name = parts[0];
                    try {
                        ax.min = std::stod(parts[1]);
                        ax.max = std::stod(parts[2]);
                    } catch (const std::exception&) {
                        throw ConfigError("--axis '" + a + "': bounds must be numbers");
                    }
                    ax.count = 0;
                    sc.axes.push_back(ax);
                }
            }
            if (!s_grid.empty()) {
                std::vector<int> counts;
                std::stringstream ss(s_grid);
                std::string part;
                while (std::getline(ss, part, 'x')) {
                    try {
                        std::size_t used = 0;
                        counts.push_back(std::stoi(part, &used));
                        if (used != part.size()) throw std::invalid_argument("grid");
                    } catch (const std::exception&) {
                        throw ConfigError("--grid '" + s_grid + "': expected N or NxM");
                    }
                }
                if (counts.size() == 1) counts.resize(sc.axes.size(), counts[0]);
                if (counts.size() != sc.axes.size()) throw ConfigError("--grid: one count per axis required");
                for (std::size_t i = 0; i < counts.size(); ++i) sc.axes[i].count = counts[i];
            }
            for (const auto& ax : sc.axes)
                if (ax.count < 1) throw ConfigError("scan axis '" + ax.name + "': point count missing (use --grid)");
            sc.validate();

            const unsigned workers = resolve_workers(s_workers);
            const ProgressFn progress = [&err](std::size_t done, std::size_t total) {
                err << "\rscan: " << done << '/' << total << (done == total ? "\n" : "") << std::flush;
            };
            const fs::path dir(s_out.value_or(rc.output_dir));
            std::vector<ScanPoint> pts;
            if (sc.axes.size() == 1) {
                pts = scan_1d(sc, workers, progress);
                write_file(dir / "scan1d.csv", [&](std::ostream& os) { write_scan1d_csv(os, pts); });
            } else {
                pts = scan_2d(sc, workers, progress);
                write_file(dir / "scan2d.csv", [&](std::ostream& os) { write_scan2d_csv(os, pts); });
            }
            nlohmann::ordered_json meta;
            meta["seed"] = sc.seed;
            meta["random_ics"] = sc.random_ics;
            meta["include_induction"] = sc.include_induction;
            meta["include_fixed_point"] = sc.include_fixed_point;
            meta["initial_conditions"] = nlohmann::json::array();
            for (const auto& x : sc.initial_conditions) meta["initial_conditions"].push_back({x[0], x[1], x[2]});
            meta["axes"] = nlohmann::json::array();
            for (const auto& ax : sc.axes)
                meta["axes"].push_back({{"name", ax.name}, {"min", ax.min}, {"max", ax.max}, {"count", ax.count}});
            meta["controller"] = {{"k1", sc.controller.k1}, {"k2", sc.controller.k2}, {"k3", sc.controller.k3},
                                  {"k4", sc.controller.k4}, {"f1", sc.controller.f1}, {"f2", sc.controller.f2},
                                  {"phi1", sc.controller.phi1}, {"phi2", sc.controller.phi2}};
            write_file(dir / "scan_meta.json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
            if (s_plot || rc.plot_script)
                write_file(dir / "plot.py", [&](std::ostream& os) { os << plot_script_text(); });

            std::size_t multistable = 0, aperiodic = 0;
            for (const auto& p : pts) {
                multistable += p.multistable ? 1 : 0;
                for (const auto& o : p.outcomes) aperiodic += o.period == 0 ? 1 : 0;
            }
            out << "cells: " << pts.size() << "  multistable cells: " << multistable
                << "  aperiodic outcomes: " << aperiodic << "  workers: " << workers << '\n';
            return kOk;
        }

        if (*man) {
            std::optional<RunConfig> cfg;
            const ModulationParams mp = m_src.resolve(cfg);
            PatientParams p = cfg ? cfg->plant : PatientParams{kAlphaMean, kGammaMean};
            if (m_gamma) p.gamma = *m_gamma;
            print_controller(out, mp);
            print_manifolds(out, switching_manifolds(mp, build_pd(p)));
            return kOk;
        }
    } catch (const InfeasibleDesign& e) {
        err << "infeasible design: " << e.what() << '\n';
        return kInfeasible;
    } catch (const SynthesisInconsistency& e) {
        err << "design inconsistency: " << e.what() << '\n';
        return kInfeasible;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidParameter& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "file error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, out, err);
}

}  // namespace igo::cli

#endif  // IGO_TOOLS_CLI_HPP
