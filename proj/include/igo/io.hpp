#ifndef IGO_IO_HPP
#define IGO_IO_HPP

// CSV output schemas and the JSON run configuration.
//
// Every CSV starts with a header row and prints numbers with 9 significant
// digits. Row order is deterministic: time order for trajectories, then grid
// index, then initial-condition index for scans.

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cycles.hpp"
#include "design.hpp"
#include "errors.hpp"
#include "scan.hpp"
#include "simulation.hpp"

namespace igo {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace detail {

inline void write_row(std::ostream& os, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    os << '\n';
}

inline std::string num(double v) { return format_number(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    using detail::num;
    detail::write_row(os, {"t_min", "x1", "x2", "x3", "ybar", "y_percent", "firing_flag"});
    for (const Sample& s : tr.samples)
        detail::write_row(os, {num(s.t), num(s.x[0]), num(s.x[1]), num(s.x[2]), num(s.ybar), num(s.y),
                               num(static_cast<int>(s.kind))});
}

inline void write_firings_csv(std::ostream& os, const std::vector<FiringRecord>& firings) {
    using detail::num;
    detail::write_row(os, {"n", "t_n", "lambda_n", "T_n", "x1", "x2", "x3"});
    for (std::size_t n = 0; n < firings.size(); ++n) {
        const FiringRecord& r = firings[n];
        detail::write_row(os, {num(n), num(r.t), num(r.dose), num(r.interval), num(r.state[0]), num(r.state[1]),
                               num(r.state[2])});
    }
}

/// One row per recorded x3 sample; period 0 marks an orbit with no detected
/// period.
inline void write_scan1d_csv(std::ostream& os, const std::vector<ScanPoint>& points) {
    using detail::num;
    detail::write_row(os, {"param", "ic_index", "sample_index", "x3", "period", "lyapunov", "border_flag"});
    for (const ScanPoint& p : points)
        for (std::size_t ic = 0; ic < p.outcomes.size(); ++ic) {
            const AttractorOutcome& o = p.outcomes[ic];
            for (std::size_t k = 0; k < o.x3_samples.size(); ++k)
                detail::write_row(os, {num(p.a), num(ic), num(k), num(o.x3_samples[k]), num(o.period), num(o.lyapunov),
                                       num(o.border_flag ? 1 : 0)});
        }
}

inline void write_scan2d_csv(std::ostream& os, const std::vector<ScanPoint>& points) {
    using detail::num;
    detail::write_row(os, {"param_a", "param_b", "ic_index", "period", "lyapunov", "multistable_flag"});
    for (const ScanPoint& p : points)
        for (std::size_t ic = 0; ic < p.outcomes.size(); ++ic) {
            const AttractorOutcome& o = p.outcomes[ic];
            detail::write_row(os, {num(p.a), num(p.b), num(ic), num(o.period), num(o.lyapunov),
                                   num(p.multistable ? 1 : 0)});
        }
}

inline void write_cycles_csv(std::ostream& os, const std::vector<CycleSolution>& cycles) {
    using detail::num;
    detail::write_row(os, {"m", "point_index", "x1", "x2", "x3", "lambda", "T", "max_multiplier_abs", "stable"});
    for (const CycleSolution& c : cycles)
        for (std::size_t i = 0; i < c.points.size(); ++i)
            detail::write_row(os, {num(c.m), num(i), num(c.points[i][0]), num(c.points[i][1]), num(c.points[i][2]),
                                   num(c.doses[i]), num(c.intervals[i]), num(c.margin), num(c.stable ? 1 : 0)});
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV written by the functions above.
inline CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    const auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        return cells;
    };
    if (!std::getline(is, line)) throw ConfigError("read_csv: missing header");
    t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& c : split(line)) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                throw ConfigError("read_csv: non-numeric cell '" + c + "'");
            }
            if (used != c.size()) throw ConfigError("read_csv: non-numeric cell '" + c + "'");
            row.push_back(v);
        }
        if (row.size() != t.header.size()) throw ConfigError("read_csv: ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct SimulationSettings {
    StateVector x0{};
    std::optional<double> horizon;
    std::optional<std::size_t> firings;
    std::optional<double> sample_step;
    std::optional<FiringDecision> initial_dose;
    std::optional<std::pair<double, double>> window;
};

struct ScanSettings {
    std::vector<ScanAxis> axes;
    ClassifyOptions classify{};
    bool include_induction = true;
    bool include_fixed_point = true;
    std::vector<StateVector> initial_conditions;
    int random_ics = 8;
    std::uint64_t seed = 20240917;
};

struct RunConfig {
    PatientParams plant{};
    std::optional<ModulationParams> controller;
    std::optional<DesignSpec> design;
    SimulationSettings simulation{};
    std::optional<ScanSettings> scan;
    std::string output_dir = ".";
    bool plot_script = false;
};

namespace detail {

using json = nlohmann::json;

class ConfigReader {
public:
    static void require_object(const json& j, const std::string& path) {
        if (!j.is_object()) throw ConfigError("config field '" + path + "': expected an object");
    }

    static void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
        require_object(j, path);
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key()))
                throw ConfigError("config field '" + join(path, it.key()) + "': unknown key");
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    static double number(const json& j, const std::string& path, const char* key) {
        if (!j.contains(key)) throw ConfigError("config field '" + join(path, key) + "': missing");
        return number_at(j.at(key), join(path, key));
    }

    static double number_at(const json& v, const std::string& path) {
        if (!v.is_number()) throw ConfigError("config field '" + path + "': expected a number");
        return v.get<double>();
    }

    static std::optional<double> opt_number(const json& j, const std::string& path, const char* key) {
        if (!j.contains(key)) return std::nullopt;
        return number_at(j.at(key), join(path, key));
    }

    static std::optional<long long> opt_integer(const json& j, const std::string& path, const char* key) {
        if (!j.contains(key)) return std::nullopt;
        const json& v = j.at(key);
        if (!v.is_number_integer()) throw ConfigError("config field '" + join(path, key) + "': expected an integer");
        return v.get<long long>();
    }

    static std::optional<bool> opt_bool(const json& j, const std::string& path, const char* key) {
        if (!j.contains(key)) return std::nullopt;
        const json& v = j.at(key);
        if (!v.is_boolean()) throw ConfigError("config field '" + join(path, key) + "': expected a boolean");
        return v.get<bool>();
    }

    static StateVector state(const json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 3) throw ConfigError("config field '" + path + "': expected [x1, x2, x3]");
        StateVector x;
        for (std::size_t i = 0; i < 3; ++i) {
            x[i] = number_at(v[i], path + "[" + std::to_string(i) + "]");
            if (!(x[i] >= 0.0)) throw ConfigError("config field '" + path + "': state must be nonnegative");
        }
        return x;
    }

    static double positive(double v, const std::string& path) {
        if (!(v > 0.0)) throw ConfigError("config field '" + path + "': must be positive");
        return v;
    }

    static PatientParams patient(const json& j, const std::string& path) {
        only_keys(j, path, {"alpha", "gamma"});
        PatientParams p;
        p.alpha = positive(number(j, path, "alpha"), join(path, "alpha"));
        p.gamma = positive(number(j, path, "gamma"), join(path, "gamma"));
        return p;
    }

    static ModulationParams controller(const json& j, const std::string& path) {
        only_keys(j, path, {"k1", "k2", "k3", "k4", "f1", "f2", "phi1", "phi2"});
        ModulationParams mp;
        mp.k1 = number(j, path, "k1");
        mp.k2 = number(j, path, "k2");
        mp.k3 = number(j, path, "k3");
        mp.k4 = number(j, path, "k4");
        mp.f1 = positive(number(j, path, "f1"), join(path, "f1"));
        mp.f2 = positive(number(j, path, "f2"), join(path, "f2"));
        mp.phi1 = positive(number(j, path, "phi1"), join(path, "phi1"));
        mp.phi2 = positive(number(j, path, "phi2"), join(path, "phi2"));
        try {
            mp.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError("config field '" + path + "': " + e.what());
        }
        return mp;
    }

    static DesignLimits limits(const json& j, const std::string& path) {
        only_keys(j, path, {"f1", "f2", "phi1", "phi2"});
        DesignLimits l;
        l.f1 = positive(number(j, path, "f1"), join(path, "f1"));
        l.f2 = positive(number(j, path, "f2"), join(path, "f2"));
        l.phi1 = positive(number(j, path, "phi1"), join(path, "phi1"));
        l.phi2 = positive(number(j, path, "phi2"), join(path, "phi2"));
        return l;
    }

    static DesignSpec design(const json& j, const std::string& path, const PatientParams& plant) {
        only_keys(j, path, {"patient", "lambda", "T", "slope_f", "slope_phi", "limits", "ybar0", "k1", "k3"});
        DesignSpec d;
        d.patient = j.contains("patient") ? patient(j.at("patient"), join(path, "patient")) : plant;
        d.lambda_star = positive(number(j, path, "lambda"), join(path, "lambda"));
        d.T_star = positive(number(j, path, "T"), join(path, "T"));
        d.slope_F = number(j, path, "slope_f");
        d.slope_Phi = number(j, path, "slope_phi");
        if (!j.contains("limits")) throw ConfigError("config field '" + join(path, "limits") + "': missing");
        d.limits = limits(j.at("limits"), join(path, "limits"));
        d.ybar0 = opt_number(j, path, "ybar0");
        d.k1 = opt_number(j, path, "k1");
        d.k3 = opt_number(j, path, "k3");
        return d;
    }

    static SimulationSettings simulation(const json& j, const std::string& path) {
        only_keys(j, path, {"x0", "horizon", "firings", "sample_step", "initial_dose", "window"});
        SimulationSettings s;
        if (j.contains("x0")) s.x0 = state(j.at("x0"), join(path, "x0"));
        if (auto h = opt_number(j, path, "horizon")) {
            if (!(*h >= 0.0)) throw ConfigError("config field '" + join(path, "horizon") + "': must be nonnegative");
            s.horizon = *h;
        }
        if (auto n = opt_integer(j, path, "firings")) {
            if (*n < 0) throw ConfigError("config field '" + join(path, "firings") + "': must be nonnegative");
            s.firings = static_cast<std::size_t>(*n);
        }
        if (auto h = opt_number(j, path, "sample_step")) s.sample_step = positive(*h, join(path, "sample_step"));
        if (j.contains("initial_dose")) {
            const std::string p = join(path, "initial_dose");
            only_keys(j.at("initial_dose"), p, {"lambda", "T"});
            s.initial_dose = FiringDecision{positive(number(j.at("initial_dose"), p, "lambda"), join(p, "lambda")),
                                            positive(number(j.at("initial_dose"), p, "T"), join(p, "T"))};
        }
        if (j.contains("window")) {
            const json& w = j.at("window");
            const std::string p = join(path, "window");
            if (!w.is_array() || w.size() != 2) throw ConfigError("config field '" + p + "': expected [t_a, t_b]");
            s.window = {number_at(w[0], p + "[0]"), number_at(w[1], p + "[1]")};
            if (!(s.window->first <= s.window->second)) throw ConfigError("config field '" + p + "': empty window");
        }
        return s;
    }

    static ScanSettings scan(const json& j, const std::string& path) {
        only_keys(j, path, {"axes", "transient", "record_count", "max_period", "period_tol", "lyapunov_iterations",
                            "border_tol", "include_induction", "include_fixed_point", "initial_conditions",
                            "random_ics", "seed"});
        ScanSettings s;
        if (j.contains("axes")) {
            const json& axes = j.at("axes");
            const std::string p = join(path, "axes");
            if (!axes.is_array()) throw ConfigError("config field '" + p + "': expected an array");
            for (std::size_t i = 0; i < axes.size(); ++i) {
                const std::string ap = p + "[" + std::to_string(i) + "]";
                only_keys(axes[i], ap, {"name", "min", "max", "count"});
                ScanAxis a;
                if (!axes[i].contains("name") || !axes[i].at("name").is_string())
                    throw ConfigError("config field '" + ap + ".name': expected a string");
                a.name = axes[i].at("name").get<std::string>();
                if (!is_scan_axis(a.name)) throw ConfigError("config field '" + ap + ".name': unknown axis '" + a.name + "'");
                a.min = number(axes[i], ap, "min");
                a.max = number(axes[i], ap, "max");
                const auto c = opt_integer(axes[i], ap, "count");
                if (!c) throw ConfigError("config field '" + ap + ".count': missing");
                a.count = static_cast<int>(*c);
                s.axes.push_back(a);
            }
        }
        if (auto v = opt_integer(j, path, "transient")) s.classify.transient = static_cast<int>(*v);
        if (auto v = opt_integer(j, path, "record_count")) s.classify.record_count = static_cast<int>(*v);
        if (auto v = opt_integer(j, path, "max_period")) s.classify.max_period = static_cast<int>(*v);
        if (auto v = opt_number(j, path, "period_tol")) s.classify.period_tol = positive(*v, join(path, "period_tol"));
        if (auto v = opt_integer(j, path, "lyapunov_iterations")) s.classify.lyapunov_iterations = static_cast<int>(*v);
        if (auto v = opt_number(j, path, "border_tol")) s.classify.border_tol = positive(*v, join(path, "border_tol"));
        if (auto v = opt_bool(j, path, "include_induction")) s.include_induction = *v;
        if (auto v = opt_bool(j, path, "include_fixed_point")) s.include_fixed_point = *v;
        if (j.contains("initial_conditions")) {
            const json& ics = j.at("initial_conditions");
            const std::string p = join(path, "initial_conditions");
            if (!ics.is_array()) throw ConfigError("config field '" + p + "': expected an array");
            for (std::size_t i = 0; i < ics.size(); ++i)
                s.initial_conditions.push_back(state(ics[i], p + "[" + std::to_string(i) + "]"));
        }
        if (auto v = opt_integer(j, path, "random_ics")) s.random_ics = static_cast<int>(*v);
        if (auto v = opt_integer(j, path, "seed")) {
            if (*v < 0) throw ConfigError("config field '" + join(path, "seed") + "': must be nonnegative");
            s.seed = static_cast<std::uint64_t>(*v);
        }
        return s;
    }
};

inline std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace detail

/// Parses a run configuration. Unknown keys and non-numeric values are errors.
inline RunConfig parse_config(const std::string& text) {
    using detail::ConfigReader;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
    }
    ConfigReader::only_keys(j, "", {"patient", "controller", "design", "simulation", "scan", "output"});
    RunConfig rc;
    if (j.contains("patient")) rc.plant = ConfigReader::patient(j.at("patient"), "patient");
    if (j.contains("controller")) rc.controller = ConfigReader::controller(j.at("controller"), "controller");
    if (j.contains("design")) rc.design = ConfigReader::design(j.at("design"), "design", rc.plant);
    if (rc.controller.has_value() == rc.design.has_value())
        throw ConfigError("config: exactly one of 'controller' and 'design' must be given");
    if (j.contains("simulation")) rc.simulation = ConfigReader::simulation(j.at("simulation"), "simulation");
    if (j.contains("scan")) rc.scan = ConfigReader::scan(j.at("scan"), "scan");
    if (j.contains("output")) {
        const auto& o = j.at("output");
        ConfigReader::only_keys(o, "output", {"dir", "plot_script"});
        if (o.contains("dir")) {
            if (!o.at("dir").is_string()) throw ConfigError("config field 'output.dir': expected a string");
            rc.output_dir = o.at("dir").get<std::string>();
        }
        if (auto v = ConfigReader::opt_bool(o, "output", "plot_script")) rc.plot_script = *v;
    }
    return rc;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Controller of a run: explicit coefficients or the result of the design.
inline ModulationParams resolve_controller(const RunConfig& rc) {
    if (rc.controller) return *rc.controller;
    return design_controller(*rc.design).controller;
}

inline ScanConfig to_scan_config(const RunConfig& rc) {
    ScanConfig sc;
    sc.controller = resolve_controller(rc);
    sc.base = rc.plant;
    if (rc.scan) {
        sc.axes = rc.scan->axes;
        sc.classify = rc.scan->classify;
        sc.include_induction = rc.scan->include_induction;
        sc.include_fixed_point = rc.scan->include_fixed_point;
        sc.initial_conditions = rc.scan->initial_conditions;
        sc.random_ics = rc.scan->random_ics;
        sc.seed = rc.scan->seed;
    }
    return sc;
}

/// Matplotlib script that renders whichever of the CSVs exist next to it.
inline std::string plot_script_text() {
    return R"PY(#!/usr/bin/env python3
# Renders the CSV outputs found in this directory.
import csv, os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))

def load(name):
    path = os.path.join(here, name)
    if not os.path.exists(path):
        return None
    with open(path) as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else None

tr = load("trajectory.csv")
if tr:
    fig, ax = plt.subplots(2, 1, sharex=True)
    ax[0].plot(tr["t_min"], tr["y_percent"]); ax[0].set_ylabel("y [%]")
    ax[1].plot(tr["t_min"], tr["ybar"]); ax[1].set_ylabel("ybar [ug/ml]"); ax[1].set_xlabel("t [min]")
    fig.savefig(os.path.join(here, "trajectory.png"), dpi=150)

s1 = load("scan1d.csv")
if s1:
    fig, ax = plt.subplots()
    ax.plot(s1["param"], s1["x3"], ",k")
    ax.set_xlabel("parameter"); ax.set_ylabel("x3 at firing")
    fig.savefig(os.path.join(here, "scan1d.png"), dpi=150)

s2 = load("scan2d.csv")
if s2:
    fig, ax = plt.subplots()
    sc = ax.scatter(s2["param_a"], s2["param_b"], c=s2["period"], s=6, cmap="tab20")
    fig.colorbar(sc, label="period (0 = aperiodic)")
    fig.savefig(os.path.join(here, "scan2d.png"), dpi=150)
)PY";
}

}  // namespace igo

#endif  // IGO_IO_HPP
