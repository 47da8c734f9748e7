#ifndef IGO_SCAN_HPP
#define IGO_SCAN_HPP

/**
 * @file scan.hpp
 * @brief Attractor classification, Lyapunov exponents and parameter scans.
 *
 * A grid cell is analysed by iterating the firing map from every configured
 * initial condition, detecting the least period of the settled orbit,
 * refining detected cycles with the Newton solver and estimating the largest
 * Lyapunov exponent for orbits with no short period. Cells are independent;
 * scans run them on a worker pool and merge by cell index, so the output does
 * not depend on the number of workers.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "controller.hpp"
#include "cycles.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "simulation.hpp"

namespace igo {

struct ClassifyOptions {
    int transient = 2000;
    int max_period = 32;
    double period_tol = 1e-8;
    int record_count = 64;
    int lyapunov_iterations = 2000;
    double border_tol = 1e-3;  ///< relative x3 distance flagged as near a manifold
};

enum class AttractorKind { Periodic, Chaotic, Unresolved, Diverged };

inline const char* to_string(AttractorKind k) noexcept {
    switch (k) {
        case AttractorKind::Periodic: return "periodic";
        case AttractorKind::Chaotic: return "chaotic";
        case AttractorKind::Unresolved: return "unresolved";
        case AttractorKind::Diverged: return "diverged";
    }
    return "?";
}

struct LyapunovEstimate {
    double value = 0.0;      ///< per iteration of the map
    double std_error = 0.0;  ///< batch-means standard error
    int manifold_crossings = 0;
    bool perturbed = false;  ///< initial state was nudged off a manifold
    int iterations = 0;
};

struct AttractorOutcome {
    AttractorKind kind = AttractorKind::Unresolved;
    int period = 0;  ///< least period, 0 when none was detected
    std::vector<double> x3_samples;
    std::vector<double> interval_samples;
    std::vector<double> dose_samples;
    std::vector<StateVector> cycle_points;
    bool refined = false;
    bool stable = false;
    double spectral_radius = std::numeric_limits<double>::quiet_NaN();
    double lyapunov = std::numeric_limits<double>::quiet_NaN();
    double lyapunov_error = 0.0;
    double manifold_distance = std::numeric_limits<double>::infinity();
    bool border_flag = false;
    StateVector final_state{};
};

/// Least m <= max_period with ||Q^m(x) - x|| <= tol ||x||.
inline std::optional<int> detect_period(const ClosedLoop& cl, const StateVector& x, int max_period, double tol) {
    StateVector cur = x;
    for (int m = 1; m <= max_period; ++m) {
        cur = step_state(cl, cur);
        if (relative_distance(cur, x) <= tol) return m;
    }
    return std::nullopt;
}

/// Largest Lyapunov exponent of the map from tangent-vector growth under the
/// analytic Jacobians, renormalised every iteration.
inline LyapunovEstimate lyapunov_exponent(const ClosedLoop& cl, const StateVector& x0, int n_iter, int batches = 20) {
    if (n_iter < 100) throw InvalidParameter("lyapunov_exponent: need at least 100 iterations");
    for (double v : x0)
        if (!(v >= 0.0)) throw DomainError("lyapunov_exponent: initial state must be nonnegative");
    const SwitchingManifolds sm = detail::manifolds_or_absent(cl.mp, cl.pd);
    LyapunovEstimate est;
    StateVector start = x0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        StateVector x = start;
        Vec3 v{1.0, 1.0, 1.0};
        v = (1.0 / norm(v)) * v;
        std::vector<double> batch_sums(static_cast<std::size_t>(batches), 0.0);
        const int per_batch = n_iter / batches;
        const int used = per_batch * batches;
        SegmentSignature prev = segment_of(cl.mp, cl.pd, x[2]);
        int crossings = 0;
        bool hit = false;
        for (int i = 0; i < used; ++i) {
            if (manifold_hit(sm, x[2])) {
                hit = true;
                break;
            }
            const JacobianParts p = detail::jacobian_parts(cl, x);
            v = p.jacobian * v;
            const double n = norm(v);
            batch_sums[static_cast<std::size_t>(i / per_batch)] += std::log(std::max(n, 1e-300));
            v = (n > 0.0) ? (1.0 / n) * v : Vec3{1.0, 0.0, 0.0};
            x = step_state(cl, x);
            const SegmentSignature seg = segment_of(cl.mp, cl.pd, x[2]);
            if (!(seg == prev)) ++crossings;
            prev = seg;
        }
        if (hit) {
            start = (1.0 + 1e-9) * start;
            if (start == StateVector{}) start = {1e-9, 1e-9, 1e-9};
            est.perturbed = true;
            continue;
        }
        double total = 0.0;
        for (double s : batch_sums) total += s;
        est.value = total / used;
        double var = 0.0;
        for (double s : batch_sums) {
            const double mean = s / per_batch;
            var += (mean - est.value) * (mean - est.value);
        }
        var /= (batches - 1);
        est.std_error = std::sqrt(var / batches);
        est.manifold_crossings = crossings;
        est.iterations = used;
        return est;
    }
    throw CycleNotFound("lyapunov_exponent: orbit keeps landing on a switching manifold");
}

namespace detail {

inline bool exceeds(const StateVector& x, const StateVector& bound) {
    for (std::size_t i = 0; i < 3; ++i)
        if (!(x[i] <= bound[i] * (1.0 + 1e-9))) return true;
    return false;
}

inline void record_orbit(const ClosedLoop& cl, StateVector x, const ClassifyOptions& opt, AttractorOutcome& out) {
    out.final_state = x;
    for (int i = 0; i < opt.record_count; ++i) {
        const StepResult s = step(cl, x);
        out.x3_samples.push_back(x[2]);
        out.interval_samples.push_back(s.record.interval);
        out.dose_samples.push_back(s.record.dose);
        x = s.next;
    }
}

}  // namespace detail

/// Settles the orbit from x0, then labels it periodic (with least period and
/// Newton-refined cycle), chaotic or unresolved.
inline AttractorOutcome classify_attractor(const ClosedLoop& cl, const StateVector& x0,
                                           const ClassifyOptions& opt = {}) {
    for (double v : x0)
        if (!(v >= 0.0)) throw DomainError("classify_attractor: initial state must be nonnegative");
    AttractorOutcome out;
    const StateVector bound = state_bound(cl.pk, cl.mp, x0);
    StateVector x = x0;
    const auto advance = [&](int n) {
        for (int i = 0; i < n; ++i) {
            x = step_state(cl, x);
            if (detail::exceeds(x, bound)) return false;
        }
        return true;
    };
    if (!advance(opt.transient)) {
        out.kind = AttractorKind::Diverged;
        out.final_state = x;
        return out;
    }
    const SwitchingManifolds sm = detail::manifolds_or_absent(cl.mp, cl.pd);
    // An orbit started exactly on a repelling cycle stays there in floating
    // point; such a cycle is nudged off and the transient repeated.
    for (int attempt = 0;; ++attempt) {
        std::optional<int> period = detect_period(cl, x, opt.max_period, opt.period_tol);
        if (!period) {
            // Slow contraction near a bifurcation: allow one more transient.
            if (!advance(opt.transient)) {
                out.kind = AttractorKind::Diverged;
                out.final_state = x;
                return out;
            }
            period = detect_period(cl, x, opt.max_period, opt.period_tol);
        }
        if (!period) break;

        CycleSolution sol;
        bool refined = false;
        int m = *period;
        try {
            sol = solve_m_cycle(cl, m, x, SolveOptions{});
            refined = true;
        } catch (const LeastPeriodViolation& e) {
            m = e.least_period();
            sol = assemble_cycle(cl, m, x);
        } catch (const CycleNotFound&) {
            sol = assemble_cycle(cl, m, x);
        }
        const bool stable = sol.margin < 1.0 - kStabilityMargin;
        if (!stable && attempt < 2) {
            x[2] *= 1.0 + 1e-6;
            if (!advance(opt.transient)) {
                out.kind = AttractorKind::Diverged;
                out.final_state = x;
                return out;
            }
            continue;
        }
        detail::record_orbit(cl, x, opt, out);
        out.kind = AttractorKind::Periodic;
        out.period = m;
        out.refined = refined;
        out.cycle_points = sol.points;
        out.spectral_radius = sol.margin;
        out.stable = stable;
        out.lyapunov = std::log(std::max(sol.margin, 1e-300)) / m;
        for (const StateVector& p : sol.points)
            out.manifold_distance = std::min(out.manifold_distance, manifold_distance(sm, p[2]));
        out.border_flag = out.manifold_distance < opt.border_tol;
        return out;
    }
    detail::record_orbit(cl, x, opt, out);

    LyapunovEstimate le;
    try {
        le = lyapunov_exponent(cl, x, std::max(opt.lyapunov_iterations, 100));
    } catch (const CycleNotFound&) {
        out.kind = AttractorKind::Unresolved;
        return out;
    }
    out.lyapunov = le.value;
    out.lyapunov_error = le.std_error;
    out.kind = (le.value > 0.0 && le.value > 3.0 * le.std_error) ? AttractorKind::Chaotic : AttractorKind::Unresolved;
    return out;
}

/// True when two outcomes describe the same attractor: equal period with a
/// matching cycle point, or both aperiodic.
inline bool same_attractor(const AttractorOutcome& a, const AttractorOutcome& b, double tol = 1e-5) {
    const bool ap = a.kind == AttractorKind::Periodic, bp = b.kind == AttractorKind::Periodic;
    if (ap != bp) return false;
    if (!ap) return a.kind == b.kind || (a.kind != AttractorKind::Diverged && b.kind != AttractorKind::Diverged);
    if (a.period != b.period || a.cycle_points.empty() || b.cycle_points.empty()) return false;
    return std::any_of(b.cycle_points.begin(), b.cycle_points.end(), [&](const StateVector& p) {
        return relative_distance(a.cycle_points.front(), p) <= tol;
    });
}

/// Basin label per outcome: index of the first outcome sharing its attractor.
inline std::vector<int> basin_labels(const std::vector<AttractorOutcome>& outcomes) {
    std::vector<int> labels(outcomes.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (same_attractor(outcomes[i], outcomes[j])) {
                labels[i] = labels[j];
                break;
            }
        if (labels[i] < 0) labels[i] = next++;
    }
    return labels;
}

struct DistinctAttractor {
    AttractorOutcome outcome;
    std::size_t representative = 0;  ///< index into the initial-condition set
    std::vector<std::size_t> members;
};

inline std::vector<DistinctAttractor> multistability_probe(const ClosedLoop& cl, const std::vector<StateVector>& ics,
                                                           const ClassifyOptions& opt = {}) {
    if (ics.empty()) throw InvalidParameter("multistability_probe: empty initial-condition set");
    std::vector<AttractorOutcome> outcomes;
    for (const StateVector& x0 : ics) outcomes.push_back(classify_attractor(cl, x0, opt));
    const std::vector<int> labels = basin_labels(outcomes);
    std::vector<DistinctAttractor> out;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto label = static_cast<std::size_t>(labels[i]);
        if (label == out.size()) out.push_back({outcomes[i], i, {}});
        out[label].members.push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameter families and scans
// ---------------------------------------------------------------------------

using LoopFamily = std::function<ClosedLoop(double)>;

inline bool is_scan_axis(const std::string& name) { return name == "alpha" || name == "gamma"; }

inline PatientParams with_param(PatientParams p, const std::string& axis, double v) {
    if (axis == "alpha")
        p.alpha = v;
    else if (axis == "gamma")
        p.gamma = v;
    else
        throw ConfigError("unknown scan axis '" + axis + "' (expected alpha or gamma)");
    return p;
}

/// Closed loops with a fixed controller and one plant parameter varied.
inline LoopFamily family_over(const std::string& axis, const PatientParams& base, const ModulationParams& mp) {
    if (!is_scan_axis(axis)) throw ConfigError("unknown scan axis '" + axis + "' (expected alpha or gamma)");
    return [axis, base, mp](double v) { return make_closed_loop(with_param(base, axis, v), mp); };
}

enum class BifurcationKind { Flip, SaddleNode, BorderCollision, Unclassified };

inline const char* to_string(BifurcationKind k) noexcept {
    switch (k) {
        case BifurcationKind::Flip: return "flip";
        case BifurcationKind::SaddleNode: return "saddle-node";
        case BifurcationKind::BorderCollision: return "border-collision";
        case BifurcationKind::Unclassified: return "unclassified";
    }
    return "?";
}

struct BifurcationPoint {
    double value = 0.0;
    double lo = 0.0, hi = 0.0;  ///< final bracket
    BifurcationKind kind = BifurcationKind::Unclassified;
    std::optional<std::complex<double>> critical_multiplier;
    double manifold_distance = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/// Bisection on a boolean predicate that differs at the bracket ends, down
/// to relative bracket width rel_width.
inline BifurcationPoint locate_bifurcation(const std::function<bool(double)>& predicate, double lo, double hi,
                                           double rel_width = 1e-6) {
    if (!(lo < hi)) throw InvalidBracket("locate_bifurcation: need lo < hi");
    BifurcationPoint bp;
    const bool at_lo = predicate(lo);
    const bool at_hi = predicate(hi);
    bp.evaluations = 2;
    if (at_lo == at_hi) throw InvalidBracket("locate_bifurcation: predicate equal at both bracket ends");
    while (hi - lo > rel_width * std::max(std::abs(lo), std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        ++bp.evaluations;
        if (predicate(mid) == at_lo)
            lo = mid;
        else
            hi = mid;
    }
    bp.lo = lo;
    bp.hi = hi;
    bp.value = 0.5 * (lo + hi);
    return bp;
}

namespace detail {

inline std::complex<double> critical_multiplier(const Spectrum& s) {
    return *std::max_element(s.begin(), s.end(), [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
}

inline BifurcationKind kind_from_multiplier(const std::complex<double>& z) {
    if (std::abs(z.imag()) > 1e-9) return BifurcationKind::Unclassified;
    return z.real() < 0.0 ? BifurcationKind::Flip : BifurcationKind::SaddleNode;
}

}  // namespace detail

/// Loss (or gain) of stability of the 1-cycle along a family: the spectral
/// radius of its Jacobian crosses 1. Labelled by the critical multiplier.
inline BifurcationPoint locate_one_cycle_stability_change(const LoopFamily& family, double lo, double hi,
                                                          double rel_width = 1e-6) {
    const auto radius = [&](double p) {
        const ClosedLoop cl = family(p);
        return spectral_radius(detail::jacobian_parts(cl, find_one_cycle(cl)).jacobian);
    };
    BifurcationPoint bp = locate_bifurcation([&](double p) { return radius(p) >= 1.0; }, lo, hi, rel_width);
    const ClosedLoop cl = family(bp.value);
    const StateVector x = find_one_cycle(cl);
    bp.critical_multiplier = detail::critical_multiplier(eigenvalues(detail::jacobian_parts(cl, x).jacobian));
    bp.kind = detail::kind_from_multiplier(*bp.critical_multiplier);
    bp.manifold_distance = manifold_distance(detail::manifolds_or_absent(cl.mp, cl.pd), x[2]);
    return bp;
}

/// Change in the least period of the attractor reached from x0. The cycle on
/// the low side of the final bracket decides the label: near a manifold it is
/// a border collision, otherwise the critical multiplier decides.
inline BifurcationPoint locate_period_change(const LoopFamily& family, const StateVector& x0, double lo, double hi,
                                             const ClassifyOptions& opt = {}, double rel_width = 1e-6) {
    const int period_lo = classify_attractor(family(lo), x0, opt).period;
    BifurcationPoint bp = locate_bifurcation(
        [&](double p) { return classify_attractor(family(p), x0, opt).period == period_lo; }, lo, hi, rel_width);
    const ClosedLoop cl = family(bp.lo);
    const AttractorOutcome o = classify_attractor(cl, x0, opt);
    bp.manifold_distance = o.manifold_distance;
    if (o.kind == AttractorKind::Periodic && !o.cycle_points.empty()) {
        const Spectrum s = eigenvalues(detail::chained_jacobian_one_sided(cl, o.cycle_points));
        bp.critical_multiplier = detail::critical_multiplier(s);
    }
    if (o.manifold_distance < opt.border_tol)
        bp.kind = BifurcationKind::BorderCollision;
    else if (bp.critical_multiplier && std::abs(std::abs(*bp.critical_multiplier) - 1.0) < 1e-2)
        bp.kind = detail::kind_from_multiplier(*bp.critical_multiplier);
    return bp;
}

/// Segment signature of every point of a cycle; a border collision changes it.
inline std::vector<SegmentSignature> cycle_signature(const ClosedLoop& cl, const std::vector<StateVector>& pts) {
    std::vector<SegmentSignature> s;
    for (const StateVector& p : pts) s.push_back(segment_of(cl.mp, cl.pd, p[2]));
    return s;
}

/// Follows an m-cycle from `guess` at `lo` towards `hi` and bisects on the
/// first change of its segment signature (or its disappearance).
inline BifurcationPoint locate_border_collision(const LoopFamily& family, int m, const StateVector& guess, double lo,
                                                double hi, double rel_width = 1e-6) {
    CycleSolution base = solve_m_cycle(family(lo), m, guess);
    StateVector follow = base.points.front();
    const auto reference = cycle_signature(family(lo), base.points);
    const auto same_branch = [&](double p) {
        const ClosedLoop cl = family(p);
        try {
            const CycleSolution s = solve_m_cycle(cl, m, follow);
            // Compare up to cyclic rotation of the cycle points.
            const auto sig = cycle_signature(cl, s.points);
            for (std::size_t r = 0; r < sig.size(); ++r) {
                bool eq = true;
                for (std::size_t i = 0; i < sig.size() && eq; ++i) eq = sig[(i + r) % sig.size()] == reference[i];
                if (eq) {
                    follow = s.points.front();
                    return true;
                }
            }
            return false;
        } catch (const Error&) {
            return false;
        }
    };
    BifurcationPoint bp = locate_bifurcation(same_branch, lo, hi, rel_width);
    bp.kind = BifurcationKind::BorderCollision;
    const ClosedLoop cl = family(bp.lo);
    try {
        const CycleSolution s = solve_m_cycle(cl, m, follow);
        const SwitchingManifolds sm = detail::manifolds_or_absent(cl.mp, cl.pd);
        for (const StateVector& p : s.points) bp.manifold_distance = std::min(bp.manifold_distance, manifold_distance(sm, p[2]));
        bp.critical_multiplier = detail::critical_multiplier(s.multipliers);
    } catch (const Error&) {
    }
    return bp;
}

struct ScanAxis {
    std::string name;  ///< "alpha" or "gamma"
    double min = 0.0;
    double max = 0.0;
    int count = 2;

    double value(int i) const noexcept {
        return count <= 1 ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

struct ScanConfig {
    std::vector<ScanAxis> axes;
    ModulationParams controller;
    PatientParams base{};  ///< plant values for parameters not on an axis
    ClassifyOptions classify{};
    bool include_induction = true;
    bool include_fixed_point = true;
    std::vector<StateVector> initial_conditions;  ///< explicit extra states
    int random_ics = 8;
    std::uint64_t seed = 20240917;

    void validate() const {
        if (axes.empty() || axes.size() > 2) throw ConfigError("scan: one or two axes required");
        for (const ScanAxis& a : axes) {
            if (!is_scan_axis(a.name)) throw ConfigError("unknown scan axis '" + a.name + "' (expected alpha or gamma)");
            if (a.count < 2) throw ConfigError("scan: grid count must be >= 2");
            if (!(a.min > 0.0) || !(a.max >= a.min)) throw ConfigError("scan: axis range must satisfy 0 < min <= max");
        }
        if (axes.size() == 2 && axes[0].name == axes[1].name) throw ConfigError("scan: axes must differ");
        if (classify.transient < 0) throw ConfigError("scan: transient must be >= 0");
        if (classify.record_count < 1) throw ConfigError("scan: record count must be >= 1");
        if (classify.max_period < 1) throw ConfigError("scan: max period must be >= 1");
        if (random_ics < 0) throw ConfigError("scan: random_ics must be >= 0");
        controller.validate();
        for (const StateVector& x : initial_conditions)
            for (double v : x)
                if (!(v >= 0.0)) throw ConfigError("scan: initial conditions must be nonnegative");
    }
};

struct ScanPoint {
    double a = 0.0;
    double b = std::numeric_limits<double>::quiet_NaN();  ///< second axis value (2D only)
    std::vector<StateVector> initial_conditions;
    std::vector<AttractorOutcome> outcomes;  ///< one per initial condition
    std::vector<int> basin;                  ///< attractor label per initial condition
    int distinct_attractors = 0;             ///< stable cycles and chaotic sets among the outcomes
    bool multistable = false;
};

/// Log-uniform positions in [1e-3, 1] per component, reproducible from the
/// seed; scaled per cell by the state bound.
inline std::vector<Vec3> random_unit_states(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    const auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<Vec3> out;
    for (int i = 0; i < count; ++i) {
        Vec3 v;
        for (double& c : v) c = std::pow(10.0, -3.0 * (1.0 - uniform()));
        out.push_back(v);
    }
    return out;
}

inline std::vector<StateVector> cell_initial_conditions(const ScanConfig& cfg, const ClosedLoop& cl,
                                                        const std::vector<Vec3>& unit_states) {
    std::vector<StateVector> ics;
    if (cfg.include_induction) ics.push_back({0.0, 0.0, 0.0});
    if (cfg.include_fixed_point) ics.push_back(find_one_cycle(cl));
    for (const StateVector& x : cfg.initial_conditions) ics.push_back(x);
    const StateVector b = state_bound(cl.pk, cl.mp);
    for (const Vec3& u : unit_states) ics.push_back({u[0] * b[0], u[1] * b[1], u[2] * b[2]});
    return ics;
}

inline ScanPoint analyse_cell(const ScanConfig& cfg, const std::vector<Vec3>& unit_states, double a, double b) {
    PatientParams p = with_param(cfg.base, cfg.axes[0].name, a);
    if (cfg.axes.size() == 2) p = with_param(p, cfg.axes[1].name, b);
    const ClosedLoop cl = make_closed_loop(p, cfg.controller);
    ScanPoint pt;
    pt.a = a;
    pt.b = b;
    pt.initial_conditions = cell_initial_conditions(cfg, cl, unit_states);
    for (const StateVector& x0 : pt.initial_conditions) pt.outcomes.push_back(classify_attractor(cl, x0, cfg.classify));
    pt.basin = basin_labels(pt.outcomes);
    // Only resolved attractors count: a stable cycle or a chaotic set.
    std::set<int> resolved;
    for (std::size_t i = 0; i < pt.outcomes.size(); ++i) {
        const AttractorOutcome& o = pt.outcomes[i];
        if ((o.kind == AttractorKind::Periodic && o.stable) || o.kind == AttractorKind::Chaotic) resolved.insert(pt.basin[i]);
    }
    pt.distinct_attractors = static_cast<int>(resolved.size());
    pt.multistable = pt.distinct_attractors >= 2;
    return pt;
}

/// Worker count: explicit request, else the machine; IGO_THREADS caps both.
inline unsigned resolve_workers(std::optional<unsigned> requested = std::nullopt) {
    unsigned n = (requested && *requested >= 1) ? *requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("IGO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min(n, static_cast<unsigned>(v));
    }
    return n;
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs fn(i) for i in [0, n) on `workers` threads; results land at index i.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, unsigned workers, Fn&& fn, const ProgressFn& progress = {}) {
    std::vector<T> out(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
            const std::size_t d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, n);
            }
        }
    };
    const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (w == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < w; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

inline std::vector<ScanPoint> scan_1d(const ScanConfig& cfg, unsigned workers = 1, const ProgressFn& progress = {}) {
    cfg.validate();
    if (cfg.axes.size() != 1) throw ConfigError("scan_1d: exactly one axis required");
    const auto units = random_unit_states(cfg.seed, cfg.random_ics);
    const ScanAxis& ax = cfg.axes[0];
    return parallel_map<ScanPoint>(
        static_cast<std::size_t>(ax.count), workers,
        [&](std::size_t i) {
            return analyse_cell(cfg, units, ax.value(static_cast<int>(i)), std::numeric_limits<double>::quiet_NaN());
        },
        progress);
}

/// Row-major over (first axis, second axis).
inline std::vector<ScanPoint> scan_2d(const ScanConfig& cfg, unsigned workers = 1, const ProgressFn& progress = {}) {
    cfg.validate();
    if (cfg.axes.size() != 2) throw ConfigError("scan_2d: exactly two axes required");
    const auto units = random_unit_states(cfg.seed, cfg.random_ics);
    const ScanAxis& ax = cfg.axes[0];
    const ScanAxis& bx = cfg.axes[1];
    const auto nb = static_cast<std::size_t>(bx.count);
    return parallel_map<ScanPoint>(
        static_cast<std::size_t>(ax.count) * nb, workers,
        [&](std::size_t k) {
            return analyse_cell(cfg, units, ax.value(static_cast<int>(k / nb)), bx.value(static_cast<int>(k % nb)));
        },
        progress);
}

}  // namespace igo

#endif  // IGO_SCAN_HPP
