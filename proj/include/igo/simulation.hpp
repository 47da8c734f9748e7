#ifndef IGO_SIMULATION_HPP
#define IGO_SIMULATION_HPP

// Closed-loop evolution: the firing map X_{n+1} = e^{A T_n}(X_n + lambda_n B)
// and the exact continuous trajectory between firings. Nothing here
// integrates an ODE; every state is produced by the matrix exponential.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "controller.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace igo {

using StateVector = Vec3;

struct ClosedLoop {
    PKSystem pk;
    HillPD pd;
    ModulationParams mp;
};

inline ClosedLoop make_closed_loop(const PatientParams& plant, const ModulationParams& mp) {
    plant.validate();
    mp.validate();
    return {build_pk(plant), build_pd(plant), mp};
}

struct FiringRecord {
    double t = 0.0;         ///< firing time, min
    double dose = 0.0;      ///< lambda_n, ug/kg
    double interval = 0.0;  ///< T_n, min
    StateVector state{};    ///< X_n = x(t_n^-)
};

struct StepResult {
    StateVector next;
    FiringRecord record;
};

inline StateVector propagate(const PKSystem& pk, const StateVector& x, const FiringDecision& d) {
    StateVector post = x;
    post[0] += d.dose;
    return expm(pk, d.interval) * post;
}

inline StepResult step(const ClosedLoop& cl, const StateVector& x, double t = 0.0) {
    const FiringDecision d = fire(cl.mp, cl.pd, x);
    return {propagate(cl.pk, x, d), FiringRecord{t, d.dose, d.interval, x}};
}

inline StateVector step_state(const ClosedLoop& cl, const StateVector& x) {
    return propagate(cl.pk, x, fire(cl.mp, cl.pd, x));
}

/// Same map written component by component with scalar divided differences
/// (no matrix product). Kept as an independent route for cross-checking.
inline StateVector step_elementwise(const ClosedLoop& cl, const StateVector& x) {
    const auto& pk = cl.pk;
    const double h = hill(cl.pd, x[2]);
    const double lam = std::clamp(cl.mp.k4 * h + cl.mp.k3, cl.mp.f1, cl.mp.f2);
    const double T = std::clamp(cl.mp.k2 * h + cl.mp.k1, cl.mp.phi1, cl.mp.phi2);
    const double n1 = -pk.a1 * T, n2 = -pk.a2 * T, n3 = -pk.a3 * T;
    const double u = x[0] + lam;
    const double e12 = (std::exp(n1) - std::exp(n2)) / (n1 - n2);
    const double e23 = (std::exp(n2) - std::exp(n3)) / (n2 - n3);
    const double e123 = (e23 - e12) / (n3 - n1);
    return {std::exp(n1) * u, std::exp(n2) * x[1] + pk.g1 * T * e12 * u,
            std::exp(n3) * x[2] + pk.g2 * T * (pk.g1 * T * e123 * u + e23 * x[1])};
}

/// Componentwise upper bound on the closed-loop state for all t >= 0 starting
/// from x0: doses of at most f2 no closer than phi1 apart through a stable
/// cascade.
inline StateVector state_bound(const PKSystem& pk, const ModulationParams& mp, const StateVector& x0 = {}) {
    const double m1 = mp.f2 / (-std::expm1(-pk.a1 * mp.phi1));
    const double b1 = x0[0] + m1;
    const double b2 = x0[1] + b1 * pk.g1 / pk.a2;
    const double b3 = x0[2] + b2 * pk.g2 / pk.a3;
    return {b1, b2, b3};
}

enum class SampleKind : int { Interior = 0, PreFiring = 1, PostFiring = 2 };

struct Sample {
    double t = 0.0;
    StateVector x{};
    double ybar = 0.0;
    double y = 0.0;
    SampleKind kind = SampleKind::Interior;
};

struct Trajectory {
    PKSystem pk;
    HillPD pd;
    StateVector x0{};
    std::vector<Sample> samples;
    std::vector<FiringRecord> firings;
    double t_end = 0.0;

    double t_begin() const noexcept { return samples.empty() ? 0.0 : samples.front().t; }

    /// Exact state at t (right-continuous at firing instants).
    StateVector state_at(double t) const {
        if (firings.empty() || t < firings.front().t) return expm(pk, std::max(0.0, t)) * x0;
        const auto it = std::upper_bound(firings.begin(), firings.end(), t,
                                         [](double v, const FiringRecord& r) { return v < r.t; });
        const FiringRecord& r = *(it - 1);
        StateVector post = r.state;
        post[0] += r.dose;
        return expm(pk, t - r.t) * post;
    }

    double ybar_at(double t) const { return state_at(t)[2]; }
    double y_at(double t) const { return hill(pd, std::max(0.0, ybar_at(t))); }
};

struct SimulationRequest {
    StateVector x0{};
    std::optional<double> horizon;             ///< stop sampling at this time
    std::optional<std::size_t> n_firings;      ///< stop after this many firings
    std::optional<double> sample_step;         ///< default: T_n / 1000 per interval
    std::optional<FiringDecision> initial_override;  ///< explicit (lambda_0, T_0)
};

inline Sample make_sample(const HillPD& pd, double t, const StateVector& x, SampleKind kind) {
    return {t, x, x[2], hill(pd, std::max(0.0, x[2])), kind};
}

inline Trajectory simulate(const ClosedLoop& cl, const SimulationRequest& req) {
    if (!req.horizon && !req.n_firings) throw ConfigError("simulate: horizon or firing count required");
    if (req.sample_step && !(*req.sample_step > 0.0)) throw ConfigError("simulate: sample_step must be positive");
    if (req.horizon && !(*req.horizon >= 0.0)) throw ConfigError("simulate: horizon must be nonnegative");
    for (double v : req.x0)
        if (!(v >= 0.0)) throw DomainError("simulate: initial state must be nonnegative");

    Trajectory tr;
    tr.pk = cl.pk;
    tr.pd = cl.pd;
    tr.x0 = req.x0;

    const double horizon = req.horizon.value_or(std::numeric_limits<double>::infinity());
    const std::size_t max_firings = req.n_firings.value_or(std::numeric_limits<std::size_t>::max());

    StateVector x = req.x0;
    double t = 0.0;
    std::size_t n = 0;
    if (max_firings == 0 || horizon <= 0.0) {
        tr.samples.push_back(make_sample(cl.pd, 0.0, x, SampleKind::Interior));
        tr.t_end = 0.0;
        return tr;
    }

    while (n < max_firings && t < horizon) {
        FiringDecision d = (n == 0 && req.initial_override) ? *req.initial_override : fire(cl.mp, cl.pd, x);
        tr.firings.push_back({t, d.dose, d.interval, x});
        tr.samples.push_back(make_sample(cl.pd, t, x, SampleKind::PreFiring));
        StateVector post = x;
        post[0] += d.dose;
        tr.samples.push_back(make_sample(cl.pd, t, post, SampleKind::PostFiring));

        const double t_next = t + d.interval;
        const double stop = std::min(t_next, horizon);
        const double h = req.sample_step.value_or(d.interval / 1000.0);
        for (std::size_t k = 1;; ++k) {
            const double s = static_cast<double>(k) * h;
            if (t + s >= stop - 1e-12 * d.interval) break;
            tr.samples.push_back(make_sample(cl.pd, t + s, expm(cl.pk, s) * post, SampleKind::Interior));
        }
        x = expm(cl.pk, d.interval) * post;
        ++n;
        if (t_next > horizon) {
            tr.samples.push_back(make_sample(cl.pd, horizon, expm(cl.pk, horizon - t) * post, SampleKind::Interior));
            tr.t_end = horizon;
            return tr;
        }
        t = t_next;
    }
    // Closing sample at the next (unexecuted) firing instant carries X_N.
    tr.samples.push_back(make_sample(cl.pd, t, x, SampleKind::Interior));
    tr.t_end = t;
    return tr;
}

struct Corridor {
    double y_min = 0.0;
    double y_max = 0.0;
    double t_min = 0.0;  ///< where y_min is attained
    double t_max = 0.0;  ///< where y_max is attained
};

namespace detail {

// Golden-section search for an extremum of f on [a, b].
template <typename F>
double golden_section(F&& f, double a, double b, bool maximize, double tol = 1e-10) {
    constexpr double r = 0.6180339887498949;
    const auto g = [&](double s) { return maximize ? -f(s) : f(s); };
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = g(c), fd = g(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

/// Range of y over [t_a, t_b]: sampled extrema refined by golden-section on
/// ybar (y is monotone in ybar, so the extrema coincide).
inline Corridor output_corridor(const Trajectory& tr, double t_a, double t_b) {
    if (!(t_a <= t_b)) throw ConfigError("output_corridor: empty window");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tr.samples.size(); ++i)
        if (tr.samples[i].t >= t_a && tr.samples[i].t <= t_b) idx.push_back(i);
    if (idx.empty()) throw ConfigError("output_corridor: no samples inside window");

    Corridor c{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), t_a, t_a};
    const auto consider = [&](double t) {
        const double y = tr.y_at(t);
        if (y < c.y_min) {
            c.y_min = y;
            c.t_min = t;
        }
        if (y > c.y_max) {
            c.y_max = y;
            c.t_max = t;
        }
    };
    consider(t_a);
    consider(t_b);
    const auto ybar = [&](double t) { return tr.ybar_at(t); };
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Sample& s = tr.samples[idx[k]];
        consider(s.t);
        if (k == 0 || k + 1 == idx.size()) continue;
        // Pre/post samples share t and ybar; look past duplicates for neighbours.
        std::size_t lo = k - 1, hi = k + 1;
        while (lo > 0 && tr.samples[idx[lo]].t == s.t) --lo;
        while (hi + 1 < idx.size() && tr.samples[idx[hi]].t == s.t) ++hi;
        const Sample& l = tr.samples[idx[lo]];
        const Sample& r = tr.samples[idx[hi]];
        if (l.t == s.t || r.t == s.t) continue;
        const bool peak = s.ybar >= l.ybar && s.ybar >= r.ybar;
        const bool dip = s.ybar <= l.ybar && s.ybar <= r.ybar;
        if (peak) consider(detail::golden_section(ybar, l.t, r.t, true));
        if (dip) consider(detail::golden_section(ybar, l.t, r.t, false));
    }
    return c;
}

/// Verifies that `cycle` closes on itself under the firing map.
inline void verify_cycle(const PKSystem& pk, std::span<const FiringRecord> cycle, double tol = 1e-7) {
    if (cycle.empty()) throw NotACycle("empty firing list");
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        const FiringRecord& r = cycle[i];
        const StateVector next = propagate(pk, r.state, {r.dose, r.interval});
        const StateVector& expected = cycle[(i + 1) % cycle.size()].state;
        if (relative_distance(next, expected) > tol) throw NotACycle("firing list does not close into a cycle");
    }
}

/// Output range over exactly one least period of a verified cycle.
inline Corridor stationary_corridor(std::span<const FiringRecord> cycle, const PKSystem& pk, const HillPD& pd) {
    verify_cycle(pk, cycle);
    Trajectory tr;
    tr.pk = pk;
    tr.pd = pd;
    tr.x0 = cycle.front().state;
    double t = 0.0;
    for (const FiringRecord& r : cycle) {
        tr.firings.push_back({t, r.dose, r.interval, r.state});
        StateVector post = r.state;
        post[0] += r.dose;
        tr.samples.push_back(make_sample(pd, t, post, SampleKind::PostFiring));
        for (int k = 1; k < 1000; ++k) {
            const double s = r.interval * k / 1000.0;
            tr.samples.push_back(make_sample(pd, t + s, expm(pk, s) * post, SampleKind::Interior));
        }
        t += r.interval;
    }
    tr.samples.push_back(make_sample(pd, t, cycle.front().state, SampleKind::Interior));
    tr.t_end = t;
    return output_corridor(tr, 0.0, t);
}

}  // namespace igo

#endif  // IGO_SIMULATION_HPP
