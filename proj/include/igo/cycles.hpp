#ifndef IGO_CYCLES_HPP
#define IGO_CYCLES_HPP

// Periodic solutions of the firing map: closed-form 1-cycle fixed points,
// analytic Jacobians, a damped Newton solver for m-cycles and the multiplier
// based stability verdicts.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "controller.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "simulation.hpp"

namespace igo {

/// X = lambda (e^{-TA} - I)^{-1} B, evaluated as (I - e^{TA})^{-1} e^{TA} B so
/// that only the contractive exponential is formed.
inline StateVector one_cycle_fixed_point(const PKSystem& pk, double dose, double interval) {
    if (!(interval > 0.0)) throw InvalidParameter("one_cycle_fixed_point: period must be positive");
    if (!(dose > 0.0)) throw InvalidParameter("one_cycle_fixed_point: dose must be positive");
    const Mat3 e = expm(pk, interval);
    const auto x = solve(Mat3::identity() - e, e * pk.B);
    if (!x) throw InvalidParameter("one_cycle_fixed_point: singular system");
    return dose * *x;
}

struct JacobianParts {
    Mat3 a_phi;          ///< e^{A T} at the firing
    Vec3 j;              ///< d/d(lambda) of the map = e^{AT} B
    Vec3 d;              ///< d/dT of the map = A e^{AT} (X + lambda B)
    double dF = 0.0;     ///< d(lambda)/d(x3), zero on a saturated segment
    double dPhi = 0.0;   ///< dT/d(x3), zero on a saturated segment
    Mat3 jacobian;       ///< a_phi + (j dF + d dPhi) C
};

namespace detail {

// Manifolds of the non-constant modulators only.
inline SwitchingManifolds manifolds_or_absent(const ModulationParams& mp, const HillPD& pd) {
    SwitchingManifolds s;
    if (mp.k2 != 0.0) {
        s.cL_phi = hill_threshold(mp.k2, mp.k1, mp.phi1, pd);
        s.cR_phi = hill_threshold(mp.k2, mp.k1, mp.phi2, pd);
    }
    if (mp.k4 != 0.0) {
        s.cL_f = hill_threshold(mp.k4, mp.k3, mp.f1, pd);
        s.cR_f = hill_threshold(mp.k4, mp.k3, mp.f2, pd);
    }
    return s;
}

// One-sided derivative: boundary points take the affine segment.
inline JacobianParts jacobian_parts(const ClosedLoop& cl, const StateVector& x) {
    const FiringDecision fd = fire(cl.mp, cl.pd, x);
    const SegmentSignature seg = segment_of(cl.mp, cl.pd, x[2]);
    JacobianParts p;
    const bool need_slope = (seg.dose == 0 && cl.mp.k4 != 0.0) || (seg.interval == 0 && cl.mp.k2 != 0.0);
    const double dh = need_slope ? hill_derivative(cl.pd, x[2]) : 0.0;
    p.dF = (seg.dose == 0) ? cl.mp.k4 * dh : 0.0;
    p.dPhi = (seg.interval == 0) ? cl.mp.k2 * dh : 0.0;
    p.a_phi = expm(cl.pk, fd.interval);
    p.j = p.a_phi * cl.pk.B;
    StateVector post = x;
    post[0] += fd.dose;
    p.d = cl.pk.matrix() * (p.a_phi * post);
    p.jacobian = p.a_phi + outer(p.dF * p.j + p.dPhi * p.d, cl.pk.C);
    return p;
}

inline void require_off_manifold(const ClosedLoop& cl, const StateVector& x) {
    if (auto hit = manifold_hit(manifolds_or_absent(cl.mp, cl.pd), x[2])) throw NondifferentiablePoint(*hit, x[2]);
}

}  // namespace detail

/// Analytic derivative of the firing map at x. Throws on a switching manifold.
inline Mat3 jacobian(const ClosedLoop& cl, const StateVector& x) {
    detail::require_off_manifold(cl, x);
    return detail::jacobian_parts(cl, x).jacobian;
}

/// Coefficient of the rank-one feedback term read through the output:
/// C (J F' + D Phi'). Negative for a negative-feedback design.
inline double negative_feedback_check(const ClosedLoop& cl, const StateVector& x) {
    detail::require_off_manifold(cl, x);
    const JacobianParts p = detail::jacobian_parts(cl, x);
    return dot(cl.pk.C, p.dF * p.j + p.dPhi * p.d);
}

/// Q'(x_m) ... Q'(x_1) for consecutive cycle points.
inline Mat3 chained_jacobian(const ClosedLoop& cl, std::span<const StateVector> points) {
    Mat3 acc = Mat3::identity();
    for (const StateVector& x : points) acc = jacobian(cl, x) * acc;
    return acc;
}

namespace detail {

inline Mat3 chained_jacobian_one_sided(const ClosedLoop& cl, std::span<const StateVector> points) {
    Mat3 acc = Mat3::identity();
    for (const StateVector& x : points) acc = jacobian_parts(cl, x).jacobian * acc;
    return acc;
}

}  // namespace detail

enum class Stability { Stable, Unstable, Marginal };

inline const char* to_string(Stability s) noexcept {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "?";
}

struct StabilityVerdict {
    Stability kind = Stability::Marginal;
    double spectral_radius = 0.0;
    bool all_real_positive = false;  ///< no-overshoot indicator
};

inline constexpr double kStabilityMargin = 1e-9;

inline StabilityVerdict classify_stability(const Spectrum& multipliers) {
    StabilityVerdict v;
    v.spectral_radius = std::abs(multipliers[0]);
    for (const auto& z : multipliers) v.spectral_radius = std::max(v.spectral_radius, std::abs(z));
    if (v.spectral_radius < 1.0 - kStabilityMargin)
        v.kind = Stability::Stable;
    else if (v.spectral_radius > 1.0 + kStabilityMargin)
        v.kind = Stability::Unstable;
    else
        v.kind = Stability::Marginal;
    v.all_real_positive = std::all_of(multipliers.begin(), multipliers.end(), [](const auto& z) {
        return z.imag() == 0.0 && z.real() > 0.0;
    });
    return v;
}

struct CycleSolution {
    int m = 0;
    std::vector<StateVector> points;  ///< pre-firing states X_1..X_m
    std::vector<double> doses;
    std::vector<double> intervals;
    Spectrum multipliers{};
    bool stable = false;
    double margin = 0.0;  ///< spectral radius of the chained Jacobian
    double residual = 0.0;
    int iterations = 0;

    std::vector<FiringRecord> records() const {
        std::vector<FiringRecord> r;
        double t = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            r.push_back({t, doses[i], intervals[i], points[i]});
            t += intervals[i];
        }
        return r;
    }
};

inline StabilityVerdict classify_stability(const CycleSolution& s) { return classify_stability(s.multipliers); }

struct SolveOptions {
    double tol = 1e-11;             ///< residual, relative to max(||X||, 1)
    int max_iter = 100;
    int max_halvings = 30;
    double least_period_tol = 1e-7; ///< relative state distance
};

namespace detail {

inline StateVector iterate(const ClosedLoop& cl, StateVector x, int n) {
    for (int i = 0; i < n; ++i) x = step_state(cl, x);
    return x;
}

inline StateVector project_nonnegative(StateVector x) {
    for (double& v : x) v = std::max(v, 0.0);
    return x;
}

}  // namespace detail

/// Fills points, (lambda, T) and multipliers of an m-cycle through x.
inline CycleSolution assemble_cycle(const ClosedLoop& cl, int m, const StateVector& x) {
    CycleSolution s;
    s.m = m;
    StateVector cur = x;
    for (int i = 0; i < m; ++i) {
        const FiringDecision d = fire(cl.mp, cl.pd, cur);
        s.points.push_back(cur);
        s.doses.push_back(d.dose);
        s.intervals.push_back(d.interval);
        cur = propagate(cl.pk, cur, d);
    }
    s.residual = relative_distance(cur, x);
    s.multipliers = eigenvalues(detail::chained_jacobian_one_sided(cl, s.points));
    const StabilityVerdict v = classify_stability(s.multipliers);
    s.margin = v.spectral_radius;
    s.stable = v.kind == Stability::Stable;
    return s;
}

/// Least d dividing m (d < m) with Q^d(x) = x, if any.
inline std::optional<int> lower_period(const ClosedLoop& cl, int m, const StateVector& x, double tol) {
    StateVector cur = x;
    for (int d = 1; d < m; ++d) {
        cur = step_state(cl, cur);
        if (m % d == 0 && relative_distance(cur, x) <= tol) return d;
    }
    return std::nullopt;
}

/// Newton iteration on G(X) = Q^m(X) - X with damped steps and a positivity
/// projection. Throws CycleNotFound or LeastPeriodViolation.
inline CycleSolution solve_m_cycle(const ClosedLoop& cl, int m, const StateVector& guess,
                                   const SolveOptions& opt = {}) {
    if (m < 1) throw InvalidParameter("solve_m_cycle: m must be >= 1");
    for (double v : guess)
        if (!(v >= 0.0)) throw DomainError("solve_m_cycle: guess must be nonnegative");

    const auto residual = [&](const StateVector& x) { return detail::iterate(cl, x, m) - x; };
    const auto scaled = [](const StateVector& g, const StateVector& x) { return norm(g) / std::max(norm(x), 1.0); };

    StateVector x = guess;
    StateVector g = residual(x);
    double r = scaled(g, x);
    int it = 0;
    for (; it < opt.max_iter && r > opt.tol; ++it) {
        std::vector<StateVector> pts;
        StateVector cur = x;
        for (int i = 0; i < m; ++i) {
            pts.push_back(cur);
            cur = step_state(cl, cur);
        }
        const Mat3 jg = detail::chained_jacobian_one_sided(cl, pts) - Mat3::identity();
        const auto delta = solve(jg, -1.0 * g);
        if (!delta) break;

        double s = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, s *= 0.5) {
            const StateVector trial = detail::project_nonnegative(x + s * *delta);
            const StateVector gt = residual(trial);
            const double rt = scaled(gt, trial);
            if (rt < r) {
                x = trial;
                g = gt;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (!(r <= opt.tol))
        throw CycleNotFound("solve_m_cycle: no convergence for m=" + std::to_string(m) +
                            " (residual " + std::to_string(r) + ")");
    if (auto d = lower_period(cl, m, x, opt.least_period_tol)) throw LeastPeriodViolation(m, *d);

    CycleSolution sol = assemble_cycle(cl, m, x);
    sol.iterations = it;
    for (const StateVector& p : sol.points)
        for (double v : p)
            if (!(v > 0.0)) throw CycleNotFound("solve_m_cycle: converged to a non-positive state");
    return sol;
}

/// The 1-cycle of a given closed loop, found by bisection on the scalar
/// equation [fixed_point(F(x3), Phi(x3))]_3 = x3. The residual is positive at
/// x3 = 0 and negative beyond the largest attainable fixed point, so a root is
/// always bracketed.
inline StateVector find_one_cycle(const ClosedLoop& cl) {
    const auto fp_at = [&](double x3) {
        const FiringDecision d = fire(cl.mp, cl.pd, StateVector{0.0, 0.0, x3});
        return one_cycle_fixed_point(cl.pk, d.dose, d.interval);
    };
    double lo = 0.0;
    double hi = one_cycle_fixed_point(cl.pk, cl.mp.f2, cl.mp.phi1)[2] * 1.01 + 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (fp_at(mid)[2] - mid > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return fp_at(0.5 * (lo + hi));
}

}  // namespace igo

#endif  // IGO_CYCLES_HPP
