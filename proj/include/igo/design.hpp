#ifndef IGO_DESIGN_HPP
#define IGO_DESIGN_HPP

// Controller synthesis for a desired 1-cycle (lambda*, T*).
//
// The fixed point of the desired cycle follows in closed form from the plant,
// which fixes the operating output ybar0 = C X. The local slopes of the
// composed modulators at ybar0 are design inputs; dividing by the Hill slope
// gives k2, k4, and the interpolation conditions F(ybar0) = lambda*,
// Phi(ybar0) = T* give k1, k3.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "controller.hpp"
#include "cycles.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "simulation.hpp"

namespace igo {

struct DesignLimits {
    double f1 = 150.0;
    double f2 = 400.0;
    double phi1 = 11.0;
    double phi2 = 50.0;
};

struct DesignSpec {
    PatientParams patient{};
    double lambda_star = 300.0;  ///< ug/kg
    double T_star = 20.0;        ///< min
    double slope_F = -0.15;      ///< dF/dybar at ybar0, ug/kg per ug/ml
    double slope_Phi = 0.29;     ///< dPhi/dybar at ybar0, min per ug/ml
    DesignLimits limits{};

    // Manual overrides. ybar0 replaces the computed operating output (e.g. a
    // value rounded for publication); k1/k3 replace the interpolated offsets.
    std::optional<double> ybar0;
    std::optional<double> k1;
    std::optional<double> k3;

    void validate() const {
        patient.validate();
        if (!(lambda_star > 0.0) || !(T_star > 0.0)) throw InvalidParameter("design: lambda* and T* must be positive");
        if (!(limits.f1 > 0.0 && limits.f1 <= limits.f2)) throw InvalidParameter("design: need 0 < f1 <= f2");
        if (!(limits.phi1 > 0.0 && limits.phi1 <= limits.phi2)) throw InvalidParameter("design: need 0 < phi1 <= phi2");
        if (lambda_star < limits.f1 || lambda_star > limits.f2)
            throw InfeasibleDesign("design: lambda* outside [f1, f2]");
        if (T_star < limits.phi1 || T_star > limits.phi2) throw InfeasibleDesign("design: T* outside [phi1, phi2]");
        if (ybar0 && !(*ybar0 > 0.0)) throw InvalidParameter("design: ybar0 override must be positive");
    }

    /// Negative-feedback sign convention on the requested slopes.
    bool c2_compliant() const noexcept { return slope_F <= 0.0 && slope_Phi >= 0.0; }
};

struct DesignReport {
    StateVector fixed_point{};
    double ybar0 = 0.0;
    double hill_at_ybar0 = 0.0;
    double hill_slope_at_ybar0 = 0.0;
    Spectrum multipliers{};
    StabilityVerdict verdict{};
    double feedback_coefficient = 0.0;  ///< C (J F' + D Phi'), negative for negative feedback
    SwitchingManifolds manifolds{};
    bool inside_affine = false;         ///< ybar0 strictly inside both affine segments
    bool c2_compliant = false;
    std::vector<std::string> warnings;
};

struct DesignResult {
    ModulationParams controller;
    DesignReport report;
};

// Required clearance of hill(ybar0) from the ends of the affine segments.
inline constexpr double kAffineMargin = 1e-6;

namespace detail {

// Distance of hill value h inside the affine segment [lo, hi] of slope*h+offset.
inline double affine_clearance(double slope, double offset, double lo, double hi, double h) {
    if (slope == 0.0) return (offset > lo && offset < hi) ? HillPD::emax : -1.0;
    const double a = (lo - offset) / slope;
    const double b = (hi - offset) / slope;
    return std::min(std::abs(h - a), std::abs(h - b)) * ((h - a) * (h - b) < 0.0 ? 1.0 : -1.0);
}

}  // namespace detail

inline DesignResult design_controller(const DesignSpec& spec) {
    spec.validate();
    const PKSystem pk = build_pk(spec.patient);
    const HillPD pd = build_pd(spec.patient);

    DesignResult out;
    DesignReport& rep = out.report;
    rep.fixed_point = one_cycle_fixed_point(pk, spec.lambda_star, spec.T_star);
    rep.ybar0 = spec.ybar0.value_or(dot(pk.C, rep.fixed_point));
    rep.hill_at_ybar0 = hill(pd, rep.ybar0);
    rep.hill_slope_at_ybar0 = hill_derivative(pd, rep.ybar0);

    ModulationParams& mp = out.controller;
    mp.k2 = spec.slope_Phi / rep.hill_slope_at_ybar0;
    mp.k4 = spec.slope_F / rep.hill_slope_at_ybar0;
    mp.k1 = spec.k1.value_or(spec.T_star - mp.k2 * rep.hill_at_ybar0);
    mp.k3 = spec.k3.value_or(spec.lambda_star - mp.k4 * rep.hill_at_ybar0);
    mp.f1 = spec.limits.f1;
    mp.f2 = spec.limits.f2;
    mp.phi1 = spec.limits.phi1;
    mp.phi2 = spec.limits.phi2;

    const double clear_phi = detail::affine_clearance(mp.k2, mp.k1, mp.phi1, mp.phi2, rep.hill_at_ybar0);
    const double clear_f = detail::affine_clearance(mp.k4, mp.k3, mp.f1, mp.f2, rep.hill_at_ybar0);
    if (clear_phi < kAffineMargin)
        throw InfeasibleDesign("design: operating point not inside the affine interval segment [phi1, phi2]");
    if (clear_f < kAffineMargin)
        throw InfeasibleDesign("design: operating point not inside the affine dose segment [f1, f2]");
    rep.inside_affine = true;

    rep.c2_compliant = spec.c2_compliant();
    if (!rep.c2_compliant) rep.warnings.emplace_back("slopes violate the negative-feedback sign convention");
    for (auto& w : mp.monotonicity_warnings()) rep.warnings.push_back(std::move(w));
    if (!spec.patient.in_population()) rep.warnings.emplace_back("design patient outside the population box");

    const ClosedLoop cl{pk, pd, mp};
    const JacobianParts parts = detail::jacobian_parts(cl, rep.fixed_point);
    rep.multipliers = eigenvalues(parts.jacobian);
    rep.verdict = classify_stability(rep.multipliers);
    rep.feedback_coefficient = dot(pk.C, parts.dF * parts.j + parts.dPhi * parts.d);
    rep.manifolds = detail::manifolds_or_absent(mp, pd);
    return out;
}

struct ValidationReport {
    CycleSolution cycle;
    double dose_error = 0.0;
    double interval_error = 0.0;
    StabilityVerdict verdict{};
    double manifold_distance = 0.0;  ///< relative distance of ybar0 to the nearest threshold
};

/// Re-solves the 1-cycle of the designed loop and checks it reproduces
/// (lambda*, T*). Throws SynthesisInconsistency beyond `tol` (relative).
inline ValidationReport validate_design(const ModulationParams& mp, const DesignSpec& spec, double tol = 1e-9) {
    const ClosedLoop cl = make_closed_loop(spec.patient, mp);
    const StateVector guess = one_cycle_fixed_point(cl.pk, spec.lambda_star, spec.T_star);
    ValidationReport rep;
    rep.cycle = solve_m_cycle(cl, 1, guess);
    rep.dose_error = std::abs(rep.cycle.doses[0] - spec.lambda_star);
    rep.interval_error = std::abs(rep.cycle.intervals[0] - spec.T_star);
    rep.verdict = classify_stability(rep.cycle);
    rep.manifold_distance = manifold_distance(detail::manifolds_or_absent(mp, cl.pd), rep.cycle.points[0][2]);
    if (rep.dose_error > tol * spec.lambda_star || rep.interval_error > tol * spec.T_star)
        throw SynthesisInconsistency("validate_design: 1-cycle (" + std::to_string(rep.cycle.doses[0]) + ", " +
                                     std::to_string(rep.cycle.intervals[0]) + ") differs from the design target");
    return rep;
}

}  // namespace igo

#endif  // IGO_DESIGN_HPP
