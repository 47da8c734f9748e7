#include <catch_amalgamated.hpp>

#include "igo/design.hpp"

using namespace igo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DesignSpec nominal_spec() {
    DesignSpec s;
    s.patient = {kAlphaMean, kGammaMean};
    return s;
}

DesignSpec steep_spec() {
    DesignSpec s = nominal_spec();
    s.slope_F = -1.0;
    s.slope_Phi = 4.0;
    s.limits.phi1 = 5.0;
    return s;
}

}  // namespace

TEST_CASE("nominal design interpolates the desired cycle") {
    const DesignResult r = design_controller(nominal_spec());
    const ModulationParams& k = r.controller;
    const HillPD pd = build_pd(nominal_spec().patient);
    const double y0 = r.report.ybar0;
    CHECK_THAT(k.k4 * hill(pd, y0) + k.k3, WithinRel(300.0, 1e-13));
    CHECK_THAT(k.k2 * hill(pd, y0) + k.k1, WithinRel(20.0, 1e-13));
    CHECK_THAT(k.k4 * hill_derivative(pd, y0), WithinRel(-0.15, 1e-13));
    CHECK_THAT(k.k2 * hill_derivative(pd, y0), WithinRel(0.29, 1e-13));
    CHECK(r.report.verdict.kind == Stability::Stable);
    CHECK(r.report.feedback_coefficient < 0.0);
    CHECK(r.report.inside_affine);
    CHECK(r.report.c2_compliant);
    CHECK(r.report.warnings.empty());

    const ValidationReport v = validate_design(k, nominal_spec());
    CHECK(v.dose_error < 1e-7);
    CHECK(v.interval_error < 1e-8);
    CHECK(v.manifold_distance > 0.0);
}

TEST_CASE("design multipliers agree with the solved cycle") {
    const DesignResult r = design_controller(steep_spec());
    const ValidationReport v = validate_design(r.controller, steep_spec());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r.report.multipliers[i] - v.cycle.multipliers[i]) < 1e-8);
}

TEST_CASE("operating-output override shifts the coefficients") {
    DesignSpec s = steep_spec();
    s.ybar0 = 13.6249;
    const DesignResult r = design_controller(s);
    CHECK(r.report.ybar0 == 13.6249);
    const DesignResult exact = design_controller(steep_spec());
    CHECK(std::abs(r.controller.k2 - exact.controller.k2) > 1e-5);
    // The loop built from rounded coefficients no longer hits (300, 20) exactly.
    CHECK_THROWS_AS(validate_design(r.controller, steep_spec()), SynthesisInconsistency);
}

TEST_CASE("infeasible designs are rejected") {
    DesignSpec s = nominal_spec();
    s.lambda_star = 450.0;
    CHECK_THROWS_AS(design_controller(s), InfeasibleDesign);
    s = nominal_spec();
    s.T_star = 8.0;
    CHECK_THROWS_AS(design_controller(s), InfeasibleDesign);
    // A slope so steep that the affine interval segment is narrower than
    // the operating point's clearance.
    s = nominal_spec();
    s.slope_Phi = 1e8;
    CHECK_THROWS_AS(design_controller(s), InfeasibleDesign);
    s = nominal_spec();
    s.patient.alpha = -1.0;
    CHECK_THROWS_AS(design_controller(s), InvalidParameter);
}

TEST_CASE("sign-violating slopes are reported") {
    DesignSpec s = nominal_spec();
    s.slope_F = 0.15;
    const DesignResult r = design_controller(s);
    CHECK_FALSE(r.report.c2_compliant);
    CHECK_FALSE(r.report.warnings.empty());
}
