#include <catch_amalgamated.hpp>

#include <random>

#include "igo/controller.hpp"

using namespace igo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Nominal design coefficients for the population-mean patient.
ModulationParams nominal() { return {21.513305, -0.711946, 299.217256, 0.368248, 11.0, 50.0, 150.0, 400.0}; }

}  // namespace

TEST_CASE("modulators clamp to their limits") {
    const ModulationParams mp = nominal();
    const HillPD pd{kC50, kGammaMean};
    for (double x3 : {0.0, 1.0, 5.0, 13.6, 50.0, 500.0}) {
        const double t = phi_mod(mp, pd, x3), l = f_mod(mp, pd, x3);
        CHECK(t >= mp.phi1);
        CHECK(t <= mp.phi2);
        CHECK(l >= mp.f1);
        CHECK(l <= mp.f2);
        const FiringDecision d = fire(mp, pd, {0.0, 0.0, x3});
        CHECK(d.dose == l);
        CHECK(d.interval == t);
    }
    // Induction: y = 100 puts the interval at its lower limit.
    CHECK(phi_mod(mp, pd, 0.0) == mp.phi1);
}

TEST_CASE("controller validation and monotonicity warnings") {
    ModulationParams mp = nominal();
    CHECK_NOTHROW(mp.validate());
    CHECK(mp.monotonicity_warnings().empty());
    mp.phi1 = 60.0;
    CHECK_THROWS_AS(mp.validate(), InvalidParameter);
    mp = nominal();
    mp.f1 = 0.0;
    CHECK_THROWS_AS(mp.validate(), InvalidParameter);
    mp = nominal();
    mp.k2 = 1.0;
    mp.k4 = -1.0;
    CHECK(mp.monotonicity_warnings().size() == 2);
}

TEST_CASE("switching manifolds sit where the affine expressions reach the limits") {
    const ModulationParams mp = nominal();
    const HillPD pd{kC50, kGammaMean};
    const SwitchingManifolds s = switching_manifolds(mp, pd);
    REQUIRE(s.cL_phi);
    CHECK_THAT(mp.k2 * hill(pd, *s.cL_phi) + mp.k1, WithinAbs(mp.phi1, 1e-10));
    if (s.cR_phi) CHECK_THAT(mp.k2 * hill(pd, *s.cR_phi) + mp.k1, WithinAbs(mp.phi2, 1e-10));
    if (s.cL_f) CHECK_THAT(mp.k4 * hill(pd, *s.cL_f) + mp.k3, WithinAbs(mp.f1, 1e-10));
    if (s.cR_f) CHECK_THAT(mp.k4 * hill(pd, *s.cR_f) + mp.k3, WithinAbs(mp.f2, 1e-10));
    REQUIRE(manifold_hit(s, *s.cL_phi).has_value());
    CHECK(*manifold_hit(s, *s.cL_phi) == "cL_phi");
    CHECK_FALSE(manifold_hit(s, *s.cL_phi * 1.01).has_value());
    CHECK_THAT(manifold_distance(s, *s.cL_phi * 1.01), WithinRel(0.01, 1e-9));
}

TEST_CASE("unreachable thresholds are absent and zero slopes are rejected") {
    const HillPD pd{kC50, kGammaMean};
    // Offset already past the limit for every y in (0, 100].
    CHECK_FALSE(detail::hill_threshold(1.0, 500.0, 400.0, pd).has_value());
    CHECK_FALSE(detail::hill_threshold(1.0, 400.0, 400.0, pd).has_value());
    CHECK_THROWS_AS(detail::hill_threshold(0.0, 1.0, 2.0, pd), InvalidParameter);
    SwitchingManifolds none;
    CHECK(std::isinf(manifold_distance(none, 3.0)));
}

TEST_CASE("piecewise-over-x3 form agrees with the clamp form") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uk(-3.0, 3.0), ux(0.0, 60.0), ug(1.4, 5.6);
    for (int k = 0; k < 2000; ++k) {
        ModulationParams mp = nominal();
        mp.k2 = uk(rng);
        mp.k4 = uk(rng);
        mp.k1 = 20.0 + 10.0 * uk(rng);
        mp.k3 = 280.0 + 40.0 * uk(rng);
        if (mp.k2 == 0.0 || mp.k4 == 0.0) continue;
        const HillPD pd{kC50, ug(rng)};
        const SwitchingManifolds s = switching_manifolds(mp, pd);
        const double x3 = ux(rng);
        REQUIRE_THAT(phi_mod_piecewise(mp, pd, s, x3), WithinAbs(phi_mod(mp, pd, x3), 1e-9));
        REQUIRE_THAT(f_mod_piecewise(mp, pd, s, x3), WithinAbs(f_mod(mp, pd, x3), 1e-9));
    }
}

TEST_CASE("segment signature tracks the active branch") {
    const ModulationParams mp = nominal();
    const HillPD pd{kC50, kGammaMean};
    const SwitchingManifolds s = switching_manifolds(mp, pd);
    CHECK(segment_of(mp, pd, 13.6249) == SegmentSignature{0, 0});
    CHECK(segment_of(mp, pd, *s.cL_phi * 0.5).interval == -1);
}
