#ifndef IGO_CONTROLLER_HPP
#define IGO_CONTROLLER_HPP

// Pulse modulator: interval and dose are clamped affine functions of the
// measured effect, composed with the Hill map so that they become functions
// of x3 (the effect-site signal at the firing instant).
//
//   T      = clamp(k2 * hill(x3) + k1, phi1, phi2)
//   lambda = clamp(k4 * hill(x3) + k3, f1, f2)
//
// The clamped form is the single source of truth; the piecewise form over x3
// with explicit switching thresholds is provided for analysis and agrees with
// it pointwise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace igo {

struct ModulationParams {
    double k1 = 0.0;  ///< interval offset, min
    double k2 = 0.0;  ///< interval slope, min per % effect
    double k3 = 0.0;  ///< dose offset, ug/kg
    double k4 = 0.0;  ///< dose slope, ug/kg per % effect
    double phi1 = 0.0, phi2 = 0.0;  ///< interval bounds, min
    double f1 = 0.0, f2 = 0.0;      ///< dose bounds, ug/kg

    void validate() const {
        if (!(phi1 > 0.0 && phi1 <= phi2)) throw InvalidParameter("interval limits must satisfy 0 < phi1 <= phi2");
        if (!(f1 > 0.0 && f1 <= f2)) throw InvalidParameter("dose limits must satisfy 0 < f1 <= f2");
        for (double v : {k1, k2, k3, k4})
            if (!std::isfinite(v)) throw InvalidParameter("modulation coefficients must be finite");
    }

    /// Warnings for slopes that make the composed modulators violate the
    /// negative-feedback monotonicity (dose non-increasing, interval
    /// non-decreasing in x3). Empty when compliant.
    std::vector<std::string> monotonicity_warnings() const {
        std::vector<std::string> w;
        if (k2 > 0.0) w.emplace_back("k2 > 0: interval decreases with x3");
        if (k4 < 0.0) w.emplace_back("k4 < 0: dose increases with x3");
        return w;
    }
};

struct SwitchingManifolds {
    // Absent thresholds are branches that no finite x3 >= 0 can enter.
    std::optional<double> cL_phi, cR_phi, cL_f, cR_f;
};

struct FiringDecision {
    double dose = 0.0;      ///< lambda, ug/kg
    double interval = 0.0;  ///< T, min
};

inline double phi_mod(const ModulationParams& mp, const HillPD& pd, double x3) {
    return std::clamp(mp.k2 * hill(pd, x3) + mp.k1, mp.phi1, mp.phi2);
}

inline double f_mod(const ModulationParams& mp, const HillPD& pd, double x3) {
    return std::clamp(mp.k4 * hill(pd, x3) + mp.k3, mp.f1, mp.f2);
}

inline FiringDecision fire(const ModulationParams& mp, const HillPD& pd, const Vec3& x) {
    const double h = hill(pd, x[2]);
    return {std::clamp(mp.k4 * h + mp.k3, mp.f1, mp.f2), std::clamp(mp.k2 * h + mp.k1, mp.phi1, mp.phi2)};
}

namespace detail {

// Solves slope * hill(x3) + offset = limit for x3 >= 0.
inline std::optional<double> hill_threshold(double slope, double offset, double limit, const HillPD& pd) {
    if (slope == 0.0) throw InvalidParameter("switching manifold undefined for zero slope");
    if (limit == offset) return std::nullopt;
    const double h = (limit - offset) / slope;
    // hill takes values in (0, 100]; a threshold outside that range is never hit.
    if (!(h > 0.0) || h > HillPD::emax) return std::nullopt;
    const double base = HillPD::emax / h - 1.0;
    if (base < 0.0) return std::nullopt;
    return pd.c50 * std::pow(base, 1.0 / pd.gamma);
}

}  // namespace detail

/// x3 thresholds where each modulator leaves its affine segment.
/// cL_* is the saturation at the lower limit, cR_* at the upper one.
inline SwitchingManifolds switching_manifolds(const ModulationParams& mp, const HillPD& pd) {
    SwitchingManifolds s;
    s.cL_phi = detail::hill_threshold(mp.k2, mp.k1, mp.phi1, pd);
    s.cR_phi = detail::hill_threshold(mp.k2, mp.k1, mp.phi2, pd);
    s.cL_f = detail::hill_threshold(mp.k4, mp.k3, mp.f1, pd);
    s.cR_f = detail::hill_threshold(mp.k4, mp.k3, mp.f2, pd);
    return s;
}

/// Which segment each modulator is on at x3: -1 lower limit, 0 affine,
/// +1 upper limit. Boundary hits count as affine.
struct SegmentSignature {
    int interval = 0;
    int dose = 0;
    friend bool operator==(const SegmentSignature&, const SegmentSignature&) = default;
};

inline SegmentSignature segment_of(const ModulationParams& mp, const HillPD& pd, double x3) {
    const double h = hill(pd, x3);
    const double t = mp.k2 * h + mp.k1;
    const double l = mp.k4 * h + mp.k3;
    SegmentSignature s;
    s.interval = t < mp.phi1 ? -1 : (t > mp.phi2 ? 1 : 0);
    s.dose = l < mp.f1 ? -1 : (l > mp.f2 ? 1 : 0);
    return s;
}

/// Named manifold within relative distance `tol` of x3, if any.
inline std::optional<std::string> manifold_hit(const SwitchingManifolds& s, double x3, double tol = 1e-12) {
    const auto near = [&](const std::optional<double>& c) {
        return c && std::abs(x3 - *c) <= tol * std::max(1.0, *c);
    };
    if (near(s.cL_phi)) return std::string("cL_phi");
    if (near(s.cR_phi)) return std::string("cR_phi");
    if (near(s.cL_f)) return std::string("cL_f");
    if (near(s.cR_f)) return std::string("cR_f");
    return std::nullopt;
}

/// Smallest relative distance |x3 - c| / c over the finite thresholds;
/// +inf when none exist.
inline double manifold_distance(const SwitchingManifolds& s, double x3) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : {s.cL_phi, s.cR_phi, s.cL_f, s.cR_f})
        if (c) best = std::min(best, std::abs(x3 - *c) / std::max(*c, 1e-300));
    return best;
}

/// Interval modulator evaluated through the piecewise-over-x3 representation.
/// Because hill is decreasing, a negative slope k2 maps small x3 to the lower
/// limit and large x3 towards the upper one; the general case is handled by
/// comparing x3 against the thresholds in the direction set by the slope sign.
inline double phi_mod_piecewise(const ModulationParams& mp, const HillPD& pd, const SwitchingManifolds& s,
                                double x3) {
    if (mp.k2 == 0.0) return std::clamp(mp.k1, mp.phi1, mp.phi2);
    const double cg = std::pow(pd.c50, pd.gamma);
    const double affine = HillPD::emax * cg * mp.k2 / (cg + std::pow(x3, pd.gamma)) + mp.k1;
    if (mp.k2 < 0.0) {
        // affine value increases with x3
        if (s.cL_phi ? x3 < *s.cL_phi : affine < mp.phi1) return mp.phi1;
        if (s.cR_phi ? x3 > *s.cR_phi : affine > mp.phi2) return mp.phi2;
    } else {
        if (s.cL_phi ? x3 > *s.cL_phi : affine < mp.phi1) return mp.phi1;
        if (s.cR_phi ? x3 < *s.cR_phi : affine > mp.phi2) return mp.phi2;
    }
    return affine;
}

/// Dose modulator through the piecewise representation. The upper branch is
/// guarded by cR_f.
inline double f_mod_piecewise(const ModulationParams& mp, const HillPD& pd, const SwitchingManifolds& s,
                              double x3) {
    if (mp.k4 == 0.0) return std::clamp(mp.k3, mp.f1, mp.f2);
    const double cg = std::pow(pd.c50, pd.gamma);
    const double affine = HillPD::emax * cg * mp.k4 / (cg + std::pow(x3, pd.gamma)) + mp.k3;
    if (mp.k4 > 0.0) {
        // affine value decreases with x3
        if (s.cL_f ? x3 > *s.cL_f : affine < mp.f1) return mp.f1;
        if (s.cR_f ? x3 < *s.cR_f : affine > mp.f2) return mp.f2;
    } else {
        if (s.cL_f ? x3 < *s.cL_f : affine < mp.f1) return mp.f1;
        if (s.cR_f ? x3 > *s.cR_f : affine > mp.f2) return mp.f2;
    }
    return affine;
}

}  // namespace igo

#endif  // IGO_CONTROLLER_HPP
