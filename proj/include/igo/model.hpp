#ifndef IGO_MODEL_HPP
#define IGO_MODEL_HPP

/**
 * @file model.hpp
 * @brief Continuous Wiener PKPD model of a neuromuscular-blockade agent.
 *
 * Linear block (three compartments in cascade, lower-triangular Metzler
 * matrix):
 *
 *   dx/dt = A x,  ybar = C x,  A = [[-a1, 0, 0], [g1, -a2, 0], [0, g2, -a3]]
 *
 * with the single-parameter patient scaling a_i = v_i alpha, g1 = v1 alpha,
 * g2 = v2 v3 alpha^2 and (v1, v2, v3) = (1, 4, 10). Doses enter compartment 1
 * (B = e1) and the effect-site signal is read from compartment 3 (C = e3).
 *
 * Nonlinear block: Hill function y = 100 C50^g / (C50^g + ybar^g) with a fixed
 * C50 = 3.2425 ug/ml.
 *
 * Units: minutes, ug/kg, ug/ml, percent.
 */

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace igo {

inline constexpr double kC50 = 3.2425;
inline constexpr double kEmax = 100.0;

// Population box of the 48-patient estimate.
inline constexpr double kAlphaMin = 0.0270;
inline constexpr double kAlphaMax = 0.0524;
inline constexpr double kGammaMin = 1.4030;
inline constexpr double kGammaMax = 5.5619;
inline constexpr double kAlphaMean = 0.0374;
inline constexpr double kGammaMean = 2.6677;

inline constexpr double kV1 = 1.0;
inline constexpr double kV2 = 4.0;
inline constexpr double kV3 = 10.0;

inline constexpr Vec3 kInputB{1.0, 0.0, 0.0};
inline constexpr Vec3 kOutputC{0.0, 0.0, 1.0};

struct PatientParams {
    double alpha = kAlphaMean;  ///< rate scale, 1/min
    double gamma = kGammaMean;  ///< Hill order

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter("alpha must be positive");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParameter("gamma must be positive");
    }

    /// Inside the clinical population box. Values outside are legal.
    bool in_population() const noexcept {
        return alpha >= kAlphaMin && alpha <= kAlphaMax && gamma >= kGammaMin && gamma <= kGammaMax;
    }
};

struct PKSystem {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double g1 = 0.0, g2 = 0.0;
    Vec3 B = kInputB;
    Vec3 C = kOutputC;

    Mat3 matrix() const noexcept {
        Mat3 m;
        m(0, 0) = -a1;
        m(1, 0) = g1;
        m(1, 1) = -a2;
        m(2, 1) = g2;
        m(2, 2) = -a3;
        return m;
    }

    void validate() const {
        if (!(a1 > 0.0 && a2 > 0.0 && a3 > 0.0)) throw InvalidParameter("decay rates must be positive");
        if (!(g1 > 0.0 && g2 > 0.0)) throw InvalidParameter("gains must be positive");
        if (a1 == a2 || a2 == a3 || a1 == a3) throw InvalidParameter("decay rates must be pairwise distinct");
    }
};

struct HillPD {
    double c50 = kC50;
    double gamma = kGammaMean;
    static constexpr double emax = kEmax;
};

inline PKSystem build_pk(const PatientParams& p) {
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw InvalidParameter("alpha must be positive");
    PKSystem pk;
    pk.a1 = kV1 * p.alpha;
    pk.a2 = kV2 * p.alpha;
    pk.a3 = kV3 * p.alpha;
    pk.g1 = kV1 * p.alpha;
    pk.g2 = kV2 * kV3 * p.alpha * p.alpha;
    return pk;
}

inline HillPD build_pd(const PatientParams& p) {
    if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) throw InvalidParameter("gamma must be positive");
    return HillPD{kC50, p.gamma};
}

/// Effect in percent; 100 for a drug-free patient.
inline double hill(const HillPD& pd, double ybar) {
    if (!(ybar >= 0.0)) throw DomainError("hill: ybar must be nonnegative");
    const double r = std::pow(ybar / pd.c50, pd.gamma);
    return HillPD::emax / (1.0 + r);
}

/// d(hill)/d(ybar). Defined at ybar = 0 only for gamma >= 1.
inline double hill_derivative(const HillPD& pd, double ybar) {
    if (!(ybar >= 0.0)) throw DomainError("hill_derivative: ybar must be nonnegative");
    if (ybar == 0.0 && pd.gamma < 1.0) throw DomainError("hill_derivative: singular at ybar=0 for gamma<1");
    const double s = ybar / pd.c50;
    const double r = std::pow(s, pd.gamma);
    const double denom = 1.0 + r;
    return -pd.gamma * HillPD::emax * std::pow(s, pd.gamma - 1.0) / (pd.c50 * denom * denom);
}

/// Textbook recursive divided difference h[x0, ..., xk] over (node, value)
/// pairs. Throws DegenerateNodes on repeated nodes.
inline double divided_difference(std::span<const std::pair<double, double>> pts) {
    if (pts.empty()) throw InvalidParameter("divided_difference: no nodes");
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (pts[i].first == pts[j].first) throw DegenerateNodes("divided_difference: repeated node");
    std::vector<double> table(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) table[i] = pts[i].second;
    for (std::size_t level = 1; level < pts.size(); ++level)
        for (std::size_t i = 0; i + level < pts.size(); ++i)
            table[i] = (table[i + 1] - table[i]) / (pts[i + level].first - pts[i].first);
    return table[0];
}

/// exp[x, y] in a form that does not cancel for close nodes and does not
/// overflow for widely separated ones.
inline double exp_divided_difference(double x, double y) noexcept {
    if (x == y) return std::exp(x);
    const double hi = std::max(x, y);
    const double d = std::abs(x - y);
    return std::exp(hi) * (-std::expm1(-d)) / d;
}

/// exp[x, y, z] by one recursion step on top of the stable first differences.
inline double exp_divided_difference(double x, double y, double z) noexcept {
    return (exp_divided_difference(y, z) - exp_divided_difference(x, y)) / (z - x);
}

/// Scaling-and-squaring Taylor series for e^{M}. Terms are summed until the
/// next term is below 1e-17 of the running sum (max-abs norm).
inline Mat3 expm_series(const Mat3& m) {
    int squarings = 0;
    double nm = max_abs(m) * 3.0;
    while (nm > 0.5) {
        nm /= 2.0;
        ++squarings;
    }
    const Mat3 scaled = std::ldexp(1.0, -squarings) * m;
    Mat3 sum = Mat3::identity();
    Mat3 term = Mat3::identity();
    for (int k = 1; k < 60; ++k) {
        term = (1.0 / k) * (term * scaled);
        sum = sum + term;
        if (max_abs(term) <= 1e-17 * max_abs(sum)) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

inline Mat3 expm_series(const PKSystem& pk, double t) {
    if (!(t >= 0.0)) throw DomainError("expm: t must be nonnegative");
    return expm_series(t * pk.matrix());
}

// Below this gap between scaled nodes a_i t the divided-difference form loses
// digits in the second difference and the series route is used instead.
inline constexpr double kExpmNodeGap = 1e-3;

/// e^{A t} for the cascade matrix, closed form in divided differences of the
/// scalar exponential.
inline Mat3 expm(const PKSystem& pk, double t) {
    if (!(t >= 0.0)) throw DomainError("expm: t must be nonnegative");
    if (t == 0.0) return Mat3::identity();
    const double n1 = -pk.a1 * t, n2 = -pk.a2 * t, n3 = -pk.a3 * t;
    const double gap = std::min({std::abs(n1 - n2), std::abs(n2 - n3), std::abs(n1 - n3)});
    if (gap < kExpmNodeGap) return expm_series(pk, t);

    Mat3 e;
    e(0, 0) = std::exp(n1);
    e(1, 1) = std::exp(n2);
    e(2, 2) = std::exp(n3);
    e(1, 0) = pk.g1 * t * exp_divided_difference(n1, n2);
    e(2, 1) = pk.g2 * t * exp_divided_difference(n2, n3);
    e(2, 0) = pk.g1 * pk.g2 * t * t * exp_divided_difference(n1, n2, n3);
    return e;
}

/// CB = 0, CAB = 0 and CA^2B != 0: the output is C^2 across dose impulses.
inline bool check_relative_degree(const PKSystem& pk) noexcept {
    const Mat3 a = pk.matrix();
    const double cb = dot(pk.C, pk.B);
    const double cab = dot(pk.C, a * pk.B);
    const double ca2b = dot(pk.C, a * (a * pk.B));
    const double scale = std::max(1.0, max_abs(a) * max_abs(a));
    return cb == 0.0 && cab == 0.0 && std::abs(ca2b) > 1e-14 * scale;
}

}  // namespace igo

#endif  // IGO_MODEL_HPP
