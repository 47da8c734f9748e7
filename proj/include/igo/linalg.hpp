#ifndef IGO_LINALG_HPP
#define IGO_LINALG_HPP

// Fixed-size 3-vector / 3x3-matrix arithmetic used throughout the model.
// Everything here is small enough that a general linear-algebra dependency
// buys nothing; the eigenvalue routine solves the characteristic cubic.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

namespace igo {

using Vec3 = std::array<double, 3>;

struct Mat3 {
    std::array<double, 9> a{};

    constexpr double& operator()(int i, int j) noexcept { return a[static_cast<std::size_t>(3 * i + j)]; }
    constexpr double operator()(int i, int j) const noexcept { return a[static_cast<std::size_t>(3 * i + j)]; }

    static constexpr Mat3 zero() noexcept { return {}; }

    static constexpr Mat3 identity() noexcept {
        Mat3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
        return m;
    }

    friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

inline constexpr Vec3 operator+(const Vec3& x, const Vec3& y) noexcept {
    return {x[0] + y[0], x[1] + y[1], x[2] + y[2]};
}

inline constexpr Vec3 operator-(const Vec3& x, const Vec3& y) noexcept {
    return {x[0] - y[0], x[1] - y[1], x[2] - y[2]};
}

inline constexpr Vec3 operator*(double s, const Vec3& x) noexcept {
    return {s * x[0], s * x[1], s * x[2]};
}

inline constexpr double dot(const Vec3& x, const Vec3& y) noexcept {
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
}

inline double norm(const Vec3& x) noexcept { return std::sqrt(dot(x, x)); }

inline double max_abs(const Vec3& x) noexcept {
    return std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});
}

/// Relative distance ||x - y|| / max(||y||, 1); used for recurrence tests.
inline double relative_distance(const Vec3& x, const Vec3& y) noexcept {
    return norm(x - y) / std::max(norm(y), 1.0);
}

inline constexpr Vec3 operator*(const Mat3& m, const Vec3& x) noexcept {
    return {m(0, 0) * x[0] + m(0, 1) * x[1] + m(0, 2) * x[2],
            m(1, 0) * x[0] + m(1, 1) * x[1] + m(1, 2) * x[2],
            m(2, 0) * x[0] + m(2, 1) * x[1] + m(2, 2) * x[2]};
}

inline constexpr Mat3 operator*(const Mat3& l, const Mat3& r) noexcept {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += l(i, k) * r(k, j);
            out(i, j) = s;
        }
    return out;
}

inline constexpr Mat3 operator+(const Mat3& l, const Mat3& r) noexcept {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.a[i] = l.a[i] + r.a[i];
    return out;
}

inline constexpr Mat3 operator-(const Mat3& l, const Mat3& r) noexcept {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.a[i] = l.a[i] - r.a[i];
    return out;
}

inline constexpr Mat3 operator*(double s, const Mat3& m) noexcept {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.a[i] = s * m.a[i];
    return out;
}

/// u v^T
inline constexpr Mat3 outer(const Vec3& u, const Vec3& v) noexcept {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
    return out;
}

inline double max_abs(const Mat3& m) noexcept {
    double s = 0.0;
    for (double v : m.a) s = std::max(s, std::abs(v));
    return s;
}

inline constexpr double trace(const Mat3& m) noexcept { return m(0, 0) + m(1, 1) + m(2, 2); }

inline constexpr double determinant(const Mat3& m) noexcept {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Solves m x = rhs by Gaussian elimination with partial pivoting.
/// Returns nullopt when a pivot vanishes relative to the matrix scale.
inline std::optional<Vec3> solve(Mat3 m, Vec3 rhs) noexcept {
    const double scale = max_abs(m);
    if (scale == 0.0) return std::nullopt;
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        if (std::abs(m(piv, col)) <= 1e-14 * scale) return std::nullopt;
        if (piv != col) {
            for (int j = 0; j < 3; ++j) std::swap(m(col, j), m(piv, j));
            std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(piv)]);
        }
        for (int r = col + 1; r < 3; ++r) {
            const double f = m(r, col) / m(col, col);
            for (int j = col; j < 3; ++j) m(r, j) -= f * m(col, j);
            rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
        }
    }
    Vec3 x{};
    for (int i = 2; i >= 0; --i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < 3; ++j) s -= m(i, j) * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = s / m(i, i);
    }
    return x;
}

using Spectrum = std::array<std::complex<double>, 3>;

namespace detail {

// p(z) = z^3 + b z^2 + c z + d
inline double cubic_value(double b, double c, double d, double z) noexcept { return ((z + b) * z + c) * z + d; }

inline double polish_real_root(double b, double c, double d, double z) noexcept {
    double fz = cubic_value(b, c, d, z);
    for (int it = 0; it < 8 && fz != 0.0; ++it) {
        const double dfz = (3.0 * z + 2.0 * b) * z + c;
        if (dfz == 0.0) break;
        const double next = z - fz / dfz;
        const double fnext = cubic_value(b, c, d, next);
        if (!(std::abs(fnext) < std::abs(fz))) break;
        z = next;
        fz = fnext;
    }
    return z;
}

}  // namespace detail

/// Eigenvalues of a real 3x3 matrix from its characteristic cubic, solved in
/// closed form (trigonometric / Cardano branch) and Newton-polished. Sorted by
/// decreasing modulus.
inline Spectrum eigenvalues(const Mat3& m) noexcept {
    const double b = -trace(m);
    const double c = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                     m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    const double d = -determinant(m);

    // Depressed cubic z = w - b/3: w^3 + p w + q = 0.
    const double shift = -b / 3.0;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double disc = q * q / 4.0 + p * p * p / 27.0;

    Spectrum out;
    const double tiny = 1e-30 * std::max({1.0, b * b, std::abs(c)});
    if (std::abs(p) <= tiny && std::abs(q) <= tiny * std::max(1.0, std::abs(b))) {
        out = {shift, shift, shift};
    } else if (disc <= 0.0) {
        const double r = 2.0 * std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (p * r);
        arg = std::clamp(arg, -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            const double w = r * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
            out[static_cast<std::size_t>(k)] = detail::polish_real_root(b, c, d, w + shift);
        }
    } else {
        const double sq = std::sqrt(disc);
        const double u = -std::copysign(std::cbrt(std::abs(q) / 2.0 + sq), q);
        const double v = (u != 0.0) ? -p / (3.0 * u) : 0.0;
        const double root = detail::polish_real_root(b, c, d, u + v + shift);
        // Deflate: z^2 + (b + root) z + prod, prod taken from d for stability.
        const double lin = b + root;
        const double prod = (std::abs(root) > 1e-300) ? -d / root : c + root * lin;
        const double re = -lin / 2.0;
        const double dq = re * re - prod;
        if (dq >= 0.0) {
            const double s = std::sqrt(dq);
            const double z1 = re + std::copysign(s, re);
            const double z2 = (z1 != 0.0) ? prod / z1 : 0.0;
            out = {root, detail::polish_real_root(b, c, d, z1), detail::polish_real_root(b, c, d, z2)};
        } else {
            const double im = std::sqrt(-dq);
            out = {root, std::complex<double>(re, im), std::complex<double>(re, -im)};
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& x, const auto& y) { return std::abs(x) > std::abs(y); });
    return out;
}

inline double spectral_radius(const Mat3& m) noexcept { return std::abs(eigenvalues(m)[0]); }

/// Dominant-modulus estimate by renormalized power iteration (growth rate of
/// ||M^k v||). Converges for complex-dominant spectra too, just more slowly;
/// intended as an independent cross-check of eigenvalues().
inline double spectral_radius_power(const Mat3& m, int iterations = 400) noexcept {
    Vec3 v{1.0, 0.7548776662466927, 0.5698402909980532};
    v = (1.0 / norm(v)) * v;
    const int burn = iterations / 2;
    double log_growth = 0.0;
    for (int k = 0; k < iterations; ++k) {
        v = m * v;
        const double n = norm(v);
        if (n == 0.0) return 0.0;
        if (k >= burn) log_growth += std::log(n);
        v = (1.0 / n) * v;
    }
    return std::exp(log_growth / (iterations - burn));
}

}  // namespace igo

#endif  // IGO_LINALG_HPP
