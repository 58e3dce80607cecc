#pragma once

// Dense 2x2 complex matrices: the workhorse of Bloch-space propagators.

#include <array>
#include <complex>
#include <cmath>

namespace bzo {

using cplx = std::complex<double>;

inline constexpr cplx I_unit{0.0, 1.0};

/// Row-major 2x2 complex matrix [[m11, m12], [m21, m22]].
struct Mat2 {
    cplx m11{1.0}, m12{0.0}, m21{0.0}, m22{1.0};

    static constexpr Mat2 identity() { return {}; }
    static constexpr Mat2 zero() { return {cplx{0.0}, cplx{0.0}, cplx{0.0}, cplx{0.0}}; }

    cplx trace() const { return m11 + m22; }
    cplx half_trace() const { return 0.5 * (m11 + m22); }
    cplx det() const { return m11 * m22 - m12 * m21; }

    Mat2 adjoint() const { return {std::conj(m11), std::conj(m21), std::conj(m12), std::conj(m22)}; }

    Mat2& operator*=(cplx s) {
        m11 *= s; m12 *= s; m21 *= s; m22 *= s;
        return *this;
    }
    friend Mat2 operator*(Mat2 a, cplx s) { return a *= s; }
    friend Mat2 operator*(cplx s, Mat2 a) { return a *= s; }
    friend Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.m11 + b.m11, a.m12 + b.m12, a.m21 + b.m21, a.m22 + b.m22};
    }
    friend Mat2 operator-(const Mat2& a, const Mat2& b) {
        return {a.m11 - b.m11, a.m12 - b.m12, a.m21 - b.m21, a.m22 - b.m22};
    }
    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
                a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
    }
    std::array<cplx, 2> apply(cplx x, cplx y) const { return {m11 * x + m12 * y, m21 * x + m22 * y}; }
};

/// Largest entry modulus; used for relative comparisons.
inline double max_abs(const Mat2& a) {
    return std::max({std::abs(a.m11), std::abs(a.m12), std::abs(a.m21), std::abs(a.m22)});
}

/// exp(A) in closed form. The traceless part B satisfies B^2 = -det(B) I,
/// so exp(B) = cosh(s) I + sinh(s)/s B with s^2 = -det(B).
inline Mat2 expm(const Mat2& a) {
    const cplx half_tr = a.half_trace();
    Mat2 b = a;
    b.m11 -= half_tr;
    b.m22 -= half_tr;
    const cplx s2 = -b.det();
    const cplx s = std::sqrt(s2);
    cplx ch, sh_over_s;
    if (std::abs(s) < 1e-4) {
        // Taylor tails; truncation below 1e-20 for |s| < 1e-4
        ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0;
        sh_over_s = 1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
    } else {
        ch = std::cosh(s);
        sh_over_s = std::sinh(s) / s;
    }
    Mat2 out{ch + sh_over_s * b.m11, sh_over_s * b.m12, sh_over_s * b.m21, ch + sh_over_s * b.m22};
    if (half_tr != cplx{0.0}) out *= std::exp(half_tr);
    return out;
}

/// exp(i a) and exp(-i a) on the diagonal: the phase-shift matrix of a walk substep.
inline Mat2 phase_diag(cplx alpha) {
    return {std::exp(I_unit * alpha), cplx{0.0}, cplx{0.0}, std::exp(-I_unit * alpha)};
}

/// Beam-splitter coin [[cos b, i sin b], [i sin b, cos b]].
inline Mat2 coin(double beta) {
    const double c = std::cos(beta), s = std::sin(beta);
    return {cplx{c}, I_unit * s, I_unit * s, cplx{c}};
}

}  // namespace bzo
