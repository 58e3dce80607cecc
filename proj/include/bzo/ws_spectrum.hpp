#pragma once

// Wannier-Stark ladders E = lF +/- theta of a forced two-band lattice.
//
// theta comes from the half-trace of the k-ordered exponential
//     U = prod_k exp(-i H(k) dk / F),  cos(phi) = tr(U)/2,  theta = F phi / (2 pi),
// with an adiabatic (WKB) estimate and a dense real-space diagonalization as
// independent cross-checks.

#include <bzo/errors.hpp>
#include <bzo/lattice_models.hpp>
#include <bzo/mat2.hpp>
#include <bzo/parallel.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bzo {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct WSResult {
    cplx theta;       ///< ladder offset (energy), Im theta >= 0
    cplx phi;         ///< theta = F phi / (2 pi)
    cplx half_trace;  ///< (U11 + U22)/2
    double force{};
    double T1{};                ///< 2 pi / F
    std::optional<double> T2;   ///< (pi/phi) T1, only when phi is real
    std::size_t n_k{};
};

/// Floquet angle from a half-trace: principal arccos, flipped to the sign with
/// Im phi >= 0. Both signs describe the same pair of ladders.
inline cplx ladder_angle(cplx half_trace) {
    cplx phi = std::acos(half_trace);
    if (phi.imag() < 0.0) phi = -phi;
    return phi;
}

/// Same representative, read off a unimodular propagator. The eigenvalues are
/// h +- r with r^2 = ((U11 - U22)/2)^2 + U12 U21, which stays accurate near
/// U = +-1 where arccos(h) loses half the digits. The log is taken of the larger
/// eigenvalue; the smaller one cancels badly once the ladders grow apart.
inline cplx ladder_angle(const Mat2& unscaled) {
    // rescaled so that d^2 and U12 U21 cannot overflow
    const double scale = max_abs(unscaled);
    if (!std::isfinite(scale) || scale == 0.0) throw ConvergenceFailure("propagator is not finite");
    const Mat2 u = unscaled * cplx{1.0 / scale};
    const cplx d = 0.5 * (u.m11 - u.m22);
    const cplx r = std::sqrt(d * d + u.m12 * u.m21);
    const cplx h = u.half_trace();
    const cplx big = std::abs(h + r) >= std::abs(h - r) ? h + r : h - r;
    cplx phi = -I_unit * (std::log(big) + std::log(scale));
    if (phi.real() < 0.0) phi = -phi;
    if (phi.imag() < 0.0) phi = -phi;
    return phi;
}

/// Distance between the ladder sets {lF + a, lF - a} and {lF + b, lF - b}.
inline double ladder_distance(cplx a, cplx b, double force) {
    auto folded = [force](cplx z) {
        const double shift = force * std::round(z.real() / force);
        return std::abs(z - shift);
    };
    return std::min(folded(a - b), folded(a + b));
}

/// Distance from an energy to the nearest rung of the ladders lF +/- theta.
inline double distance_to_ladder(cplx energy, cplx theta, double force) {
    return ladder_distance(energy, theta, force);
}

inline WSResult ws_result_from_angle(cplx phi, cplx half_trace, double force, std::size_t n_k) {
    WSResult r;
    r.half_trace = half_trace;
    r.phi = phi;
    r.theta = force * r.phi / two_pi;
    r.force = force;
    r.T1 = two_pi / force;
    r.n_k = n_k;
    if (std::abs(r.phi.imag()) < 1e-8 && r.phi.real() > 0.0) r.T2 = (std::numbers::pi / r.phi.real()) * r.T1;
    return r;
}

inline WSResult ws_result_from_half_trace(cplx half_trace, double force, std::size_t n_k) {
    return ws_result_from_angle(ladder_angle(half_trace), half_trace, force, n_k);
}

inline WSResult ws_result_from_propagator(const Mat2& u, double force, std::size_t n_k) {
    return ws_result_from_angle(ladder_angle(u), u.half_trace(), force, n_k);
}

/// Midpoint ordered product over n_k slices of the Brillouin zone. Under the
/// force k(t) = k0 - F t, so the slices run from k = pi down to -pi and later
/// slices multiply on the left. `start_shift` rotates the starting slice.
inline Mat2 ordered_exponential(const ModelSpec& model, double force, std::size_t n_k,
                                std::size_t start_shift = 0) {
    model.validate();
    if (!(force > 0.0) || !std::isfinite(force)) throw ConfigError("ordered exponential needs F > 0");
    if (n_k < 16) throw ConfigError("ordered exponential needs n_k >= 16");
    const double dk = two_pi / static_cast<double>(n_k);
    const cplx step_scale = -I_unit * (dk / force);
    Mat2 u = Mat2::identity();
    for (std::size_t s = 0; s < n_k; ++s) {
        const std::size_t j = (s + start_shift) % n_k;
        const double k = std::numbers::pi - (static_cast<double>(j) + 0.5) * dk;
        u = expm(bloch_hamiltonian(model, k) * step_scale) * u;
    }
    return u;
}

/// theta at a fixed k-grid.
inline WSResult theta_exact(const ModelSpec& model, double force, std::size_t n_k) {
    return ws_result_from_propagator(ordered_exponential(model, force, n_k), force, n_k);
}

struct ThetaOptions {
    std::size_t n_k{4096};
    bool refine{true};             ///< double n_k until the extrapolated propagator settles
    double tolerance{1e-9};        ///< on successive estimates, relative to max(1, |c|)
    std::size_t max_n_k{1u << 22};
};

/// theta with grid doubling. The midpoint product is time-symmetric, so its
/// half-trace error expands in even powers of dk; successive grids are combined
/// by one Richardson step, (4 c(2n) - c(n)) / 3, and refinement stops when two
/// consecutive extrapolations agree to `tolerance`. Throws ConvergenceFailure
/// once max_n_k is exceeded.
inline WSResult theta_exact(const ModelSpec& model, double force, const ThetaOptions& opt) {
    if (!opt.refine) return theta_exact(model, force, opt.n_k);
    std::size_t n = opt.n_k;
    Mat2 coarse = ordered_exponential(model, force, n);
    std::optional<Mat2> prev_estimate;
    while (true) {
        const std::size_t next = 2 * n;
        if (next > opt.max_n_k)
            throw ConvergenceFailure("ordered exponential did not converge by n_k = " + std::to_string(n));
        const Mat2 fine = ordered_exponential(model, force, next);
        // the midpoint product has an even error expansion in 1/n_k
        const Mat2 estimate = (cplx{4.0} * fine - coarse) * cplx{1.0 / 3.0};
        const double scale = std::max(1.0, max_abs(estimate));
        // constant-in-k Hamiltonians are exact at any grid
        if (max_abs(fine - coarse) < 1e-13 * scale) return ws_result_from_propagator(fine, force, next);
        if (prev_estimate && max_abs(estimate - *prev_estimate) < opt.tolerance * scale)
            return ws_result_from_propagator(estimate, force, next);
        prev_estimate = estimate;
        coarse = fine;
        n = next;
    }
}

struct WkbResult {
    cplx theta;
    bool branch_warning{false};  ///< integrand passed within 1e-12 of zero
    double min_abs_integrand{};
};

/// Adiabatic estimate theta ~ (1/2pi) \int E+(k) dk, trapezoidal on the periodic
/// grid k_j = -pi + 2 pi j / n_k. The square-root branch is carried by continuity
/// from the principal root at k = -pi; exact ties (radicand crossing zero along a
/// real axis) fall back to the principal root.
inline WkbResult theta_wkb(const ModelSpec& model, std::size_t n_k) {
    model.validate();
    if (n_k < 16) throw ConfigError("WKB quadrature needs n_k >= 16");
    const double dk = two_pi / static_cast<double>(n_k);
    WkbResult out;
    out.min_abs_integrand = std::numeric_limits<double>::infinity();
    cplx sum{0.0};
    cplx prev{};
    for (std::size_t j = 0; j < n_k; ++j) {
        const double k = -std::numbers::pi + static_cast<double>(j) * dk;
        const cplx principal = std::sqrt(dispersion_radicand(model, k));
        cplx e = principal;
        if (j > 0) {
            const double d_plus = std::abs(principal - prev);
            const double d_minus = std::abs(principal + prev);
            const double scale = std::max(std::abs(principal), std::abs(prev));
            if (d_minus < d_plus && (d_plus - d_minus) > 1e-9 * scale) e = -principal;
        }
        out.min_abs_integrand = std::min(out.min_abs_integrand, std::abs(e));
        sum += e;
        prev = e;
    }
    out.branch_warning = out.min_abs_integrand < 1e-12;
    out.theta = sum / static_cast<double>(n_k);
    if (out.theta.imag() < 0.0) out.theta = -out.theta;
    return out;
}

struct LadderEigenvalue {
    cplx value;
    double edge_weight{};  ///< normalized weight on the outermost 2 cells at each end
    bool interior{false};  ///< edge_weight < 1e-8
};

/// Dense eigen-decomposition of the centered real-space operator.
inline std::vector<LadderEigenvalue> ws_ladder_eigenvalues(const ModelSpec& model, double force, std::size_t cells,
                                                           std::size_t max_cells = 2000) {
    if (cells < 16) throw ConfigError("ws-diag needs at least 16 cells");
    if (cells > max_cells)
        throw ConfigError("ws-diag cell count " + std::to_string(cells) + " exceeds the dense cap " +
                          std::to_string(max_cells));
    if (!(force > 0.0)) throw ConfigError("ws-diag needs F > 0");
    const RealSpaceOperator op = RealSpaceOperator::centered(model, force, cells);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(op.to_dense(), true);
    if (solver.info() != Eigen::Success) throw ConvergenceFailure("dense eigensolver failed");
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    const Eigen::Index dim = vecs.rows();
    std::vector<LadderEigenvalue> out;
    out.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index c = 0; c < dim; ++c) {
        const double total = vecs.col(c).squaredNorm();
        const double edge = vecs.col(c).head(4).squaredNorm() + vecs.col(c).tail(4).squaredNorm();
        const double w = edge / total;
        out.push_back({vals(c), w, w < 1e-8});
    }
    std::sort(out.begin(), out.end(), [](const LadderEigenvalue& a, const LadderEigenvalue& b) {
        if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
        return a.value.imag() < b.value.imag();
    });
    return out;
}

// ---------------------------------------------------------------------------
// Gain/loss sweeps and transition classification

enum class TransitionKind { Sharp, Smooth, Undetermined };

inline std::string_view to_string(TransitionKind k) {
    switch (k) {
        case TransitionKind::Sharp: return "Sharp";
        case TransitionKind::Smooth: return "Smooth";
        case TransitionKind::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

struct SweepPoint {
    double delta{};
    cplx theta;
    std::optional<cplx> theta_wkb;
};

struct SweepCurve {
    std::vector<SweepPoint> points;  ///< strictly increasing delta
    TransitionKind classification{TransitionKind::Undetermined};
    double delta_star{std::numeric_limits<double>::quiet_NaN()};
};

struct TransitionEstimate {
    TransitionKind kind{TransitionKind::Undetermined};
    double delta_star{std::numeric_limits<double>::quiet_NaN()};
};

/// Sharp: Im theta stays below eps on a leading run, then exceeds 10 eps at every
/// later sample; delta* is the first sample past the run.
/// Smooth: no such run, but Im theta is nonzero (> eps) on the upper half of the
/// approach to the rise; delta* is the interpolated first crossing of
/// max(100 eps, 5% of max Im theta).
inline TransitionEstimate classify_transition(std::span<const SweepPoint> points, double eps = 1e-6) {
    TransitionEstimate est;
    const std::size_t n = points.size();
    if (n < 8) return est;
    std::vector<double> im(n);
    double max_im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        im[i] = points[i].theta.imag();
        max_im = std::max(max_im, im[i]);
    }
    if (max_im <= 10.0 * eps) return est;
    const double level = std::max(100.0 * eps, 0.05 * max_im);
    std::size_t rise = 0;
    while (rise < n && im[rise] < level) ++rise;
    std::size_t flat = 0;
    while (flat < n && im[flat] < eps) ++flat;

    const bool sharp = flat >= 2 && flat < n && 2 * flat >= rise &&
                       std::all_of(im.begin() + static_cast<long>(flat), im.end(), [eps](double v) { return v > 10.0 * eps; });
    if (sharp) {
        est.kind = TransitionKind::Sharp;
        est.delta_star = points[flat].delta;
        return est;
    }
    const bool smooth = rise >= 2 && rise < n &&
                        std::all_of(im.begin() + static_cast<long>(rise / 2), im.begin() + static_cast<long>(rise),
                                    [eps](double v) { return v > eps; });
    if (smooth) {
        est.kind = TransitionKind::Smooth;
        const double d0 = points[rise - 1].delta, d1 = points[rise].delta;
        const double y0 = im[rise - 1], y1 = im[rise];
        est.delta_star = d0 + (level - y0) / (y1 - y0) * (d1 - d0);
    }
    return est;
}

inline TransitionEstimate classify_transition(const SweepCurve& curve, double eps = 1e-6) {
    return classify_transition(std::span<const SweepPoint>(curve.points), eps);
}

/// n_points values from lo to hi inclusive; a single point when n_points == 1.
inline std::vector<double> delta_grid(double lo, double hi, std::size_t n_points) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("sweep bounds must be finite");
    if (n_points == 0) throw ConfigError("sweep needs at least one point");
    if (n_points == 1) return {lo};
    if (!(lo < hi)) throw ConfigError("sweep needs delta_min < delta_max");
    std::vector<double> out(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    out.back() = hi;
    return out;
}

struct SweepOptions {
    ThetaOptions theta{};
    bool with_wkb{true};
    std::size_t wkb_n_k{4096};
    double eps_floor{1e-6};
    unsigned threads{0};
};

/// theta_exact (and optionally theta_wkb) at each delta of the grid, then classified.
inline SweepCurve sweep_delta(const ModelSpec& model_template, double delta_min, double delta_max,
                              std::size_t n_points, double force, const SweepOptions& opt = {}) {
    const std::vector<double> deltas = delta_grid(delta_min, delta_max, n_points);
    SweepCurve curve;
    curve.points.resize(deltas.size());
    parallel_for(deltas.size(), opt.threads, [&](std::size_t i) {
        const ModelSpec m = model_template.with_delta(deltas[i]);
        SweepPoint& p = curve.points[i];
        p.delta = deltas[i];
        p.theta = theta_exact(m, force, opt.theta).theta;
        if (opt.with_wkb) p.theta_wkb = theta_wkb(m, opt.wkb_n_k).theta;
    });
    const TransitionEstimate est = classify_transition(curve, opt.eps_floor);
    curve.classification = est.kind;
    curve.delta_star = est.delta_star;
    return curve;
}

}  // namespace bzo
