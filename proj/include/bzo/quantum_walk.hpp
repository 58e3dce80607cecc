#pragma once

// Two-step discrete-time photonic quantum walk with complex phases
//     phi1(m) = -i Delta/2 + F m + pi/2,   phi2(m) = +i Delta/2 + F m - pi/2,
// a discrete-time version of the forced gain/loss Rice-Mele lattice.
//
// Substep with coin angle b and phase p:
//     u'_n = [cos b u_{n+1} + i sin b v_{n+1}] exp(-i p)
//     v'_n = [cos b v_{n-1} + i sin b u_{n-1}] exp(+i p)
// For plane waves (u, v)_n = (x, y) exp(iqn) a substep is D(q - p) R(b) with
// D(a) = diag(e^{ia}, e^{-ia}) and R(b) the beam-splitter coin.

#include <bzo/errors.hpp>
#include <bzo/mat2.hpp>
#include <bzo/parallel.hpp>
#include <bzo/ws_spectrum.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace bzo {

struct QWParams {
    double beta1{std::numbers::pi / 2 - 0.1};
    double beta2{std::numbers::pi / 2 - 0.15};
    double delta{0.0};
    long M{61};  ///< F = 2 pi / M; M = 0 encodes the unforced walk (F = 0)

    void validate() const {
        if (!std::isfinite(beta1) || !std::isfinite(beta2) || !std::isfinite(delta))
            throw ConfigError("walk parameters must be finite");
        if (delta < 0.0) throw ConfigError("walk gain/loss must be non-negative");
        if (M != 0 && M < 2) throw ConfigError("walk period M must be >= 2 (or 0 for no force)");
    }
    double force() const { return M == 0 ? 0.0 : two_pi / static_cast<double>(M); }
    /// Steps in one period of the drive (1 for the unforced walk).
    long period_steps() const { return M == 0 ? 1 : M; }
    /// Quasi-energies are defined modulo this spacing.
    double ladder_spacing() const { return M == 0 ? two_pi : force(); }

    QWParams with_delta(double d) const {
        QWParams p = *this;
        p.delta = d;
        return p;
    }
};

/// Complex phases (phi1, phi2) of step m.
inline std::pair<cplx, cplx> qw_phases(long m, const QWParams& p) {
    const double ramp = p.force() * static_cast<double>(m);
    const double half_pi = std::numbers::pi / 2;
    return {cplx{ramp + half_pi, -p.delta / 2}, cplx{ramp - half_pi, p.delta / 2}};
}

/// Bloch-space map (x_m, y_m) = U^{(m)}(q) (x_{m-1}, y_{m-1}).
inline Mat2 qw_bloch_step_matrix(double q, long m, const QWParams& p) {
    const auto [phi1, phi2] = qw_phases(m, p);
    return phase_diag(q - phi2) * coin(p.beta2) * phase_diag(q - phi1) * coin(p.beta1);
}

/// Bands of the unforced walk, E+ = principal acos(c1 c2 cos 2q + s1 s2 cosh Delta).
inline std::pair<cplx, cplx> qw_dispersion_f0(double q, const QWParams& p) {
    const double arg_real = std::cos(p.beta1) * std::cos(p.beta2) * std::cos(2 * q) +
                            std::sin(p.beta1) * std::sin(p.beta2) * std::cosh(p.delta);
    const cplx e = std::acos(cplx{arg_real});
    return {e, -e};
}

/// Gain/loss at which the unforced bands turn complex:
/// |sin b1 sin b2| cosh(Dc) = 1 - |cos b1 cos b2|, clamped at 0.
inline double qw_pt_threshold(double beta1, double beta2) {
    const double ss = std::abs(std::sin(beta1) * std::sin(beta2));
    if (ss < 1e-15) throw DegenerateCoin("sin(beta1) sin(beta2) = 0: coins do not mix");
    const double arg = (1.0 - std::abs(std::cos(beta1) * std::cos(beta2))) / ss;
    return arg >= 1.0 ? std::acosh(arg) : 0.0;
}

/// Time-ordered propagator S = U^{(first+P-1)} ... U^{(first)} over one drive period.
inline Mat2 qw_propagator(double q, const QWParams& p, long first_step = 1) {
    p.validate();
    if (p.M == 0) return qw_bloch_step_matrix(q, 0, p);
    Mat2 s = Mat2::identity();
    for (long m = first_step; m < first_step + p.M; ++m) s = qw_bloch_step_matrix(q, m, p) * s;
    return s;
}

/// Quasi-energy theta(q) = mu(q)/M with e^{+-i mu} the eigenvalues of S; Im theta >= 0.
inline cplx qw_quasi_energy(double q, const QWParams& p, long first_step = 1) {
    const cplx mu = ladder_angle(qw_propagator(q, p, first_step));
    return mu / static_cast<double>(p.period_steps());
}

/// max_j distance(theta(q_j), theta(q_0)) on a uniform grid of [-pi, pi), with
/// distances taken between ladder sets (sign and modulo-F ambiguities removed).
inline double qw_band_collapse_check(const QWParams& p, std::size_t n_q) {
    if (n_q < 16) throw ConfigError("band-collapse check needs n_q >= 16");
    const double spacing = p.ladder_spacing();
    const cplx ref = qw_quasi_energy(-std::numbers::pi, p);
    double spread = 0.0;
    for (std::size_t j = 1; j < n_q; ++j) {
        const double q = -std::numbers::pi + two_pi * static_cast<double>(j) / static_cast<double>(n_q);
        spread = std::max(spread, ladder_distance(qw_quasi_energy(q, p), ref, spacing));
    }
    return spread;
}

struct QWSweepOptions {
    double eps_floor{1e-6};
    bool check_flatness{true};
    std::size_t flatness_n_q{16};
    double flatness_tolerance{1e-8};
    unsigned threads{0};
};

/// theta at q = 0 over a gain/loss grid. Each point first verifies that the
/// quasi-energy bands are flat, so q = 0 represents the whole band.
inline SweepCurve qw_sweep_delta(const QWParams& tmpl, double delta_min, double delta_max, std::size_t n_points,
                                 const QWSweepOptions& opt = {}) {
    tmpl.validate();
    if (tmpl.M == 0) throw ConfigError("walk sweep needs a force (M >= 2)");
    const std::vector<double> deltas = delta_grid(delta_min, delta_max, n_points);
    SweepCurve curve;
    curve.points.resize(deltas.size());
    parallel_for(deltas.size(), opt.threads, [&](std::size_t i) {
        const QWParams p = tmpl.with_delta(deltas[i]);
        if (opt.check_flatness) {
            const double spread = qw_band_collapse_check(p, opt.flatness_n_q);
            if (spread > opt.flatness_tolerance)
                throw NumericalGuardError("quasi-energy bands not flat at delta = " + std::to_string(deltas[i]) +
                                          " (spread " + std::to_string(spread) + ")");
        }
        curve.points[i] = {deltas[i], qw_quasi_energy(0.0, p), std::nullopt};
    });
    const TransitionEstimate est = classify_transition(curve, opt.eps_floor);
    curve.classification = est.kind;
    curve.delta_star = est.delta_star;
    return curve;
}

// ---------------------------------------------------------------------------
// Real-space walk

struct QWState {
    std::vector<cplx> u;
    std::vector<cplx> v;
    long first_site{0};
    long start_site{0};  ///< light-cone apex
    long m{0};
    double log_amp{0.0};

    std::size_t sites() const { return u.size(); }
    long last_site() const { return first_site + static_cast<long>(u.size()) - 1; }
    std::size_t index(long n) const { return static_cast<std::size_t>(n - first_site); }
    bool contains(long n) const { return n >= first_site && n <= last_site(); }

    double stored_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += std::norm(u[i]) + std::norm(v[i]);
        return std::sqrt(s);
    }
    double log_norm() const { return log_amp + std::log(stored_norm()); }

    /// u_n = delta_{n,0}, v = 0 on sites [-2 m_end - 4, 2 m_end + 4].
    static QWState single_pulse(long m_end) {
        if (m_end < 0) throw ConfigError("m_end must be non-negative");
        QWState s;
        const long half = 2 * m_end + 4;
        s.first_site = -half;
        s.u.assign(static_cast<std::size_t>(2 * half + 1), cplx{0.0});
        s.v.assign(s.u.size(), cplx{0.0});
        s.u[s.index(0)] = 1.0;
        return s;
    }
};

namespace detail {

inline void qw_substep(std::vector<cplx>& u, std::vector<cplx>& v, std::vector<cplx>& nu, std::vector<cplx>& nv,
                       double beta, cplx phase) {
    const double c = std::cos(beta), s = std::sin(beta);
    const cplx is{0.0, s};
    const cplx back = std::exp(-I_unit * phase);
    const cplx fwd = std::exp(I_unit * phase);
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
        nu[i] = i + 1 < n ? (c * u[i + 1] + is * v[i + 1]) * back : cplx{0.0};
        nv[i] = i > 0 ? (c * v[i - 1] + is * u[i - 1]) * fwd : cplx{0.0};
    }
    u.swap(nu);
    v.swap(nv);
}

}  // namespace detail

/// One full step (both substeps) m -> m + 1. Throws BoundaryContamination when
/// the light cone |n - start| <= 2 m + 2 would leave the array.
inline QWState qw_step(QWState state, const QWParams& p) {
    const long next = state.m + 1;
    const long reach = 2 * next + 2;
    if (state.start_site - reach < state.first_site || state.start_site + reach > state.last_site())
        throw BoundaryContamination("walk light cone reached the array edge at step " + std::to_string(next));
    const auto [phi1, phi2] = qw_phases(next, p);
    std::vector<cplx> nu(state.sites()), nv(state.sites());
    detail::qw_substep(state.u, state.v, nu, nv, p.beta1, phi1);
    detail::qw_substep(state.u, state.v, nu, nv, p.beta2, phi2);
    state.m = next;
    const double norm = state.stored_norm();
    if (!std::isfinite(norm) || norm == 0.0) throw NumericalGuardError("walk norm left the double range");
    if (norm < 0.5 || norm > 2.0) {
        for (std::size_t i = 0; i < state.sites(); ++i) {
            state.u[i] /= norm;
            state.v[i] /= norm;
        }
        state.log_amp += std::log(norm);
    }
    return state;
}

struct QWTrajectory {
    std::size_t sites{};
    long first_site{};
    long recurrence_site{0};
    std::vector<long> steps;
    std::vector<double> abs_u;     ///< |u~_n| per step, row-major [step][site]; empty unless maps were kept
    std::vector<double> abs_v;
    std::vector<double> recurrence;  ///< A_m = |u~_site|
    std::vector<double> log_amp;
    std::vector<double> log_norm;
    QWState final_state;
};

/// Iterates qw_step from `init` to step m_end, recording normalized maps
/// (optional) and the recurrence amplitude at `recurrence_site`.
inline QWTrajectory qw_evolve(const QWParams& p, QWState init, long m_end, bool keep_maps = true,
                              long recurrence_site = 0) {
    p.validate();
    if (m_end < init.m) throw ConfigError("m_end precedes the initial step");
    if (!init.contains(recurrence_site)) throw ConfigError("recurrence site outside the array");
    QWTrajectory tr;
    tr.sites = init.sites();
    tr.first_site = init.first_site;
    tr.recurrence_site = recurrence_site;
    const std::size_t ridx = init.index(recurrence_site);
    auto record = [&](const QWState& s) {
        const double inv = 1.0 / s.stored_norm();
        tr.steps.push_back(s.m);
        tr.recurrence.push_back(std::abs(s.u[ridx]) * inv);
        tr.log_amp.push_back(s.log_amp);
        tr.log_norm.push_back(s.log_norm());
        if (keep_maps) {
            for (std::size_t i = 0; i < s.sites(); ++i) {
                tr.abs_u.push_back(std::abs(s.u[i]) * inv);
                tr.abs_v.push_back(std::abs(s.v[i]) * inv);
            }
        }
    };
    record(init);
    QWState state = std::move(init);
    while (state.m < m_end) {
        state = qw_step(std::move(state), p);
        record(state);
    }
    tr.final_state = std::move(state);
    return tr;
}

struct ContinuumComparison {
    long M{};
    double walk_force{};       ///< 2 pi / M
    double continuum_force{};  ///< twice the walk force
    double beta1{}, beta2{};
    cplx theta_walk;           ///< per step
    cplx theta_rice_mele;      ///< per unit time, one step = one time unit
};

/// Parameters of the walk that mimics the Rice-Mele lattice (t1, t2, Delta)
/// under continuum force F_cont: beta1 = pi/2 - t2, beta2 = pi/2 + t1 and
/// M = round(4 pi / F_cont), so that the continuum force 2 (2 pi / M) ~ F_cont.
inline QWParams continuum_walk_params(double t1, double t2, double delta, double continuum_force) {
    if (!(continuum_force > 0.0)) throw ConfigError("continuum force must be positive");
    QWParams p;
    p.beta1 = std::numbers::pi / 2 - t2;
    p.beta2 = std::numbers::pi / 2 + t1;
    p.delta = delta;
    p.M = std::max(2L, std::lround(2.0 * two_pi / continuum_force));
    return p;
}

inline ContinuumComparison qw_continuum_check(double t1, double t2, double delta, double continuum_force,
                                              const ThetaOptions& theta_opt = {}) {
    for (double x : {t1, t2, delta, continuum_force})
        if (!(x >= 0.0 && x <= 0.2)) throw ConfigError("continuum check needs t1, t2, delta, F in [0, 0.2]");
    const QWParams p = continuum_walk_params(t1, t2, delta, continuum_force);
    ContinuumComparison c;
    c.M = p.M;
    c.walk_force = p.force();
    c.continuum_force = 2.0 * p.force();
    c.beta1 = p.beta1;
    c.beta2 = p.beta2;
    c.theta_walk = qw_quasi_energy(0.0, p);
    c.theta_rice_mele = theta_exact(ModelSpec{ModelKind::RiceMele, t1, t2, delta}, c.continuum_force, theta_opt).theta;
    return c;
}

}  // namespace bzo
