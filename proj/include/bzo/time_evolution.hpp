#pragma once

// Continuous-time dynamics i d(psi)/dt = H psi on the forced real-space lattice.
//
// Stored amplitudes are kept near unit norm; the true state is
// stored * exp(log_amp). Gain/loss growth over many Bloch periods would
// otherwise leave the double range.

#include <bzo/errors.hpp>
#include <bzo/lattice_models.hpp>
#include <bzo/ws_spectrum.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace bzo {

enum class Sublattice { A, B };

struct LatticeState {
    std::vector<cplx> a;  ///< a_n for cells first_cell .. first_cell + cells - 1
    std::vector<cplx> b;
    long first_cell{0};
    double t{0.0};
    double log_amp{0.0};

    std::size_t cells() const { return a.size(); }
    long last_cell() const { return first_cell + static_cast<long>(a.size()) - 1; }
    bool contains(long cell) const { return cell >= first_cell && cell <= last_cell(); }
    std::size_t index(long cell) const { return static_cast<std::size_t>(cell - first_cell); }

    double stored_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i]) + std::norm(b[i]);
        return std::sqrt(s);
    }
    /// ln of the true norm, log_amp + ln(stored norm).
    double log_norm() const { return log_amp + std::log(stored_norm()); }

    /// Lattice of `cells` cells centered on cell 0, with unit amplitude on one site.
    static LatticeState single_site(std::size_t cells, long excited_cell = 0, Sublattice which = Sublattice::A) {
        LatticeState s;
        s.a.assign(cells, cplx{0.0});
        s.b.assign(cells, cplx{0.0});
        s.first_cell = -static_cast<long>(cells / 2);
        if (!s.contains(excited_cell)) throw ConfigError("excited cell outside the lattice");
        (which == Sublattice::A ? s.a : s.b)[s.index(excited_cell)] = 1.0;
        return s;
    }
};

/// Cells needed to hold a Bloch-Zener excursion for ~10 Bloch periods:
/// 4 ceil(W/F) + 41 with W the Hermitian band top.
inline std::size_t auto_lattice_cells(const ModelSpec& model, double force) {
    if (!(force > 0.0)) throw ConfigError("auto-sizing needs F > 0");
    return 4 * static_cast<std::size_t>(std::ceil(hermitian_band_top(model) / force)) + 41;
}

struct EvolveOptions {
    long ramp_shift{0};             ///< adds to the force-ramp origin (gauge check)
    double boundary_tolerance{1e-6};
    double max_step_radius{0.1};    ///< dt * spectral radius bound must stay below this
};

struct Trajectory {
    double force{};
    double dt{};
    std::size_t sample_every{};
    std::size_t cells{};
    long first_cell{};
    std::vector<double> times;
    std::vector<double> abs_a;     ///< |a~_n| per sample, row-major [sample][cell]
    std::vector<double> abs_b;     ///< |b~_n| per sample
    std::vector<double> log_amp;   ///< accumulated renormalization at each sample
    std::vector<double> log_norm;  ///< ln of the true norm at each sample
    LatticeState final_state;

    std::size_t samples() const { return times.size(); }
    double sample_dt() const { return dt * static_cast<double>(sample_every); }
    std::span<const double> abs_a_at(std::size_t s) const { return {abs_a.data() + s * cells, cells}; }
    std::span<const double> abs_b_at(std::size_t s) const { return {abs_b.data() + s * cells, cells}; }
};

namespace detail {

inline double edge_weight(const LatticeState& s) {
    const std::size_t n = s.cells();
    double edge = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::norm(s.a[i]) + std::norm(s.b[i]);
        total += w;
        if (i < 2 || i + 2 >= n) edge += w;
    }
    return total > 0.0 ? edge / total : 0.0;
}

inline void record(Trajectory& tr, const LatticeState& s) {
    const double inv = 1.0 / s.stored_norm();
    tr.times.push_back(s.t);
    for (std::size_t i = 0; i < s.cells(); ++i) {
        tr.abs_a.push_back(std::abs(s.a[i]) * inv);
        tr.abs_b.push_back(std::abs(s.b[i]) * inv);
    }
    tr.log_amp.push_back(s.log_amp);
    tr.log_norm.push_back(s.log_norm());
}

}  // namespace detail

/// Classical RK4 with fixed step dt. Samples are taken at step 0 and every
/// `sample_every` steps; the run ends at the step nearest t_end. Throws
/// BoundaryContamination when the edge cells carry more than the tolerated weight.
inline Trajectory evolve(const ModelSpec& model, double force, const LatticeState& init, double t_end, double dt,
                         std::size_t sample_every, const EvolveOptions& opt = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (sample_every == 0) throw ConfigError("sample_every must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("t_end must be non-negative");
    if (init.a.size() != init.b.size() || init.cells() < 3) throw ConfigError("initial state needs >= 3 cells");
    const RealSpaceOperator op(model, force, init.cells(), init.first_cell + opt.ramp_shift);
    const double radius = op.spectral_radius_bound();
    if (dt * radius >= opt.max_step_radius)
        throw ConfigError("dt * spectral radius = " + std::to_string(dt * radius) + " exceeds " +
                          std::to_string(opt.max_step_radius));

    const std::size_t dim = op.dim();
    const auto n_steps = static_cast<std::size_t>(std::llround((t_end - init.t) / dt));
    std::vector<cplx> psi(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (std::size_t j = 0; j < init.cells(); ++j) {
        psi[2 * j] = init.a[j];
        psi[2 * j + 1] = init.b[j];
    }
    LatticeState state = init;
    auto sync = [&] {
        for (std::size_t j = 0; j < state.cells(); ++j) {
            state.a[j] = psi[2 * j];
            state.b[j] = psi[2 * j + 1];
        }
    };

    Trajectory tr;
    tr.force = force;
    tr.dt = dt;
    tr.sample_every = sample_every;
    tr.cells = init.cells();
    tr.first_cell = init.first_cell;
    const std::size_t n_samples = n_steps / sample_every + 1;
    tr.times.reserve(n_samples);
    tr.abs_a.reserve(n_samples * tr.cells);
    tr.abs_b.reserve(n_samples * tr.cells);
    detail::record(tr, state);

    // f(x) = -i H x
    auto rhs = [&](std::span<const cplx> x, std::span<cplx> out) {
        op.apply(x, out);
        for (cplx& v : out) v = cplx{v.imag(), -v.real()};
    };
    const double h = dt;
    for (std::size_t step = 1; step <= n_steps; ++step) {
        rhs(psi, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = psi[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = psi[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = psi[i] + h * k3[i];
        rhs(tmp, k4);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            psi[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            norm2 += std::norm(psi[i]);
        }
        const double norm = std::sqrt(norm2);
        if (!std::isfinite(norm) || norm == 0.0) throw NumericalGuardError("state norm left the double range");
        if (norm < 0.5 || norm > 2.0) {
            for (cplx& v : psi) v /= norm;
            state.log_amp += std::log(norm);
        }
        if (step % sample_every == 0) {
            state.t = init.t + static_cast<double>(step) * dt;
            sync();
            const double w = detail::edge_weight(state);
            if (w > opt.boundary_tolerance)
                throw BoundaryContamination("edge weight " + std::to_string(w) + " at t = " + std::to_string(state.t));
            detail::record(tr, state);
        }
    }
    state.t = init.t + static_cast<double>(n_steps) * dt;
    sync();
    tr.final_state = std::move(state);
    return tr;
}

/// Fixed-step grid for a run of `periods` Bloch periods: at least 2000 steps per
/// period (more if the spectral-radius guard demands), an integer number of steps
/// per sample, `samples_per_period` samples per period.
struct EvolutionPlan {
    std::size_t cells{};
    double dt{};
    std::size_t sample_every{};
    std::size_t samples_per_period{};
    double t_end{};
};

inline EvolutionPlan plan_evolution(const ModelSpec& model, double force, double periods,
                                    std::size_t cells = 0, std::size_t samples_per_period = 128,
                                    std::size_t min_steps_per_period = 2000, double max_step_radius = 0.1) {
    if (!(force > 0.0)) throw ConfigError("planning needs F > 0");
    if (!(periods > 0.0)) throw ConfigError("planning needs a positive number of periods");
    if (samples_per_period == 0) throw ConfigError("samples_per_period must be positive");
    EvolutionPlan p;
    p.cells = cells ? cells : auto_lattice_cells(model, force);
    const double T1 = two_pi / force;
    const double radius = RealSpaceOperator::centered(model, force, p.cells).spectral_radius_bound();
    const double needed = std::max(static_cast<double>(min_steps_per_period), radius * T1 / (0.95 * max_step_radius));
    p.sample_every = static_cast<std::size_t>(std::ceil(needed / static_cast<double>(samples_per_period)));
    p.samples_per_period = samples_per_period;
    p.dt = T1 / static_cast<double>(p.sample_every * samples_per_period);
    p.t_end = periods * T1;
    return p;
}

/// A(t_j) = |a~_cell(t_j)|.
inline std::vector<double> revival_amplitude(const Trajectory& tr, long cell) {
    if (cell < tr.first_cell || cell >= tr.first_cell + static_cast<long>(tr.cells))
        throw ConfigError("revival cell outside the lattice");
    const auto idx = static_cast<std::size_t>(cell - tr.first_cell);
    std::vector<double> out(tr.samples());
    for (std::size_t s = 0; s < tr.samples(); ++s) out[s] = tr.abs_a[s * tr.cells + idx];
    return out;
}

enum class Periodicity { Periodic, Aperiodic };

inline std::string_view to_string(Periodicity p) { return p == Periodicity::Periodic ? "Periodic" : "Aperiodic"; }

struct PeriodicityResult {
    Periodicity kind{Periodicity::Aperiodic};
    double mismatch{};
    std::size_t windows{};
};

/// Compares consecutive one-period windows after the transient:
/// mismatch = max_w |A_w - A_{w+1}|_2 / |A_w|_2, Periodic iff mismatch < tol.
/// Throws InsufficientData unless the series covers transient + 3 periods with an
/// integer number (>= min_samples_per_period) of samples per period.
inline PeriodicityResult periodicity_classify(std::span<const double> series, double sample_dt, double period,
                                              double transient, double tol = 0.05,
                                              std::size_t min_samples_per_period = 64) {
    if (!(sample_dt > 0.0) || !(period > 0.0) || transient < 0.0)
        throw ConfigError("periodicity check needs positive sampling and period");
    const double ratio = period / sample_dt;
    const auto per = static_cast<std::size_t>(std::llround(ratio));
    if (per < min_samples_per_period || std::abs(ratio - static_cast<double>(per)) > 1e-6 * ratio)
        throw InsufficientData("sampling is not commensurate with the period or too coarse");
    const auto start = static_cast<std::size_t>(std::ceil(transient / sample_dt - 1e-9));
    if (series.size() < start + 3 * per)
        throw InsufficientData("series shorter than transient + 3 periods");
    const std::size_t windows = (series.size() - start) / per;
    PeriodicityResult r;
    r.windows = windows;
    for (std::size_t w = 0; w + 1 < windows; ++w) {
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const double x = series[start + w * per + i];
            const double y = series[start + (w + 1) * per + i];
            diff += (x - y) * (x - y);
            ref += x * x;
        }
        const double m = ref > 0.0 ? std::sqrt(diff / ref) : (diff > 0.0 ? INFINITY : 0.0);
        r.mismatch = std::max(r.mismatch, m);
    }
    r.kind = r.mismatch < tol ? Periodicity::Periodic : Periodicity::Aperiodic;
    return r;
}

/// Growth rate d(ln norm)/dt between the last sample and the one `window` earlier.
inline double log_norm_slope(const Trajectory& tr, double window) {
    const auto back = static_cast<std::size_t>(std::llround(window / tr.sample_dt()));
    if (back == 0 || back >= tr.samples()) throw InsufficientData("trajectory shorter than the slope window");
    const std::size_t last = tr.samples() - 1;
    return (tr.log_norm[last] - tr.log_norm[last - back]) / (tr.times[last] - tr.times[last - back]);
}

}  // namespace bzo
