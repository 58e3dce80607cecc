// Acceptance run: one PASS/FAIL line per criterion, followed by detail lines.
// Usage: bzo_acceptance [--only N[,N...]] [--expect-red N[,N...]]
// Criteria listed in --expect-red still print FAIL; they only stop counting
// toward the exit status (and a listed criterion that passes is an error).

#include <bzo/lattice_models.hpp>
#include <bzo/quantum_walk.hpp>
#include <bzo/time_evolution.hpp>
#include <bzo/ws_spectrum.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace bzo;

namespace {

struct Report {
    bool ok = true;
    std::vector<std::string> lines;

    void check(bool cond, const std::string& what) {
        ok = ok && cond;
        lines.push_back(std::string(cond ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const ModelSpec model1{ModelKind::Model1, 0.2, 1.0, 0.0};
const ModelSpec rice_mele{ModelKind::RiceMele, 0.4, 1.0, 0.0};

QWParams default_walk(long M, double delta = 0.0) {
    QWParams p;
    p.beta1 = std::numbers::pi / 2 - 0.1;
    p.beta2 = std::numbers::pi / 2 - 0.15;
    p.M = M;
    p.delta = delta;
    return p;
}

double im_at(const SweepCurve& c, double delta) {
    for (const auto& p : c.points)
        if (std::abs(p.delta - delta) < 1e-9) return p.theta.imag();
    throw std::logic_error("delta not on grid");
}

void model1_sharp(Report& r) {
    for (double F : {0.2, 0.02}) {
        const auto t0 = std::chrono::steady_clock::now();
        SweepOptions opt;
        opt.with_wkb = false;
        const SweepCurve c = sweep_delta(model1, 0.0, 1.2, 121, F, opt);
        const double secs = seconds_since(t0);
        double worst_low = 0.0, worst_low_at = 0.0, least_high = INFINITY, least_high_at = 0.0;
        for (const auto& p : c.points) {
            const double im = p.theta.imag();
            if (p.delta <= 0.55 + 1e-12 && im > worst_low) worst_low = im, worst_low_at = p.delta;
            if (p.delta >= 0.65 - 1e-12 && im < least_high) least_high = im, least_high_at = p.delta;
        }
        r.check(worst_low < 1e-6,
                fmt("F=%g: max Im theta on [0,0.55] = %.3g at delta=%.2f (< 1e-6)", F, worst_low, worst_low_at));
        r.check(least_high > 1e-3,
                fmt("F=%g: min Im theta on [0.65,1.2] = %.3g at delta=%.2f (> 1e-3)", F, least_high, least_high_at));
        r.check(c.classification == TransitionKind::Sharp && std::abs(c.delta_star - 0.60) <= 0.02,
                fmt("F=%g: classifier %s, delta*=%.4f (Sharp, 0.60 +- 0.02)", F,
                    std::string(to_string(c.classification)).c_str(), c.delta_star));
        r.check(secs < 30.0, fmt("F=%g: runtime %.2f s (< 30 s)", F, secs));
        if (F == 0.2) {
            for (const auto& p : c.points)
                if (p.delta <= 0.6 && p.theta.imag() > 1e-6)
                    r.note(fmt("F=0.2: Im theta(%.2f) = %.3g", p.delta, p.theta.imag()));
        }
    }
}

void rice_mele_smooth(Report& r) {
    for (double F : {0.2, 0.02}) {
        SweepOptions opt;
        opt.with_wkb = false;
        const SweepCurve c = sweep_delta(rice_mele, 0.0, 1.2, 121, F, opt);
        double least = INFINITY, least_at = 0.0;
        for (const auto& p : c.points)
            if (p.delta >= 0.1 - 1e-12 && p.theta.imag() < least) least = p.theta.imag(), least_at = p.delta;
        r.check(least > 0.0, fmt("F=%g: min Im theta on [0.1,1.2] = %.3g at delta=%.2f (> 0)", F, least, least_at));
        const double a = im_at(c, 0.3), b = im_at(c, 0.9);
        r.check(a < 0.1 * b, fmt("F=%g: Im theta(0.3)=%.4g < 0.1 x Im theta(0.9)=%.4g", F, a, 0.1 * b));
        r.check(c.classification == TransitionKind::Smooth && std::abs(c.delta_star - 0.6) <= 0.1,
                fmt("F=%g: classifier %s, delta*=%.4f (Smooth, 0.6 +- 0.1)", F,
                    std::string(to_string(c.classification)).c_str(), c.delta_star));
    }
}

void wkb_overlap(Report& r) {
    const double F = 0.02;
    double worst = 0.0, worst_at = 0.0, worst_full = 0.0, worst_full_at = 0.0;
    for (const double d : delta_grid(0.7, 1.2, 51)) {
        const ModelSpec m = model1.with_delta(d);
        const cplx ex = theta_exact(m, F, ThetaOptions{}).theta;
        const cplx wk = theta_wkb(m, 4096).theta;
        const double rel = std::abs(ex.imag() - wk.imag()) / std::abs(ex.imag());
        if (rel > worst) worst = rel, worst_at = d;
        // full complex values, up to sign and multiples of F; Re theta_exact is
        // locked to 0 or F/2 here while the adiabatic Re theta drifts freely
        const double full = ladder_distance(ex, wk, F) / std::abs(ex);
        if (full > worst_full) worst_full = full, worst_full_at = d;
    }
    r.check(worst < 0.05, fmt("max relative difference of Im theta %.4f at delta=%.2f (< 0.05)", worst, worst_at));
    r.note(fmt("complex ladder distance, relative: max %.4f at delta=%.2f", worst_full, worst_full_at));
}

void constant_h(Report& r) {
    double worst = 0.0;
    for (double F : {0.02, 0.2})
        for (double d : {0.0, 0.3, 0.7}) {
            const ModelSpec m{ModelKind::Model1, 0.0, 1.0, d};
            const cplx theta = theta_exact(m, F, ThetaOptions{}).theta;
            // U = exp(-i H 2pi/F) with H^2 = t2^2 - delta^2
            const cplx e = std::sqrt(cplx{1.0 - d * d});
            const WSResult closed = ws_result_from_half_trace(std::cos(e * two_pi / F), F, 0);
            worst = std::max(worst, ladder_distance(theta, closed.theta, F));
        }
    r.check(worst < 1e-10, fmt("max |theta - closed form| = %.3g (< 1e-10)", worst));
}

void diagonalization(Report& r) {
    const auto t0 = std::chrono::steady_clock::now();
    const double F = 0.2;
    for (const ModelSpec& base : {model1, rice_mele})
        for (double d : {0.0, 0.4, 0.7}) {
            const ModelSpec m = base.with_delta(d);
            const cplx theta = theta_exact(m, F, ThetaOptions{}).theta;
            const auto eig = ws_ladder_eigenvalues(m, F, 200);
            std::size_t interior = 0;
            double worst = 0.0;
            for (const auto& e : eig) {
                if (!e.interior) continue;
                ++interior;
                worst = std::max(worst, distance_to_ladder(e.value, theta, F));
            }
            r.check(interior >= 100 && worst < 1e-6,
                    fmt("%s delta=%.1f: %zu interior eigenvalues, max ladder distance %.3g (< 1e-6)",
                        std::string(to_string(m.kind)).c_str(), d, interior, worst));
        }
    const double secs = seconds_since(t0);
    r.check(secs < 60.0, fmt("runtime %.2f s (< 60 s)", secs));
}

void dynamics(Report& r) {
    const double F = 0.2, T1 = two_pi / F;
    for (const ModelSpec& base : {model1, rice_mele})
        for (double d : {0.4, 0.7}) {
            const auto t0 = std::chrono::steady_clock::now();
            const ModelSpec m = base.with_delta(d);
            const EvolutionPlan plan = plan_evolution(m, F, 10.0);
            const Trajectory tr =
                evolve(m, F, LatticeState::single_site(plan.cells), plan.t_end, plan.dt, plan.sample_every);
            const PeriodicityResult pr =
                periodicity_classify(revival_amplitude(tr, 0), tr.sample_dt(), T1, 3.0 * T1, 0.05);
            const double secs = seconds_since(t0);
            const Periodicity want = d > 0.5 ? Periodicity::Periodic : Periodicity::Aperiodic;
            r.check(pr.kind == want && secs < 120.0,
                    fmt("%s delta=%.1f: %s (mismatch %.3g), want %s; N=%zu dt=%.4g; %.2f s",
                        std::string(to_string(m.kind)).c_str(), d, std::string(to_string(pr.kind)).c_str(),
                        pr.mismatch, std::string(to_string(want)).c_str(), plan.cells, plan.dt, secs));
        }
}

void static_step_identity(Report& r) {
    double worst = 0.0;
    for (double d : {0.0, 0.036, 0.06}) {
        const QWParams p = default_walk(0, d);
        for (int j = 0; j < 64; ++j) {
            const double q = -std::numbers::pi + two_pi * j / 64.0;
            const cplx exponent = ladder_angle(qw_bloch_step_matrix(q, 0, p).half_trace());
            worst = std::max(worst, ladder_distance(exponent, qw_dispersion_f0(q, p).first, two_pi));
        }
    }
    r.check(worst < 1e-12, fmt("max |Floquet exponent - closed form| = %.3g (< 1e-12)", worst));
}

void band_collapse(Report& r) {
    for (long M : {61L, 102L})
        for (double d : {0.0, 0.036, 0.06}) {
            const double spread = qw_band_collapse_check(default_walk(M, d), 64);
            r.check(spread < 1e-8, fmt("M=%ld delta=%.3f: spread %.3g (< 1e-8)", M, d, spread));
        }
}

void qw_transition(Report& r) {
    const auto t0 = std::chrono::steady_clock::now();
    const double threshold = qw_pt_threshold(default_walk(61).beta1, default_walk(61).beta2);
    r.note(fmt("static threshold %.5f", threshold));
    for (long M : {61L, 102L}) {
        const SweepCurve c = qw_sweep_delta(default_walk(M), 0.0, 0.1, 101);
        const double a = im_at(c, 0.036), b = im_at(c, 0.06);
        r.check(a < 0.2 * b, fmt("M=%ld: Im theta(0.036)=%.3g < 0.2 x Im theta(0.06)=%.3g", M, a, 0.2 * b));
        double steepest = 0.0, at = 0.0;
        for (std::size_t i = 1; i < c.points.size(); ++i) {
            const double slope = (c.points[i].theta.imag() - c.points[i - 1].theta.imag()) /
                                 (c.points[i].delta - c.points[i - 1].delta);
            if (slope > steepest) steepest = slope, at = 0.5 * (c.points[i].delta + c.points[i - 1].delta);
        }
        r.check(std::abs(at - threshold) <= 0.015,
                fmt("M=%ld: steepest rise at delta=%.4f (threshold %.4f +- 0.015)", M, at, threshold));
        r.note(fmt("M=%ld: classifier %s, delta*=%.4f", M, std::string(to_string(c.classification)).c_str(),
                   c.delta_star));
        for (double d : {0.036, 0.06}) {
            const QWParams p = default_walk(M, d);
            const QWTrajectory tr = qw_evolve(p, QWState::single_pulse(10 * M), 10 * M, false);
            const PeriodicityResult pr = periodicity_classify(tr.recurrence, 1.0, static_cast<double>(M),
                                                              3.0 * static_cast<double>(M), 0.05, 16);
            const Periodicity want = d > 0.05 ? Periodicity::Periodic : Periodicity::Aperiodic;
            r.check(pr.kind == want, fmt("M=%ld delta=%.3f: %s (mismatch %.3g), want %s", M, d,
                                         std::string(to_string(pr.kind)).c_str(), pr.mismatch,
                                         std::string(to_string(want)).c_str()));
        }
    }
    const double secs = seconds_since(t0);
    r.check(secs < 120.0, fmt("runtime %.2f s (< 120 s)", secs));
}

void conservation(Report& r) {
    {
        const QWParams p = default_walk(61, 0.0);
        const QWTrajectory tr = qw_evolve(p, QWState::single_pulse(610), 610, false);
        double worst = 0.0;
        for (std::size_t i = 1; i < tr.log_norm.size(); ++i)
            worst = std::max(worst, std::abs(std::expm1(tr.log_norm[i] - tr.log_norm[i - 1])));
        r.check(worst < 1e-12, fmt("walk delta=0: max per-step norm change %.3g (< 1e-12)", worst));
    }
    const double F = 0.2, T1 = two_pi / F;
    for (const ModelSpec& m : {model1, rice_mele}) {
        const EvolutionPlan plan = plan_evolution(m, F, 10.0);
        const Trajectory tr =
            evolve(m, F, LatticeState::single_site(plan.cells), plan.t_end, plan.dt, plan.sample_every);
        double worst = 0.0;
        for (double ln : tr.log_norm) worst = std::max(worst, std::abs(std::expm1(ln)));
        r.check(worst < 1e-6, fmt("%s delta=0: max norm drift over 10 T1 %.3g (< 1e-6)",
                                  std::string(to_string(m.kind)).c_str(), worst));
    }
    for (const ModelSpec& base : {model1, rice_mele}) {
        const ModelSpec m = base.with_delta(0.7);
        const double im = theta_exact(m, F, ThetaOptions{}).theta.imag();
        const EvolutionPlan plan = plan_evolution(m, F, 10.0);
        const Trajectory tr =
            evolve(m, F, LatticeState::single_site(plan.cells), plan.t_end, plan.dt, plan.sample_every);
        const double slope = log_norm_slope(tr, 5.0 * T1);
        r.check(im > 0.01 && std::abs(slope - im) <= 0.05 * im,
                fmt("%s delta=0.7: log-norm slope %.6g vs Im theta %.6g (within 5%%)",
                    std::string(to_string(m.kind)).c_str(), slope, im));
    }
    {
        const QWParams p = default_walk(61, 0.06);
        const double im = qw_quasi_energy(0.0, p).imag();
        const QWTrajectory tr = qw_evolve(p, QWState::single_pulse(610), 610, false);
        const std::size_t last = tr.log_norm.size() - 1;
        const double slope = (tr.log_norm[last] - tr.log_norm[last - 305]) / 305.0;
        r.check(im > 0.01 && std::abs(slope - im) <= 0.05 * im,
                fmt("walk M=61 delta=0.06: log-norm slope %.6g vs Im theta %.6g (within 5%%)", slope, im));
    }
}

void continuum(Report& r) {
    const double t1 = 0.05, t2 = 0.1, F = 0.02;
    SweepCurve walk, rm;
    for (double d : delta_grid(0.0, 0.1, 101)) {
        const ContinuumComparison c = qw_continuum_check(t1, t2, d, F);
        walk.points.push_back({d, c.theta_walk, std::nullopt});
        rm.points.push_back({d, c.theta_rice_mele, std::nullopt});
    }
    const TransitionEstimate w = classify_transition(walk), e = classify_transition(rm);
    r.note(fmt("walk M=%ld: %s; Rice-Mele: %s", continuum_walk_params(t1, t2, 0, F).M,
               std::string(to_string(w.kind)).c_str(), std::string(to_string(e.kind)).c_str()));
    const bool located = w.kind != TransitionKind::Undetermined && e.kind != TransitionKind::Undetermined;
    const double rel = std::abs(w.delta_star - e.delta_star) / e.delta_star;
    r.check(located && rel < 0.15,
            fmt("delta* walk %.5f vs Rice-Mele %.5f: relative difference %.4f (< 0.15)", w.delta_star,
                e.delta_star, rel));
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, expect_red;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--only") only = parse_list(argv[i + 1]);
        else if (flag == "--expect-red") expect_red = parse_list(argv[i + 1]);
        else {
            std::fprintf(stderr, "unknown flag %s\n", argv[i]);
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<void(Report&)>>> criteria{
        {"Model1 sharp transition", model1_sharp},
        {"Rice-Mele smooth transition", rice_mele_smooth},
        {"WKB overlap", wkb_overlap},
        {"constant-H closed form", constant_h},
        {"diagonalization oracle", diagonalization},
        {"dynamics classification", dynamics},
        {"static walk step identity", static_step_identity},
        {"band collapse", band_collapse},
        {"walk transition", qw_transition},
        {"conservation and growth", conservation},
        {"continuum limit", continuum},
    };

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Report r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(r);
        } catch (const std::exception& e) {
            r.check(false, std::string("exception: ") + e.what());
        }
        const bool red_expected = expect_red.count(id) > 0;
        std::printf("%s criterion %2d: %s (%.2f s)%s\n", r.ok ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    seconds_since(t0), red_expected ? (r.ok ? " [listed as expected red]" : " [expected red]") : "");
        for (const auto& l : r.lines) std::printf("      %s\n", l.c_str());
        if (r.ok == red_expected) ++unexpected;
    }
    std::fflush(stdout);
    return unexpected == 0 ? 0 : 1;
}
