#include "cli_runner.hpp"

#include "expr.hpp"

#include <bzo/io.hpp>
#include <bzo/lattice_models.hpp>
#include <bzo/quantum_walk.hpp>
#include <bzo/time_evolution.hpp>
#include <bzo/ws_spectrum.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef BZO_VERSION
#define BZO_VERSION "0.0.0"
#endif

namespace bzo::cli {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json to_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// Collects outputs of one run and writes the manifest.
class Session {
public:
    Session(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log), dir_(cfg.out_dir) {
        fs::create_directories(dir_);
    }

    json params = json::object();
    json results = json::object();

    void write(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path.string());
        out << content;
        out.close();
        outputs_.push_back({path.string(), sha256_hex(content)});
        log_ << "wrote " << path.string() << '\n';
    }

    void write_csv(const std::string& name, const std::function<void(std::ostream&)>& fill) {
        std::ostringstream s;
        fill(s);
        write(name, s.str());
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    std::vector<std::string> finish(const std::string& command) {
        json manifest;
        manifest["command"] = command;
        manifest["params"] = params;
        manifest["version"] = BZO_VERSION;
        json outs = json::array();
        for (const auto& [p, h] : outputs_) outs.push_back({{"path", p}, {"sha256", h}});
        manifest["outputs"] = outs;
        manifest["results"] = results;
        const fs::path path = dir_ / "manifest.json";
        std::ofstream(path, std::ios::binary) << manifest.dump(2) << "\n";
        std::vector<std::string> paths;
        for (const auto& o : outputs_) paths.push_back(o.first);
        paths.push_back(path.string());
        return paths;
    }

    std::ostream& log() { return log_; }

private:
    const RunConfig& cfg_;
    std::ostream& log_;
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BZL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return default_threads();
}

ModelSpec model_from(const RunConfig& c, double delta) {
    const auto kind = parse_model_kind(c.model);
    if (!kind) throw ConfigError("unknown model '" + c.model + "' (model1 | rice-mele)");
    ModelSpec m{*kind, c.t1, c.t2, delta};
    m.validate();
    return m;
}

double single_delta(const RunConfig& c) {
    const DeltaRange r = parse_range(c.delta);
    if (r.points != 1) throw ConfigError("this command takes a single --delta value");
    return r.lo;
}

ThetaOptions theta_options(const RunConfig& c) {
    ThetaOptions o;
    o.n_k = c.n_k;
    o.refine = !c.no_refine;
    o.tolerance = c.theta_tol;
    return o;
}

QWParams walk_from(const RunConfig& c, double delta) {
    QWParams p;
    p.beta1 = parse_expr(c.beta1);
    p.beta2 = parse_expr(c.beta2);
    p.delta = delta;
    p.M = c.M;
    p.validate();
    return p;
}

void record_model(Session& s, const ModelSpec& m, double force) {
    s.params["model"] = std::string(to_string(m.kind));
    s.params["t1"] = m.t1;
    s.params["t2"] = m.t2;
    s.params["force"] = force;
    json warnings = json::array();
    for (const auto& w : m.warnings()) {
        warnings.push_back(w);
        s.log() << "warning: " << w << '\n';
    }
    s.results["warnings"] = warnings;
}

void record_theta_numerics(Session& s, const RunConfig& c) {
    s.params["n_k"] = c.n_k;
    s.params["refine"] = !c.no_refine;
    s.params["theta_tolerance"] = c.theta_tol;
}

void record_walk(Session& s, const QWParams& p, const std::string& prefix = "") {
    s.params[prefix + "beta1"] = p.beta1;
    s.params[prefix + "beta2"] = p.beta2;
    s.params[prefix + "M"] = p.M;
    s.params[prefix + "walk_force"] = p.force();
}

json ws_json(const WSResult& r) {
    return json{{"theta", to_json(r.theta)}, {"phi", to_json(r.phi)},         {"half_trace", to_json(r.half_trace)},
                {"force", r.force},          {"T1", r.T1},                    {"T2", optional_json(r.T2)},
                {"n_k", r.n_k}};
}

json sweep_summary(const SweepCurve& c) {
    return json{{"points", c.points.size()},
                {"classification", std::string(to_string(c.classification))},
                {"delta_star", std::isnan(c.delta_star) ? json(nullptr) : json(c.delta_star)}};
}

// ---------------------------------------------------------------------------
// Commands. Each writes its artifacts under `prefix` and returns a summary.

json cmd_spectrum(const RunConfig& c, Session& s, const std::string& prefix) {
    const ModelSpec m = model_from(c, single_delta(c));
    record_model(s, m, c.force);
    record_theta_numerics(s, c);
    s.params["delta"] = m.delta;
    const WSResult r = theta_exact(m, c.force, theta_options(c));
    s.params["n_k_resolved"] = r.n_k;
    json out = ws_json(r);
    out["delta"] = m.delta;
    out["pt_threshold"] = pt_threshold(m);
    s.write_json(prefix + "spectrum.json", out);
    return out;
}

json cmd_wkb(const RunConfig& c, Session& s, const std::string& prefix) {
    const ModelSpec m = model_from(c, single_delta(c));
    record_model(s, m, c.force);
    s.params["delta"] = m.delta;
    s.params["wkb_n_k"] = c.wkb_n_k;
    const WkbResult w = theta_wkb(m, c.wkb_n_k);
    if (w.branch_warning) s.log() << "warning: WKB integrand passes near zero; branch choice is ambiguous\n";
    json out{{"delta", m.delta},
             {"theta_wkb", to_json(w.theta)},
             {"branch_warning", w.branch_warning},
             {"min_abs_integrand", w.min_abs_integrand},
             {"n_k", c.wkb_n_k}};
    s.write_json(prefix + "wkb.json", out);
    return out;
}

json cmd_ws_diag(const RunConfig& c, Session& s, const std::string& prefix) {
    const ModelSpec m = model_from(c, single_delta(c));
    record_model(s, m, c.force);
    record_theta_numerics(s, c);
    s.params["delta"] = m.delta;
    s.params["cells"] = c.diag_cells;
    s.params["dense_cap"] = c.diag_cap;
    const auto eig = ws_ladder_eigenvalues(m, c.force, c.diag_cells, c.diag_cap);
    const WSResult r = theta_exact(m, c.force, theta_options(c));
    std::size_t interior = 0;
    double worst = 0.0;
    s.write_csv(prefix + "ws_diag.csv", [&](std::ostream& o) {
        io::CsvWriter w(o);
        w.header("re", "im", "edge_weight", "interior", "ladder_distance");
        for (const auto& e : eig) {
            const double d = distance_to_ladder(e.value, r.theta, c.force);
            if (e.interior) {
                ++interior;
                worst = std::max(worst, d);
            }
            w.row({io::num(e.value.real()), io::num(e.value.imag()), io::num(e.edge_weight), e.interior ? "1" : "0",
                   io::num(d)});
        }
    });
    json out{{"delta", m.delta},
             {"eigenvalues", eig.size()},
             {"interior", interior},
             {"max_interior_ladder_distance", worst},
             {"theta_exact", to_json(r.theta)}};
    s.write_json(prefix + "ws_diag.json", out);
    return out;
}

json cmd_sweep(const RunConfig& c, Session& s, const std::string& prefix) {
    const DeltaRange range = parse_range(c.delta);
    const ModelSpec m = model_from(c, range.lo);
    record_model(s, m, c.force);
    record_theta_numerics(s, c);
    s.params["delta_min"] = range.lo;
    s.params["delta_max"] = range.hi;
    s.params["delta_points"] = range.points;
    s.params["wkb_n_k"] = c.wkb_n_k;
    s.params["eps_floor"] = c.eps_floor;
    SweepOptions opt;
    opt.theta = theta_options(c);
    opt.wkb_n_k = c.wkb_n_k;
    opt.eps_floor = c.eps_floor;
    opt.threads = c.threads;
    const SweepCurve curve = sweep_delta(m, range.lo, range.hi, range.points, c.force, opt);
    s.write_csv(prefix + "sweep.csv", [&](std::ostream& o) { io::write_sweep_csv(o, curve); });
    json out = sweep_summary(curve);
    out["pt_threshold"] = pt_threshold(m);
    s.write_json(prefix + "sweep.json", out);
    return out;
}

json cmd_evolve(const RunConfig& c, Session& s, const std::string& prefix) {
    const ModelSpec m = model_from(c, single_delta(c));
    record_model(s, m, c.force);
    s.params["delta"] = m.delta;
    EvolutionPlan plan = plan_evolution(m, c.force, c.periods, c.cells, c.samples_per_period);
    const double T1 = two_pi / c.force;
    if (c.dt > 0.0) {
        plan.dt = c.dt;
        plan.sample_every = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(T1 / (static_cast<double>(c.samples_per_period) * c.dt))));
    }
    s.params["cells"] = plan.cells;
    s.params["dt"] = plan.dt;
    s.params["sample_every"] = plan.sample_every;
    s.params["samples_per_period"] = plan.samples_per_period;
    s.params["t_end"] = plan.t_end;
    s.params["revival_cell"] = c.revival_offset;
    s.params["transient"] = c.transient_periods * T1;
    s.params["periodic_tolerance"] = c.periodic_tol;

    const LatticeState init = LatticeState::single_site(plan.cells, 0, Sublattice::A);
    const Trajectory tr = evolve(m, c.force, init, plan.t_end, plan.dt, plan.sample_every);
    const std::vector<double> revival = revival_amplitude(tr, c.revival_offset);
    s.write_csv(prefix + "trajectory.csv", [&](std::ostream& o) { io::write_trajectory_csv(o, tr); });
    s.write_csv(prefix + "revival.csv", [&](std::ostream& o) { io::write_revival_csv(o, tr, revival); });

    json out{{"delta", m.delta}, {"T1", T1}};
    try {
        const PeriodicityResult pr =
            periodicity_classify(revival, tr.sample_dt(), T1, c.transient_periods * T1, c.periodic_tol);
        out["classification"] = std::string(to_string(pr.kind));
        out["mismatch"] = pr.mismatch;
    } catch (const InsufficientData& e) {
        out["classification"] = nullptr;
        out["classification_error"] = e.what();
    }
    if (tr.times.back() >= 5.0 * T1) out["growth_rate"] = log_norm_slope(tr, 5.0 * T1);
    out["theta_exact"] = to_json(theta_exact(m, c.force, theta_options(c)).theta);
    out["times"] = tr.times;
    out["A"] = revival;
    out["log_amp"] = tr.log_amp;
    out["log_norm"] = tr.log_norm;
    s.write_json(prefix + "evolve.json", out);
    json brief = out;
    for (const char* k : {"times", "A", "log_amp", "log_norm"}) brief.erase(k);
    return brief;
}

json cmd_classify(const RunConfig& c, Session& s, const std::string& prefix) {
    if (c.input.empty()) throw ConfigError("classify needs --input");
    std::ifstream in(c.input);
    if (!in) throw ConfigError("cannot open " + c.input);
    const io::CsvTable table = io::read_csv(in);
    s.params["input"] = c.input;
    s.params["kind"] = c.kind;
    json out;
    if (c.kind == "sweep") {
        s.params["eps_floor"] = c.eps_floor;
        const TransitionEstimate e = classify_transition(io::sweep_from_table(table), c.eps_floor);
        out = json{{"classification", std::string(to_string(e.kind))},
                   {"delta_star", std::isnan(e.delta_star) ? json(nullptr) : json(e.delta_star)}};
    } else if (c.kind == "series") {
        std::vector<double> t, a;
        std::size_t min_spp = c.min_samples_per_period;
        double period = c.period;
        if (std::find(table.columns.begin(), table.columns.end(), "m") != table.columns.end()) {
            t = table.values("m");
            a = table.values("A_m");
            if (period <= 0.0) period = static_cast<double>(c.M);
            min_spp = std::min<std::size_t>(min_spp, static_cast<std::size_t>(period));
        } else {
            t = table.values("t");
            a = table.values("A");
            if (period <= 0.0) period = two_pi / c.force;
        }
        if (t.size() < 2) throw ConfigError("series needs at least two samples");
        const double sdt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        for (std::size_t i = 1; i < t.size(); ++i)
            if (std::abs((t[i] - t[i - 1]) - sdt) > 1e-6 * sdt) throw ConfigError("series sampling is not uniform");
        const double transient = c.transient >= 0.0 ? c.transient : c.transient_periods * period;
        s.params["period"] = period;
        s.params["transient"] = transient;
        s.params["tolerance"] = c.periodic_tol;
        s.params["min_samples_per_period"] = min_spp;
        const PeriodicityResult r = periodicity_classify(a, sdt, period, transient, c.periodic_tol, min_spp);
        out = json{{"classification", std::string(to_string(r.kind))}, {"mismatch", r.mismatch}, {"windows", r.windows}};
    } else {
        throw ConfigError("--kind must be sweep or series");
    }
    s.write_json(prefix + "classify.json", out);
    return out;
}

json cmd_qw_spectrum(const RunConfig& c, Session& s, const std::string& prefix) {
    const QWParams p = walk_from(c, single_delta(c));
    record_walk(s, p);
    s.params["delta"] = p.delta;
    s.params["n_q"] = c.n_q;
    if (c.n_q < 16) throw ConfigError("--nq must be >= 16");
    s.write_csv(prefix + "qw_spectrum.csv", [&](std::ostream& o) {
        io::CsvWriter w(o);
        w.header("q", "re_theta", "im_theta", "re_e_static", "im_e_static");
        for (std::size_t j = 0; j < c.n_q; ++j) {
            const double q = -std::numbers::pi + two_pi * static_cast<double>(j) / static_cast<double>(c.n_q);
            const cplx th = qw_quasi_energy(q, p);
            const cplx e0 = qw_dispersion_f0(q, p).first;
            w.row({io::num(q), io::num(th.real()), io::num(th.imag()), io::num(e0.real()), io::num(e0.imag())});
        }
    });
    json out{{"delta", p.delta},
             {"theta_q0", to_json(qw_quasi_energy(0.0, p))},
             {"band_spread", qw_band_collapse_check(p, c.n_q)}};
    try {
        out["static_threshold"] = qw_pt_threshold(p.beta1, p.beta2);
    } catch (const DegenerateCoin&) {
        out["static_threshold"] = nullptr;
    }
    s.write_json(prefix + "qw_spectrum.json", out);
    return out;
}

json cmd_qw_sweep(const RunConfig& c, Session& s, const std::string& prefix) {
    const DeltaRange range = parse_range(c.delta);
    const QWParams p = walk_from(c, range.lo);
    record_walk(s, p);
    s.params["delta_min"] = range.lo;
    s.params["delta_max"] = range.hi;
    s.params["delta_points"] = range.points;
    s.params["eps_floor"] = c.eps_floor;
    QWSweepOptions opt;
    opt.eps_floor = c.eps_floor;
    opt.threads = c.threads;
    s.params["flatness_n_q"] = opt.flatness_n_q;
    s.params["flatness_tolerance"] = opt.flatness_tolerance;
    const SweepCurve curve = qw_sweep_delta(p, range.lo, range.hi, range.points, opt);
    s.write_csv(prefix + "qw_sweep.csv", [&](std::ostream& o) { io::write_sweep_csv(o, curve); });
    json out = sweep_summary(curve);
    out["static_threshold"] = qw_pt_threshold(p.beta1, p.beta2);
    s.write_json(prefix + "qw_sweep.json", out);
    return out;
}

json cmd_qw_evolve(const RunConfig& c, Session& s, const std::string& prefix) {
    const QWParams p = walk_from(c, single_delta(c));
    if (p.M == 0) throw ConfigError("qw-evolve needs M >= 2");
    const long m_end = c.steps > 0 ? c.steps : 10 * p.M;
    const long transient = static_cast<long>(std::llround(c.transient_periods * static_cast<double>(p.M)));
    record_walk(s, p);
    s.params["delta"] = p.delta;
    s.params["steps"] = m_end;
    s.params["transient_steps"] = transient;
    s.params["periodic_tolerance"] = c.periodic_tol;
    s.params["map_stride"] = c.map_stride;
    const QWTrajectory tr = qw_evolve(p, QWState::single_pulse(m_end), m_end, true, 0);
    s.write_csv(prefix + "qw_trajectory.csv",
                [&](std::ostream& o) { io::write_qw_trajectory_csv(o, tr, 0, c.map_stride); });
    s.write_csv(prefix + "qw_recurrence.csv", [&](std::ostream& o) { io::write_qw_recurrence_csv(o, tr); });
    json out{{"delta", p.delta}, {"theta", to_json(qw_quasi_energy(0.0, p))}};
    try {
        const auto per = static_cast<std::size_t>(p.M);
        const PeriodicityResult r = periodicity_classify(tr.recurrence, 1.0, static_cast<double>(p.M),
                                                         static_cast<double>(transient), c.periodic_tol,
                                                         std::min<std::size_t>(per, 16));
        out["classification"] = std::string(to_string(r.kind));
        out["mismatch"] = r.mismatch;
    } catch (const InsufficientData& e) {
        out["classification"] = nullptr;
        out["classification_error"] = e.what();
    }
    if (m_end >= 5 * p.M) {
        const std::size_t last = tr.log_norm.size() - 1;
        const auto back = static_cast<std::size_t>(5 * p.M);
        out["growth_rate_per_step"] = (tr.log_norm[last] - tr.log_norm[last - back]) / static_cast<double>(back);
    }
    s.write_json(prefix + "qw_evolve.json", out);
    return out;
}

json cmd_qw_flatness(const RunConfig& c, Session& s, const std::string& prefix) {
    const QWParams p = walk_from(c, single_delta(c));
    record_walk(s, p);
    s.params["delta"] = p.delta;
    s.params["n_q"] = c.n_q;
    QWParams unforced = p;
    unforced.M = 0;
    json out{{"delta", p.delta},
             {"spread", qw_band_collapse_check(p, c.n_q)},
             {"spread_unforced", qw_band_collapse_check(unforced, c.n_q)}};
    s.write_json(prefix + "qw_flatness.json", out);
    return out;
}

json cmd_continuum(const RunConfig& c, Session& s, const std::string& prefix) {
    const DeltaRange range = parse_range(c.delta);
    const std::vector<double> deltas = delta_grid(range.lo, range.hi, range.points);
    const QWParams p = continuum_walk_params(c.t1, c.t2, range.lo, c.force);
    s.params["t1"] = c.t1;
    s.params["t2"] = c.t2;
    s.params["continuum_force_requested"] = c.force;
    s.params["delta_min"] = range.lo;
    s.params["delta_max"] = range.hi;
    s.params["delta_points"] = range.points;
    record_walk(s, p);
    s.params["continuum_force"] = 2.0 * p.force();
    record_theta_numerics(s, c);
    std::vector<ContinuumComparison> rows(deltas.size());
    parallel_for(deltas.size(), c.threads,
                 [&](std::size_t i) { rows[i] = qw_continuum_check(c.t1, c.t2, deltas[i], c.force, theta_options(c)); });
    SweepCurve walk, rm;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        walk.points.push_back({deltas[i], rows[i].theta_walk, std::nullopt});
        rm.points.push_back({deltas[i], rows[i].theta_rice_mele, std::nullopt});
    }
    s.write_csv(prefix + "continuum.csv", [&](std::ostream& o) {
        io::CsvWriter w(o);
        w.header("delta", "re_theta_walk", "im_theta_walk", "re_theta_rice_mele", "im_theta_rice_mele");
        for (std::size_t i = 0; i < deltas.size(); ++i)
            w.row({io::num(deltas[i]), io::num(rows[i].theta_walk.real()), io::num(rows[i].theta_walk.imag()),
                   io::num(rows[i].theta_rice_mele.real()), io::num(rows[i].theta_rice_mele.imag())});
    });
    const TransitionEstimate ew = classify_transition(walk, c.eps_floor);
    const TransitionEstimate er = classify_transition(rm, c.eps_floor);
    auto star = [](double d) { return std::isnan(d) ? json(nullptr) : json(d); };
    json out{{"walk", {{"classification", std::string(to_string(ew.kind))}, {"delta_star", star(ew.delta_star)}}},
             {"rice_mele", {{"classification", std::string(to_string(er.kind))}, {"delta_star", star(er.delta_star)}}}};
    if (!std::isnan(ew.delta_star) && !std::isnan(er.delta_star))
        out["relative_difference"] = std::abs(ew.delta_star - er.delta_star) / er.delta_star;
    if (deltas.size() == 1) {
        out["theta_walk"] = to_json(rows[0].theta_walk);
        out["theta_rice_mele"] = to_json(rows[0].theta_rice_mele);
    }
    s.write_json(prefix + "continuum.json", out);
    return out;
}

using Command = json (*)(const RunConfig&, Session&, const std::string&);

const std::vector<std::pair<std::string, Command>>& command_table() {
    static const std::vector<std::pair<std::string, Command>> table{
        {"spectrum", cmd_spectrum},       {"wkb", cmd_wkb},
        {"ws-diag", cmd_ws_diag},         {"sweep", cmd_sweep},
        {"evolve", cmd_evolve},           {"classify", cmd_classify},
        {"qw-spectrum", cmd_qw_spectrum}, {"qw-sweep", cmd_qw_sweep},
        {"qw-evolve", cmd_qw_evolve},     {"qw-flatness", cmd_qw_flatness},
        {"continuum-check", cmd_continuum},
    };
    return table;
}

Command find_command(const std::string& name) {
    for (const auto& [n, f] : command_table())
        if (n == name) return f;
    return nullptr;
}

/// One-shot figure presets; each panel gets its own file prefix.
json cmd_repro(const RunConfig& base, Session& s) {
    struct Panel {
        std::string prefix;
        Command command;
        std::function<void(RunConfig&)> setup;
    };
    std::vector<Panel> panels;
    auto ct = [](const char* model, double t1) {
        return [=](RunConfig& c) {
            c.model = model;
            c.t1 = t1;
            c.t2 = 1.0;
            c.force = 0.2;
        };
    };
    const std::string& fig = base.figure;
    if (fig == "fig1b" || fig == "fig2b") {
        const auto setup = fig == "fig1b" ? ct("model1", 0.2) : ct("rice-mele", 0.4);
        for (const auto& [label, f] : {std::pair{"0.2", 0.2}, std::pair{"0.02", 0.02}})
            panels.push_back({fig + "_F" + label + "_", cmd_sweep, [=](RunConfig& c) {
                                  setup(c);
                                  c.force = f;
                                  c.delta = "0:1.2:120";
                              }});
    } else if (fig == "fig1cd" || fig == "fig2cd") {
        const auto setup = fig == "fig1cd" ? ct("model1", 0.2) : ct("rice-mele", 0.4);
        for (const char* d : {"0.4", "0.7"})
            panels.push_back({fig + "_delta" + d + "_", cmd_evolve, [=](RunConfig& c) {
                                  setup(c);
                                  c.delta = d;
                              }});
    } else if (fig == "fig3a") {
        for (long M : {61L, 102L})
            panels.push_back({fig + "_M" + std::to_string(M) + "_", cmd_qw_sweep, [=](RunConfig& c) {
                                  c.M = M;
                                  c.delta = "0:0.1:100";
                              }});
    } else if (fig == "fig3bc") {
        for (const char* d : {"0.036", "0.06"})
            panels.push_back({fig + "_delta" + d + "_", cmd_qw_evolve, [=](RunConfig& c) {
                                  c.M = 61;
                                  c.delta = d;
                                  c.steps = 610;
                              }});
    } else {
        throw ConfigError("unknown figure '" + fig + "' (fig1b fig1cd fig2b fig2cd fig3a fig3bc)");
    }
    json out = json::object();
    json all_params = json::object();
    for (const Panel& p : panels) {
        RunConfig c = base;
        p.setup(c);
        s.params = json::object();
        out[p.prefix.substr(0, p.prefix.size() - 1)] = p.command(c, s, p.prefix);
        all_params[p.prefix.substr(0, p.prefix.size() - 1)] = s.params;
    }
    s.params = all_params;
    s.params["figure"] = fig;
    return out;
}

}  // namespace

RunResult run(const RunConfig& input, std::ostream& log) {
    RunResult result;
    RunConfig cfg = input;
    try {
        cfg.threads = resolve_threads(cfg.threads);
        Session session(cfg, log);
        json summary;
        if (cfg.command == "repro") {
            summary = cmd_repro(cfg, session);
        } else if (Command f = find_command(cfg.command)) {
            summary = f(cfg, session, "");
        } else {
            throw ConfigError("unknown command '" + cfg.command + "'");
        }
        session.params["threads"] = cfg.threads;
        session.results["summary"] = summary;
        result.outputs = session.finish(cfg.command == "repro" ? "repro " + cfg.figure : cfg.command);
        log << summary.dump(2) << '\n';
    } catch (const NumericalGuardError& e) {
        result.status = exit_numerical;
        result.message = e.what();
    } catch (const ConfigError& e) {
        result.status = exit_config;
        result.message = e.what();
    } catch (const fs::filesystem_error& e) {
        result.status = exit_config;
        result.message = e.what();
    }
    return result;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Bloch-Zener oscillations in driven non-Hermitian lattices and quantum walks", "bzo"};
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
    app.set_version_flag("--version", BZO_VERSION);
    RunConfig cfg;

    auto add_output = [&](CLI::App* sc) {
        sc->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
        sc->add_option("--threads", cfg.threads, "Worker threads (0: BZL_THREADS or all cores)");
    };
    auto add_model = [&](CLI::App* sc) {
        sc->add_option("--model", cfg.model, "model1 | rice-mele")->capture_default_str();
        sc->add_option("--t1", cfg.t1, "Hopping t1")->capture_default_str();
        sc->add_option("--t2", cfg.t2, "Hopping t2")->capture_default_str();
        sc->add_option("--force", cfg.force, "dc force F")->capture_default_str();
    };
    auto add_delta = [&](CLI::App* sc, const char* help) {
        sc->add_option("--delta", cfg.delta, help)->capture_default_str();
    };
    auto add_theta = [&](CLI::App* sc) {
        sc->add_option("--nk", cfg.n_k, "Initial k-slices of the ordered product")->capture_default_str();
        sc->add_flag("--no-refine", cfg.no_refine, "Use --nk as is, without grid doubling");
        sc->add_option("--theta-tol", cfg.theta_tol, "Grid-doubling tolerance")->capture_default_str();
    };
    auto add_walk = [&](CLI::App* sc) {
        sc->add_option("--beta1", cfg.beta1, "Coupling angle of the first substep (pi-expressions allowed)")
            ->capture_default_str();
        sc->add_option("--beta2", cfg.beta2, "Coupling angle of the second substep")->capture_default_str();
        sc->add_option("--m", cfg.M, "Drive period M (F = 2 pi / M)")->capture_default_str();
    };
    auto add_eps = [&](CLI::App* sc) {
        sc->add_option("--eps", cfg.eps_floor, "Zero floor for Im theta in the classifier")->capture_default_str();
    };
    auto add_periodicity = [&](CLI::App* sc) {
        sc->add_option("--transient-periods", cfg.transient_periods, "Transient, in drive periods")
            ->capture_default_str();
        sc->add_option("--periodic-tol", cfg.periodic_tol, "Window mismatch tolerance")->capture_default_str();
    };

    auto* spectrum = app.add_subcommand("spectrum", "Ladder angle theta from the k-ordered exponential");
    add_model(spectrum), add_delta(spectrum, "Gain/loss"), add_theta(spectrum), add_output(spectrum);

    auto* wkb = app.add_subcommand("wkb", "Adiabatic (WKB) estimate of theta");
    add_model(wkb), add_delta(wkb, "Gain/loss"), add_output(wkb);
    wkb->add_option("--nk", cfg.wkb_n_k, "Quadrature points")->capture_default_str();

    auto* diag = app.add_subcommand("ws-diag", "Dense diagonalization of the forced real-space lattice");
    add_model(diag), add_delta(diag, "Gain/loss"), add_theta(diag), add_output(diag);
    diag->add_option("--cells", cfg.diag_cells, "Lattice cells")->capture_default_str();
    diag->add_option("--max-cells", cfg.diag_cap, "Dense diagonalization cap")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "theta over a gain/loss range, with transition classification");
    add_model(sweep), add_delta(sweep, "lo:hi:intervals"), add_theta(sweep), add_eps(sweep), add_output(sweep);
    sweep->add_option("--wkb-nk", cfg.wkb_n_k, "WKB quadrature points")->capture_default_str();

    auto* evolve_sc = app.add_subcommand("evolve", "Time evolution from a single excited site");
    add_model(evolve_sc), add_delta(evolve_sc, "Gain/loss"), add_theta(evolve_sc), add_periodicity(evolve_sc),
        add_output(evolve_sc);
    evolve_sc->add_option("--periods", cfg.periods, "Duration in Bloch periods")->capture_default_str();
    evolve_sc->add_option("--dt", cfg.dt, "Time step (0: automatic)")->capture_default_str();
    evolve_sc->add_option("--samples-per-period", cfg.samples_per_period, "Samples per Bloch period")
        ->capture_default_str();
    evolve_sc->add_option("--cells", cfg.cells, "Lattice cells (0: automatic)")->capture_default_str();
    evolve_sc->add_option("--revival-cell", cfg.revival_offset, "Cell whose amplitude is tracked (excited cell is 0)")
        ->capture_default_str();

    auto* classify = app.add_subcommand("classify", "Classify a sweep CSV or a revival series CSV");
    classify->add_option("--input", cfg.input, "CSV file")->required();
    classify->add_option("--kind", cfg.kind, "sweep | series")->capture_default_str();
    classify->add_option("--period", cfg.period, "Series period (0: 2 pi / force, or M for walk series)");
    classify->add_option("--transient", cfg.transient, "Series transient (default: transient-periods x period)");
    classify->add_option("--force", cfg.force, "dc force used to infer the period")->capture_default_str();
    classify->add_option("--m", cfg.M, "Walk period M used to infer the period")->capture_default_str();
    add_eps(classify), add_periodicity(classify), add_output(classify);

    auto* qw_spec = app.add_subcommand("qw-spectrum", "Walk quasi-energies theta(q)");
    add_walk(qw_spec), add_delta(qw_spec, "Gain/loss"), add_output(qw_spec);
    qw_spec->add_option("--nq", cfg.n_q, "q-grid points")->capture_default_str();

    auto* qw_sweep = app.add_subcommand("qw-sweep", "Walk theta over a gain/loss range");
    add_walk(qw_sweep), add_delta(qw_sweep, "lo:hi:intervals"), add_eps(qw_sweep), add_output(qw_sweep);

    auto* qw_ev = app.add_subcommand("qw-evolve", "Walk dynamics from a single pulse");
    add_walk(qw_ev), add_delta(qw_ev, "Gain/loss"), add_periodicity(qw_ev), add_output(qw_ev);
    qw_ev->add_option("--steps", cfg.steps, "Number of steps (0: 10 M)")->capture_default_str();
    qw_ev->add_option("--map-stride", cfg.map_stride, "Write every n-th step of the amplitude map")
        ->capture_default_str();

    auto* qw_flat = app.add_subcommand("qw-flatness", "Spread of theta(q) over the Brillouin zone");
    add_walk(qw_flat), add_delta(qw_flat, "Gain/loss"), add_output(qw_flat);
    qw_flat->add_option("--nq", cfg.n_q, "q-grid points")->capture_default_str();

    auto* cont = app.add_subcommand("continuum-check", "Walk vs Rice-Mele in the continuous-time limit");
    cont->add_option("--t1", cfg.t1, "Hopping t1")->capture_default_str();
    cont->add_option("--t2", cfg.t2, "Hopping t2")->capture_default_str();
    cont->add_option("--force", cfg.force, "Continuum force")->capture_default_str();
    add_delta(cont, "Gain/loss value or lo:hi:intervals"), add_theta(cont), add_eps(cont), add_output(cont);

    auto* repro = app.add_subcommand("repro", "Reproduce one figure panel set");
    repro->add_option("figure", cfg.figure, "fig1b | fig1cd | fig2b | fig2cd | fig3a | fig3bc")->required();
    add_theta(repro), add_output(repro);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    const RunResult r = run(cfg, std::cout);
    if (r.status != exit_ok) std::cerr << "bzo: " << r.message << '\n';
    return r.status;
}

}  // namespace bzo::cli
