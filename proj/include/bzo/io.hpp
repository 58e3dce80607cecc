#pragma once

// CSV artifacts. Numbers are printed with 17 significant digits, '.' decimal
// separator, a header row and LF line endings, so identical runs give
// byte-identical files.

#include <bzo/errors.hpp>
#include <bzo/quantum_walk.hpp>
#include <bzo/time_evolution.hpp>
#include <bzo/ws_spectrum.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bzo::io {

/// Shortest-free fixed-precision rendering: %.17g, with nan/inf spelled out.
inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return {buf, res.ptr};
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    template <class... Cols>
    void header(const Cols&... cols) {
        row_strings({std::string(cols)...});
    }
    void row(std::initializer_list<std::string> cells) { row_strings(cells); }

private:
    void row_strings(std::initializer_list<std::string> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }
    std::ostream& out_;
};

/// delta, re_theta, im_theta, re_theta_wkb, im_theta_wkb (nan when no WKB value).
inline void write_sweep_csv(std::ostream& out, const SweepCurve& curve) {
    CsvWriter w(out);
    w.header("delta", "re_theta", "im_theta", "re_theta_wkb", "im_theta_wkb");
    const double nan = std::nan("");
    for (const SweepPoint& p : curve.points) {
        const cplx wkb = p.theta_wkb.value_or(cplx{nan, nan});
        w.row({num(p.delta), num(p.theta.real()), num(p.theta.imag()), num(wkb.real()), num(wkb.imag())});
    }
}

/// Long format: t, n, sublattice, abs_normalized_amplitude.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
    CsvWriter w(out);
    w.header("t", "n", "sublattice", "abs_normalized_amplitude");
    for (std::size_t s = 0; s < tr.samples(); ++s) {
        const std::string t = num(tr.times[s]);
        const auto a = tr.abs_a_at(s);
        const auto b = tr.abs_b_at(s);
        for (std::size_t j = 0; j < tr.cells; ++j) {
            const std::string n = std::to_string(tr.first_cell + static_cast<long>(j));
            w.row({t, n, "A", num(a[j])});
            w.row({t, n, "B", num(b[j])});
        }
    }
}

/// t, A, log_amp, log_norm.
inline void write_revival_csv(std::ostream& out, const Trajectory& tr, std::span<const double> revival) {
    CsvWriter w(out);
    w.header("t", "A", "log_amp", "log_norm");
    for (std::size_t s = 0; s < tr.samples(); ++s)
        w.row({num(tr.times[s]), num(revival[s]), num(tr.log_amp[s]), num(tr.log_norm[s])});
}

/// m, n, abs_u, abs_v restricted to the light cone |n - n_start| <= 2m + 2.
inline void write_qw_trajectory_csv(std::ostream& out, const QWTrajectory& tr, long start_site = 0,
                                    std::size_t step_stride = 1) {
    if (tr.abs_u.empty()) throw ConfigError("walk trajectory was recorded without maps");
    if (step_stride == 0) step_stride = 1;
    CsvWriter w(out);
    w.header("m", "n", "abs_u", "abs_v");
    for (std::size_t s = 0; s < tr.steps.size(); s += step_stride) {
        const long m = tr.steps[s];
        const std::string ms = std::to_string(m);
        for (std::size_t i = 0; i < tr.sites; ++i) {
            const long n = tr.first_site + static_cast<long>(i);
            if (std::abs(n - start_site) > 2 * m + 2) continue;
            w.row({ms, std::to_string(n), num(tr.abs_u[s * tr.sites + i]), num(tr.abs_v[s * tr.sites + i])});
        }
    }
}

/// m, A_m, log_amp.
inline void write_qw_recurrence_csv(std::ostream& out, const QWTrajectory& tr) {
    CsvWriter w(out);
    w.header("m", "A_m", "log_amp");
    for (std::size_t s = 0; s < tr.steps.size(); ++s)
        w.row({std::to_string(tr.steps[s]), num(tr.recurrence[s]), num(tr.log_amp[s])});
}

// ---------------------------------------------------------------------------
// Reading

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ConfigError("CSV has no column '" + std::string(name) + "'");
    }
    std::vector<double> values(std::string_view name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

inline double parse_number(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("not a number in CSV: '" + std::string(s) + "'");
    return v;
}

/// Numeric CSV with a header row.
inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            cells.push_back(cell);
        }
        return cells;
    };
    if (!std::getline(in, line)) throw ConfigError("empty CSV input");
    t.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != t.columns.size()) throw ConfigError("ragged CSV row: " + line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_number(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Rebuilds a sweep from the sweep CSV schema.
inline SweepCurve sweep_from_table(const CsvTable& t) {
    SweepCurve c;
    const auto d = t.values("delta"), re = t.values("re_theta"), im = t.values("im_theta");
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i > 0 && !(d[i] > d[i - 1])) throw ConfigError("sweep deltas must be strictly increasing");
        c.points.push_back({d[i], cplx{re[i], im[i]}, std::nullopt});
    }
    return c;
}

}  // namespace bzo::io
