#pragma once

// Continuous-time two-band non-Hermitian lattices with balanced gain/loss.
//
// Fourier convention used throughout: a_n ~ exp(i k n). A term c exp(-i k d)
// in H12(k) couples a_n to b_{n-d}.

#include <bzo/errors.hpp>
#include <bzo/mat2.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bzo {

enum class ModelKind {
    Model1,    ///< H12 = H21 = t2 + 2 t1 cos k (dimers with symmetric cross-cell hopping)
    RiceMele,  ///< H12 = t2 + t1 exp(-ik), H21 = conj(H12)
};

inline std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::Model1 ? "model1" : "rice-mele";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "model1" || s == "Model1" || s == "m1") return ModelKind::Model1;
    if (s == "rice-mele" || s == "RiceMele" || s == "rice_mele" || s == "rm") return ModelKind::RiceMele;
    return std::nullopt;
}

struct ModelSpec {
    ModelKind kind{ModelKind::Model1};
    double t1{0.2};
    double t2{1.0};
    double delta{0.0};

    /// Throws ConfigError on negative or non-finite parameters.
    void validate() const {
        if (!std::isfinite(t1) || !std::isfinite(t2) || !std::isfinite(delta))
            throw ConfigError("model parameters must be finite");
        if (t1 < 0.0 || t2 < 0.0 || delta < 0.0)
            throw ConfigError("model parameters t1, t2, delta must be non-negative");
    }

    /// Soft diagnostics; never fatal.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (kind == ModelKind::Model1 && !(t2 > 2.0 * t1 && t1 > 0.0))
            out.emplace_back("model1 outside the regime t2 > 2 t1 > 0");
        return out;
    }

    ModelSpec with_delta(double d) const {
        ModelSpec m = *this;
        m.delta = d;
        return m;
    }
};

using BlochMatrix = Mat2;

inline BlochMatrix bloch_hamiltonian(const ModelSpec& model, double k) {
    const cplx gain{0.0, model.delta};
    cplx h12, h21;
    switch (model.kind) {
        case ModelKind::Model1:
            h12 = h21 = cplx{model.t2 + 2.0 * model.t1 * std::cos(k)};
            break;
        case ModelKind::RiceMele: {
            const double c = std::cos(k), s = std::sin(k);
            h12 = cplx{model.t2 + model.t1 * c, -model.t1 * s};
            h21 = std::conj(h12);
            break;
        }
    }
    return {gain, h12, h21, -gain};
}

/// Radicand of the band energies, H11^2 + H12 H21.
inline cplx dispersion_radicand(const ModelSpec& model, double k) {
    const BlochMatrix h = bloch_hamiltonian(model, k);
    return h.m11 * h.m11 + h.m12 * h.m21;
}

/// Band energies (E+, E-) with E+ the principal square root and E- = -E+.
inline std::pair<cplx, cplx> dispersion(const ModelSpec& model, double k) {
    const cplx e = std::sqrt(dispersion_radicand(model, k));
    return {e, -e};
}

/// Gain/loss rate above which the unforced lattice has complex bands.
inline double pt_threshold(const ModelSpec& model) {
    switch (model.kind) {
        case ModelKind::Model1: return std::max(model.t2 - 2.0 * model.t1, 0.0);
        case ModelKind::RiceMele: return std::abs(model.t2 - model.t1);
    }
    return 0.0;
}

/// Largest |E+(k)| of the Hermitian (delta = 0) bands: the sizing scale for dynamics.
inline double hermitian_band_top(const ModelSpec& model) {
    return model.t2 + (model.kind == ModelKind::Model1 ? 2.0 : 1.0) * model.t1;
}

/// Real-space Hamiltonian with a linear force ramp, on interleaved sites
/// (a_0, b_0, a_1, b_1, ...). Cell j carries the potential F (j + n0).
class RealSpaceOperator {
public:
    struct Coupling {
        std::size_t row;
        std::size_t col;
        cplx value;
    };

    RealSpaceOperator(const ModelSpec& model, double force, std::size_t cells, long cell_offset,
                      bool periodic = false)
        : model_(model), force_(force), cells_(cells), offset_(cell_offset), periodic_(periodic) {
        model.validate();
        if (cells < 3) throw ConfigError("real-space operator needs at least 3 cells");
        if (!std::isfinite(force) || force < 0.0) throw ConfigError("force must be finite and >= 0");
        build();
    }

    /// Centered ramp: n0 = -N/2.
    static RealSpaceOperator centered(const ModelSpec& model, double force, std::size_t cells) {
        return {model, force, cells, -static_cast<long>(cells / 2)};
    }

    std::size_t cells() const { return cells_; }
    std::size_t dim() const { return 2 * cells_; }
    double force() const { return force_; }
    long cell_offset() const { return offset_; }
    bool periodic() const { return periodic_; }
    const ModelSpec& model() const { return model_; }
    std::span<const cplx> diagonal() const { return diag_; }
    std::span<const Coupling> couplings() const { return hops_; }

    /// out = H in. Spans must have length dim() and must not alias.
    void apply(std::span<const cplx> in, std::span<cplx> out) const {
        for (std::size_t i = 0; i < diag_.size(); ++i) out[i] = diag_[i] * in[i];
        for (const Coupling& c : hops_) out[c.row] += c.value * in[c.col];
    }

    /// Bound on the spectral radius (Gershgorin).
    double spectral_radius_bound() const {
        std::vector<double> row(diag_.size());
        for (std::size_t i = 0; i < diag_.size(); ++i) row[i] = std::abs(diag_[i]);
        for (const Coupling& c : hops_) row[c.row] += std::abs(c.value);
        double r = 0.0;
        for (double v : row) r = std::max(r, v);
        return r;
    }

    Eigen::MatrixXcd to_dense() const {
        const auto n = static_cast<Eigen::Index>(dim());
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t i = 0; i < diag_.size(); ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag_[i];
        for (const Coupling& c : hops_)
            h(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col)) += c.value;
        return h;
    }

private:
    void build() {
        diag_.resize(dim());
        for (std::size_t j = 0; j < cells_; ++j) {
            const double ramp = force_ * static_cast<double>(static_cast<long>(j) + offset_);
            diag_[2 * j] = cplx{ramp, model_.delta};
            diag_[2 * j + 1] = cplx{ramp, -model_.delta};
        }
        const auto a = [](std::size_t j) { return 2 * j; };
        const auto b = [](std::size_t j) { return 2 * j + 1; };
        // a_j couples to b_{j-d} with amplitude c (and b_{j-d} back to a_j with
        // the H21 amplitude) for every term c exp(-ikd) in H12.
        auto link = [&](std::size_t j, long d, cplx to_b, cplx to_a) {
            long target = static_cast<long>(j) - d;
            if (target < 0 || target >= static_cast<long>(cells_)) {
                if (!periodic_) return;
                target = (target + static_cast<long>(cells_)) % static_cast<long>(cells_);
            }
            const auto t = static_cast<std::size_t>(target);
            hops_.push_back({a(j), b(t), to_b});
            hops_.push_back({b(t), a(j), to_a});
        };
        const cplx t1{model_.t1}, t2{model_.t2};
        for (std::size_t j = 0; j < cells_; ++j) {
            link(j, 0, t2, t2);
            switch (model_.kind) {
                case ModelKind::Model1:
                    link(j, 1, t1, t1);
                    link(j, -1, t1, t1);
                    break;
                case ModelKind::RiceMele:
                    link(j, 1, t1, t1);
                    break;
            }
        }
    }

    ModelSpec model_;
    double force_;
    std::size_t cells_;
    long offset_;
    bool periodic_;
    std::vector<cplx> diag_;
    std::vector<Coupling> hops_;
};

/// Free-function form used by the spectral and dynamical modules.
inline RealSpaceOperator real_space_hamiltonian(const ModelSpec& model, double force, std::size_t cells,
                                                long cell_offset) {
    return {model, force, cells, cell_offset};
}

}  // namespace bzo
