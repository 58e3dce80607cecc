#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace bzo::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;

/// Everything one invocation needs. Zero-valued numerics mean "resolve a default".
struct RunConfig {
    std::string command;
    std::string figure;  ///< repro preset

    // continuous-time model
    std::string model{"model1"};
    double t1{0.2};
    double t2{1.0};
    std::string delta{"0"};  ///< value or lo:hi:intervals
    double force{0.2};

    // walk
    std::string beta1{"pi/2-0.1"};
    std::string beta2{"pi/2-0.15"};
    long M{61};
    long steps{0};  ///< m_end; 0 -> 10 M

    // numerics
    std::size_t n_k{4096};
    bool no_refine{false};
    double theta_tol{1e-9};
    std::size_t wkb_n_k{4096};
    std::size_t cells{0};        ///< evolution lattice; 0 -> auto
    std::size_t diag_cells{200};
    std::size_t diag_cap{2000};
    double eps_floor{1e-6};
    std::size_t n_q{64};

    // evolution
    double periods{10.0};
    double dt{0.0};
    std::size_t samples_per_period{128};
    double transient_periods{3.0};
    double periodic_tol{0.05};
    long revival_offset{0};
    std::size_t map_stride{1};

    // classify
    std::string input;
    std::string kind{"sweep"};  ///< sweep | series
    double period{0.0};         ///< series period; 0 -> 2 pi / force
    double transient{-1.0};     ///< series transient; < 0 -> transient_periods * period
    std::size_t min_samples_per_period{64};

    // output
    std::string out_dir{"bzo-out"};
    unsigned threads{0};
};

struct RunResult {
    int status{exit_ok};
    std::string message;
    std::vector<std::string> outputs;  ///< paths written, manifest last
};

/// Executes one command. Never throws: configuration problems give exit_config,
/// numerical guard trips give exit_numerical.
RunResult run(const RunConfig& config, std::ostream& log);

/// Parses argv (CLI11, with optional --config file) and runs.
int main_entry(int argc, char** argv);

std::string sha256_hex(const std::string& bytes);

}  // namespace bzo::cli
