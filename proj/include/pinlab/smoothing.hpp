#pragma once

// Rare-stretch estimates and the quadratic smoothing inequality
//
//     F(beta, h) <= (1 + alpha) / beta^2 * (h - h_c(beta))^2.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinlab/kernel.hpp"
#include "pinlab/quenched.hpp"

namespace pinlab {

struct RareStretchConfig {
    std::int64_t ell = 64;
    double a = 0.9;
    double delta = 0.1;
    double beta = 1.0;
    double h = 0.0;
    int replicas = 1000; // number of blocks
    std::uint64_t seed = 1;
    std::optional<double> F_shifted; // F(beta, h + delta); estimated when empty
    std::int64_t F_N = 1024;
    int F_replicas = 100;
    double epsilon = 0.02; // finite-ell slack in the entropy floor
    int threads = 0;
};

struct RareStretchResult {
    double threshold = 0.0;       // a * ell * F(beta, h + delta)
    double F_shifted = 0.0;
    double F_shifted_std_error = 0.0;
    double p_ell = 0.0;           // naive
    double std_error = 0.0;
    int successes = 0;
    double p_is = 0.0;            // importance sampled
    double is_std_error = 0.0;
    double shifted_success = 0.0; // tilde P_ell(E_1)
    double shifted_success_std_error = 0.0;
    double entropy_floor = 0.0;   // exp(-ell delta^2 / (2 beta^2))
    double entropy_floor_slack = 0.0; // exp(-ell (delta^2 / (2 beta^2) + epsilon))
    double entropy_bound = 0.0;   // finite-ell entropy inequality with 3 sigma slack
    double mean_gap = 0.0;        // mean number of failed blocks between successes; NaN if < 2 successes
};

/// delta^2 ell / (2 beta^2).
double relative_entropy(std::int64_t ell, double delta, double beta);

/// Success probability of the block event log Z^c_ell >= a ell F(beta, h + delta).
/// Blocks are consecutive ell-stretches of one disorder stream; the importance
/// sampler shifts omega by delta / beta on its own stream and reweights.
RareStretchResult rare_stretch_prob(const InterArrivalLaw& law, const RareStretchConfig& cfg);

struct RareStretchBound {
    double value = 0.0;           // p a F(h + delta) + (p / ell) E[log K(G ell)], K(0) := 1
    double bracket = 0.0;         // p [a F(h + delta) - a^-2 delta^2 (1 + alpha) / (2 beta^2)]
    double mean_log_gap_weight = 0.0;
};

/// Lower bound on F(beta, h) from a success probability p of blocks of size ell.
RareStretchBound rare_stretch_lower_bound(const InterArrivalLaw& law, double p, std::int64_t ell,
                                          double a, double F_shifted, double delta, double beta);

enum class SmoothingVerdict { ok, violation, inconclusive };

std::string to_string(SmoothingVerdict v);

struct SmoothingRow {
    double delta = 0.0;
    double h = 0.0;
    double F_mc = 0.0;
    double std_error = 0.0;
    double delta_prime = 0.0;
    double bound = 0.0;
    SmoothingVerdict verdict = SmoothingVerdict::inconclusive;
};

struct SmoothingReport {
    double beta = 0.0;
    double alpha = 0.0;
    CriticalBracket bracket;
    std::int64_t N = 0;
    int replicas = 0;
    std::uint64_t seed = 0;
    std::vector<SmoothingRow> rows;

    int violations() const;
};

/// At h = bracket.right + delta compares the MC free energy with
/// (1 + alpha) delta'^2 / beta^2, delta' = delta + bracket width.
SmoothingReport smoothing_check(const InterArrivalLaw& law, double beta,
                                const CriticalBracket& bracket,
                                const std::vector<double>& delta_grid, std::int64_t N,
                                int replicas, std::uint64_t seed, int threads = 0);

std::string to_json(const SmoothingReport& report);

} // namespace pinlab
