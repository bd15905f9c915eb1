#pragma once

// Quenched partition functions and Monte Carlo diagnostics for Gaussian
// charges: xi_n = exp(beta * omega_n + h).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinlab/homogeneous.hpp"
#include "pinlab/kernel.hpp"

namespace pinlab {

struct DisorderSample {
    double beta = 0.0;
    double h = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> omega; // omega[n - 1] = omega_n

    std::int64_t length() const { return static_cast<std::int64_t>(omega.size()); }
    double log_xi(std::int64_t n) const { return beta * omega[static_cast<std::size_t>(n - 1)] + h; }
};

/// N standard Gaussians from GaussianStream(seed).
DisorderSample sample_disorder(std::uint64_t seed, std::int64_t N, double beta, double h);

/// Law values tabulated once for repeated partition computations up to N.
struct KernelCache {
    KernelCache(const InterArrivalLaw& law, std::int64_t N);

    std::int64_t N;
    std::vector<double> k;    // K(0..N)
    std::vector<double> kbar; // P(tau_1 > m), m = 0..N
    std::vector<double> log_k;
};

struct LogPartitionTable {
    std::vector<double> logZc; // n = 0..N
    double logZf = 0.0;
};

LogPartitionTable log_partition(const KernelCache& cache, const DisorderSample& disorder,
                                std::int64_t N);
LogPartitionTable log_partition(const InterArrivalLaw& law, const DisorderSample& disorder,
                                std::int64_t N);

struct FreeEnergyEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t N = 0;
    int replicas = 0;
    double lower_bound_certified = 0.0;
};

/// Replica r uses the disorder seed stream_seed(seed, r).
FreeEnergyEstimate free_energy_mc(const InterArrivalLaw& law, double beta, double h,
                                  std::int64_t N, int replicas, std::uint64_t seed,
                                  int threads = 0);

struct AnnealedReference {
    double F_ann = 0.0;
    double hc_ann = 0.0;
};

AnnealedReference annealed_reference(const InterArrivalLaw& law, double beta, double h);

/// E^{x2}[exp(coupling * |tau cap tau' cap [1, N]|)] for two independent copies
/// of the law's renewal, computed exactly from u_n^2 by a positive expansion.
double overlap_moment(const InterArrivalLaw& law, double coupling, std::int64_t N);

struct VarianceReport {
    double beta = 0.0;
    std::int64_t N = 0;
    int replicas = 0;
    double mc_mean = 0.0;
    double mc_variance = 0.0;
    double mc_std_error = 0.0;
    double exact_variance = 0.0; // at this N
    std::optional<double> gamma2;
    std::optional<double> beta0;
    std::optional<double> analytic_limit;
    bool divergent = false;
};

/// Variance of Z^f_N at h = hc_ann(beta) for a persistent law.
VarianceReport variance_at_annealed_critical(const InterArrivalLaw& law, double beta,
                                             std::int64_t N, int replicas, std::uint64_t seed,
                                             int threads = 0);

struct SecondMomentReport {
    double beta = 0.0;
    double delta = 0.0;
    double q = 0.0;
    double epsilon = 0.0;
    int replicas = 0;
    std::int64_t N0 = 0;
    double F_delta = 0.0;
    double mean_Z = 0.0;          // exact E Z^f_{N0}
    double mc_mean_Z = 0.0;
    double mc_ratio = 0.0;        // var(Z^f) / (E Z^f)^2
    double mc_ratio_std_error = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
    double bound = 0.0;           // T1 * T2
    double prob_above = 0.0;      // P(Z^f >= (1 - epsilon) E Z^f)
};

/// Second-moment diagnostics on the correlation-length scale N0 = q / F(0, delta).
SecondMomentReport second_moment_window(const InterArrivalLaw& law, double beta, double delta,
                                        double q, int replicas, std::uint64_t seed,
                                        double epsilon = 0.1, int threads = 0);

struct FlnoPrediction {
    double F0 = 0.0;
    double dF = 0.0;
    double prediction = 0.0; // F0 - (e^{beta^2} - 1)/2 dF^2
    double simplified = 0.0; // F0 - (beta^2 / 2) dF^2
};

/// Second-order prediction for F(beta, hc_ann(beta) + delta).
FlnoPrediction flno_prediction(const InterArrivalLaw& law, double beta, double delta);

struct ScanRow {
    double h = 0.0;
    double mean_log_z = 0.0;
    double std_error = 0.0; // of the mean
    bool localized = false;
};

struct CriticalBracket {
    double left = 0.0;
    std::optional<double> right; // empty: one-sided
    double hc_ann = 0.0;
    double hc0 = 0.0;

    double width() const { return right ? *right - left : 0.0; }
};

struct ScanResult {
    std::vector<ScanRow> rows;
    CriticalBracket bracket;
};

/// Right end: smallest grid h where mean log Z^c_N > threshold_sigmas * std error,
/// clipped at hc0. Left end: hc_ann, raised to certified_left when given.
ScanResult critical_scan(const InterArrivalLaw& law, double beta, const std::vector<double>& h_grid,
                         std::int64_t N, int replicas, double threshold_sigmas, std::uint64_t seed,
                         std::optional<double> certified_left = std::nullopt, int threads = 0);

std::string to_csv(const std::vector<ScanRow>& rows);

} // namespace pinlab
