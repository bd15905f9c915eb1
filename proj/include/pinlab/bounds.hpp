#pragma once

// Fractional-moment delocalization certificates.
//
// With A_N = E[(Z^c_N)^gamma] and the renewal inequality
//
//     A_N <= E[xi^gamma] sum_{n >= k} A_{N-n} sum_{j < k} K(n-j)^gamma A_j,
//
// rho <= 1 forces A_N to stay bounded, hence F(beta, h) = 0.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinlab/kernel.hpp"
#include "pinlab/quenched.hpp"

namespace pinlab {

inline constexpr double certificate_margin = 1e-9;

/// E[xi^gamma] = exp(gamma h + gamma^2 beta^2 / 2).
double xi_moment(double beta, double h, double gamma);

/// S[r] = sum_{m >= r} K(m)^gamma for r = 1..k (S[0] unused), rounded up.
std::vector<double> fractional_tail_sums(const InterArrivalLaw& law, double gamma, std::int64_t k);

enum class CertificateKind { simple, iterated, shifted };
enum class CertificateGrade { rigorous, statistical };
enum class Verdict { certified_delocalized, inconclusive };

std::string to_string(CertificateKind kind);
std::string to_string(CertificateGrade grade);
std::string to_string(Verdict verdict);

struct MomentEvidence {
    std::int64_t j = 0;
    double mc = 0.0;
    double mc_std_error = 0.0;
    double annealed = 0.0;
    std::optional<double> shifted;
    double used = 0.0;         // value entering rho
    double contribution = 0.0; // E[xi^gamma] * used * S[k - j]
};

struct DecayCheck {
    std::int64_t N = 0;
    double mc = 0.0;
    double mc_std_error = 0.0;
    double ratio = 0.0; // mc / K(N)^gamma
    bool below_max = false; // mc - 3 se <= max_{j<k} used
};

struct Certificate {
    CertificateKind kind = CertificateKind::simple;
    CertificateGrade grade = CertificateGrade::rigorous;
    double gamma = 0.0;
    std::int64_t k = 1;
    double rho = 0.0;
    Verdict verdict = Verdict::inconclusive;
    double beta = 0.0;
    double h = 0.0;
    InterArrivalLaw law;
    double xi_moment = 0.0;
    int replicas = 0;
    std::uint64_t seed = 0;
    std::vector<MomentEvidence> evidence;
    std::int64_t dominant_j_lo = 0; // smallest j-window carrying 90% of rho
    std::int64_t dominant_j_hi = 0;
    std::vector<DecayCheck> decay;

    bool certified() const { return verdict == Verdict::certified_delocalized; }
};

/// rho = E[xi^gamma] sum_n K(n)^gamma. Requires (1 + alpha) gamma > 1 for laws with a tail.
Certificate simple_certificate(const InterArrivalLaw& law, double beta, double h, double gamma);

/// Largest h the simple certificate accepts at this gamma.
double simple_certified_h(const InterArrivalLaw& law, double beta, double gamma);

struct MomentTable {
    std::vector<double> mean;      // j = 0..jmax
    std::vector<double> std_error;
    std::vector<double> annealed;  // (E Z^c_j)^gamma
};

/// Monte Carlo A_j = E[(Z^c_j)^gamma] for j = 0..jmax from one set of replicas.
MomentTable fm_moments(const InterArrivalLaw& law, double beta, double h, double gamma,
                       std::int64_t jmax, int replicas, std::uint64_t seed, int threads = 0);

struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double annealed_bound = 0.0;
};

MomentEstimate fm_moment_mc(const InterArrivalLaw& law, double beta, double h, double gamma,
                            std::int64_t j, int replicas, std::uint64_t seed, int threads = 0);

/// Hoelder bound on A_j after shifting omega_1..omega_k by -sqrt(a) beta:
/// (E' Z^c_j)^gamma exp(gamma / (1 - gamma) a beta^2 k), with h = hc_ann(beta) + delta.
double shifted_bound(const InterArrivalLaw& law, double beta, double delta, double gamma, double a,
                     std::int64_t j, std::int64_t k);

/// round(1 / F(0, delta)); throws when F(0, delta) = 0.
std::int64_t correlation_scale(const InterArrivalLaw& law, double delta);

struct IteratedOptions {
    int replicas = 200;
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<double> shift_a = {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
    int decay_replicas = 0; // 0: replicas / 10, at least 20
    bool decay_check = true;
    std::int64_t max_k = 1 << 14;
};

struct IteratedCertificates {
    Certificate statistical; // A_j = MC + 3 sigma
    Certificate rigorous;    // A_j = min(annealed, shifted)
};

IteratedCertificates iterated_certificate(const InterArrivalLaw& law, double beta, double h,
                                          double gamma, std::int64_t k,
                                          const IteratedOptions& opt = {});

struct SearchOptions {
    std::vector<double> gamma_grid = {0.6, 0.7, 0.8, 0.9};
    std::int64_t max_k = 4096;
    IteratedOptions iterated;
};

struct SearchResult {
    std::optional<Certificate> best_statistical;
    std::optional<Certificate> best_rigorous;
    std::vector<Certificate> candidates; // every (gamma, k, grade) tried
};

/// Grid search over gamma in gamma_grid and (1/(1+alpha), 1), and k = 1, 2, 4, ... up to
/// min(max_k, 1/F(0, h - hc_ann)). Candidates reuse one Monte Carlo table per gamma.
SearchResult search_certificate(const InterArrivalLaw& law, double beta, double h,
                                const SearchOptions& opt = {});

/// Throws CertificateContradiction when a certified point has MC free energy above 3 sigma.
void check_consistency(const Certificate& cert, const FreeEnergyEstimate& estimate);

/// Full certificate record, including the law and the evidence table.
std::string to_json(const Certificate& cert);

} // namespace pinlab
