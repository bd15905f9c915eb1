#pragma once

// Inter-arrival laws of discrete renewal processes and the renewal-theory
// primitives built on them.
//
// A law is stored as an exact table K(1..n_table) followed by an analytic
// tail
//
//     K(n) = period * cK * n^-(1+alpha) * exp(-decay * n),   n > n_table, period | n,
//
// and zero elsewhere. cK is the density constant of the tail (for period-2
// laws such as the simple random walk it is half of the constant on the even
// sublattice). Laws without a tail have cK == 0. Infinite sums over the tail
// are evaluated by Euler-Maclaurin summation with an explicit remainder
// bound, so every reported mass carries a certified error.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinlab/random.hpp"

namespace pinlab {

/// A sum together with an upper bound on its absolute error.
struct TailSum {
    double value = 0.0;
    double error = 0.0;

    /// value + error, nudged up by a relative ulp-scale margin.
    double upper() const;
};

/// Upper incomplete gamma Gamma(a, z) for real a (any sign) and z > 0.
double upper_incomplete_gamma(double a, double z);

/// Sum over n >= n0 of n^-s exp(-b n). Requires s > 1 when b == 0.
/// Returns +inf when the series diverges.
TailSum power_exp_sum(double s, double b, std::int64_t n0);

struct InterArrivalLaw {
    double alpha = 0.0;
    double cK = 0.0;
    int period = 1;
    double decay = 0.0;
    std::vector<double> table; // table[i] = K(i + 1)
    double k_infinity = 0.0;
    double total_mass = 0.0;
    /// |table[n_table] - tail(n_table)| / tail(n_table); 0 when not applicable.
    double junction_mismatch = 0.0;

    std::int64_t n_table() const { return static_cast<std::int64_t>(table.size()); }
    bool has_tail() const { return cK > 0.0; }
    bool persistent() const;

    /// K(n); zero for n <= 0.
    double K(std::int64_t n) const;
    double log_K(std::int64_t n) const;

    /// K(0..n) with K(0) = 0.
    std::vector<double> weights(std::int64_t n) const;

    /// P(tau_1 > m) for m = 0..n, including the terminating mass K(inf).
    std::vector<double> survival(std::int64_t n) const;
};

/// Sum over n >= from of n^weight_power * K(n)^gamma * exp(-extra_decay * n).
TailSum moment_sum(const InterArrivalLaw& law, double gamma = 1.0, double weight_power = 0.0,
                   double extra_decay = 0.0, std::int64_t from = 1);

/// K(n) = c / n^(1+alpha) for every n >= 1, c fixed by total mass 1 - k_infinity.
InterArrivalLaw make_power_law(double alpha, double k_infinity, std::int64_t n_table,
                               double tail_tol = 1e-12);

/// Finite-support law; `table[i]` = K(i+1).
InterArrivalLaw make_explicit(std::vector<double> table, double k_infinity);

/// Return time to 0 of the simple random walk: exact first-return
/// probabilities up to n_table, period-2 power tail beyond, renormalized so
/// the law is persistent.
InterArrivalLaw make_srw_law(std::int64_t n_table, double tail_tol = 1e-12);

struct PersistentizedLaw {
    InterArrivalLaw law;
    double h_shift = 0.0;
    bool was_persistent = false;
};

/// K(n) / (1 - K(inf)) together with h_shift = log(1 - K(inf)).
PersistentizedLaw persistentize(const InterArrivalLaw& law);

/// n -> exp(h - b n) K(n). Throws if the resulting mass exceeds 1.
InterArrivalLaw tilt(const InterArrivalLaw& law, double h, double b);

struct RenewalFunctionTable {
    std::vector<double> u; // u[n] = P(n in tau), n = 0..N
};

RenewalFunctionTable renewal_function(const InterArrivalLaw& law, std::int64_t N);

/// E[tau_1]; nullopt when infinite.
std::optional<double> mean_interarrival(const InterArrivalLaw& law);

struct ContactSet {
    std::vector<std::int64_t> points; // strictly increasing, starts at 0
    std::int64_t horizon = 0;
};

/// Inverse-CDF sampler for renewal trajectories on [0, N].
class RenewalSampler {
public:
    RenewalSampler(const InterArrivalLaw& law, std::int64_t horizon);

    ContactSet sample(Xoshiro256pp& rng) const;

    /// Smallest n with CDF(n) >= u, or 0 if u exceeds the mass up to `limit`.
    std::int64_t draw_increment(double u, std::int64_t limit) const;

private:
    std::vector<double> cdf_; // cdf_[n] = P(tau_1 <= n)
    std::int64_t horizon_;
};

ContactSet sample_renewal(const InterArrivalLaw& law, std::int64_t N, std::uint64_t seed);

struct IntersectionStats {
    std::vector<double> partial;       // partial[n] = sum_{m=1}^{n} u_m^2
    std::optional<double> gamma2;      // extrapolated limit when finite
    std::optional<double> gamma2_leading; // same, tail from the leading asymptotic constant
    bool divergent = false;
    double growth_exponent = 0.0; // s_N ~ C N^exponent when divergent (0 = logarithmic)
    double growth_constant = 0.0;
};

/// Statistics of tau intersected with an independent copy: P(n in tau & tau')
/// = u_n^2. Requires a persistent law.
IntersectionStats intersection_stats(const InterArrivalLaw& law, std::int64_t N);

/// Key-value text block; round-trips exactly.
std::string to_text(const InterArrivalLaw& law);
InterArrivalLaw law_from_text(std::string_view text);

} // namespace pinlab
