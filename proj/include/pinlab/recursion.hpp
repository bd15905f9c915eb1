#pragma once

// Renewal convolutions shared by the homogeneous, quenched and sampler
// modules.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace pinlab {

/// sum_{m=0}^{n-1} y[m] * k[n-m], accumulated in a fixed order with four
/// partial sums. The order never depends on anything but n, which keeps the
/// result bit-reproducible.
inline double reversed_dot(const double* y, const double* k, std::size_t n)
{
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t m = 0;
    for (; m + 4 <= n; m += 4) {
        s0 += y[m] * k[n - m];
        s1 += y[m + 1] * k[n - m - 1];
        s2 += y[m + 2] * k[n - m - 2];
        s3 += y[m + 3] * k[n - m - 3];
    }
    for (; m < n; ++m)
        s0 += y[m] * k[n - m];
    return (s0 + s1) + (s2 + s3);
}

/// log(sum exp(x_i)); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs)
{
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs)
        mx = std::max(mx, x);
    if (!std::isfinite(mx))
        return mx;
    double s = 0.0;
    for (double x : xs)
        s += std::exp(x - mx);
    return mx + std::log(s);
}

/// Constrained renewal partition functions in log form:
///
///     Z_0 = 1,  Z_n = exp(w_n) * sum_{m<n} Z_m K(n-m),   n = 1..N,
///
/// where `kernel[j]` = K(j) (kernel[0] ignored) and `site_log_weight[n]` = w_n
/// (entry 0 ignored). Both spans need N + 1 entries.
///
/// Values are carried as y_m = Z_m exp(-A) with a common scale A that is
/// raised whenever a new value exceeds 1e100, so the inner loop is a plain
/// dot product. Entries that fall below the double range relative to the
/// running maximum are negligible in every later sum. If a sum underflows
/// (possible for kernels with gaps) the step is redone as an exact
/// log-sum-exp.
std::vector<double> log_renewal_recursion(std::span<const double> kernel,
                                          std::span<const double> site_log_weight);

/// log Z^f_N = log sum_{n=0}^{N} Z^c_n * survival[N-n], for the last N only.
double log_free_from_constrained(std::span<const double> log_zc, std::span<const double> survival);

} // namespace pinlab
