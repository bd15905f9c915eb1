#include "pinlab/recursion.hpp"

#include <stdexcept>

namespace pinlab {

std::vector<double> log_renewal_recursion(std::span<const double> kernel,
                                          std::span<const double> site_log_weight)
{
    if (kernel.size() != site_log_weight.size() || kernel.empty())
        throw std::invalid_argument("log_renewal_recursion: kernel and weights need N + 1 entries");
    const std::size_t N = kernel.size() - 1;
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    constexpr double rescale_above = 1e100;
    constexpr double underflow_guard = 1e-280;

    std::vector<double> log_z(N + 1, 0.0);
    std::vector<double> y(N + 1, 0.0);
    std::vector<double> terms;
    double scale = 0.0; // Z_m = y_m * exp(scale)
    y[0] = 1.0;

    for (std::size_t n = 1; n <= N; ++n) {
        const double s = reversed_dot(y.data(), kernel.data(), n);
        double log_zn;
        if (s > underflow_guard) {
            log_zn = scale + std::log(s) + site_log_weight[n];
        } else {
            terms.clear();
            for (std::size_t m = 0; m < n; ++m)
                if (kernel[n - m] > 0.0)
                    terms.push_back(log_z[m] + std::log(kernel[n - m]));
            const double lse = log_sum_exp(terms);
            log_zn = std::isfinite(lse) ? lse + site_log_weight[n] : ninf;
        }
        log_z[n] = log_zn;
        y[n] = std::isfinite(log_zn) ? std::exp(log_zn - scale) : 0.0;

        if (y[n] > rescale_above) {
            const double inv = 1.0 / y[n];
            for (std::size_t m = 0; m <= n; ++m)
                y[m] *= inv;
            scale = log_zn;
            y[n] = 1.0;
        }
    }
    return log_z;
}

double log_free_from_constrained(std::span<const double> log_zc, std::span<const double> survival)
{
    if (log_zc.empty() || survival.size() < log_zc.size())
        throw std::invalid_argument("log_free_from_constrained: size mismatch");
    const std::size_t N = log_zc.size() - 1;
    std::vector<double> terms;
    terms.reserve(N + 1);
    for (std::size_t n = 0; n <= N; ++n)
        if (survival[N - n] > 0.0)
            terms.push_back(log_zc[n] + std::log(survival[N - n]));
    return log_sum_exp(terms);
}

} // namespace pinlab
