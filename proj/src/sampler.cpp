#include "pinlab/sampler.hpp"

#include "pinlab/parallel.hpp"
#include "pinlab/random.hpp"
#include "pinlab/recursion.hpp"

#include <cmath>
#include <stdexcept>

namespace pinlab {

SuffixPartitionTable suffix_partition(const KernelCache& cache, const DisorderSample& disorder,
                                      std::int64_t N)
{
    if (N < 1 || N > cache.N || N > disorder.length())
        throw std::invalid_argument("suffix_partition: N out of range");
    auto log_xi = [&](std::int64_t n) { return n == 0 ? 0.0 : disorder.log_xi(n); };

    // Y_L = Zs[N - L] xi_{N-L} / xi_N obeys the forward recursion with weights xi_{N-L}.
    std::vector<double> w(static_cast<std::size_t>(N + 1), 0.0);
    for (std::int64_t L = 1; L <= N; ++L)
        w[static_cast<std::size_t>(L)] = log_xi(N - L);
    const auto y = log_renewal_recursion(std::span(cache.k).first(static_cast<std::size_t>(N + 1)), w);

    SuffixPartitionTable t;
    t.logZ_suffix.resize(static_cast<std::size_t>(N + 1));
    for (std::int64_t m = 0; m <= N; ++m)
        t.logZ_suffix[static_cast<std::size_t>(m)] =
            y[static_cast<std::size_t>(N - m)] + log_xi(N) - log_xi(m);
    t.logZ_suffix[static_cast<std::size_t>(N)] = 0.0;
    return t;
}

SuffixPartitionTable suffix_partition(const InterArrivalLaw& law, const DisorderSample& disorder,
                                      std::int64_t N)
{
    return suffix_partition(KernelCache(law, N), disorder, N);
}

std::vector<double> step_log_probabilities(const KernelCache& cache, const DisorderSample& disorder,
                                           const SuffixPartitionTable& suffix, std::int64_t m)
{
    const auto N = static_cast<std::int64_t>(suffix.logZ_suffix.size()) - 1;
    if (m < 0 || m >= N)
        throw std::invalid_argument("step_log_probabilities: m out of range");
    const double base = suffix.logZ_suffix[static_cast<std::size_t>(m)];
    std::vector<double> lp(static_cast<std::size_t>(N - m));
    for (std::int64_t n = 1; n <= N - m; ++n)
        lp[static_cast<std::size_t>(n - 1)] = cache.log_k[static_cast<std::size_t>(n)] +
                                              disorder.log_xi(m + n) +
                                              suffix.logZ_suffix[static_cast<std::size_t>(m + n)] - base;
    return lp;
}

ContactSet sample_path(const KernelCache& cache, const DisorderSample& disorder,
                       const SuffixPartitionTable& suffix, Xoshiro256pp& rng)
{
    const auto N = static_cast<std::int64_t>(suffix.logZ_suffix.size()) - 1;
    ContactSet out;
    out.horizon = N;
    out.points.push_back(0);
    std::int64_t m = 0;
    while (m < N) {
        const auto lp = step_log_probabilities(cache, disorder, suffix, m);
        const double u = uniform01(rng);
        double acc = 0.0;
        std::int64_t pick = 0;
        for (std::size_t i = 0; i < lp.size(); ++i) {
            if (!std::isfinite(lp[i]))
                continue;
            pick = static_cast<std::int64_t>(i) + 1;
            acc += std::exp(lp[i]);
            if (u < acc)
                break;
        }
        if (pick == 0)
            throw std::runtime_error("sample_path: no admissible step");
        m += pick;
        out.points.push_back(m);
    }
    return out;
}

std::vector<ContactSet> sample_paths(const InterArrivalLaw& law, const DisorderSample& disorder,
                                     std::int64_t N, int count, std::uint64_t seed, int threads)
{
    if (count < 1)
        throw std::invalid_argument("sample_paths: count must be >= 1");
    const KernelCache cache(law, N);
    const auto suffix = suffix_partition(cache, disorder, N);
    std::vector<ContactSet> out(static_cast<std::size_t>(count));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        Xoshiro256pp rng(stream_seed(seed, i));
        out[i] = sample_path(cache, disorder, suffix, rng);
    });
    return out;
}

ContactStatistics contact_statistics(const std::vector<ContactSet>& samples)
{
    if (samples.empty())
        throw std::invalid_argument("contact_statistics: no samples");
    const auto N = samples.front().horizon;
    if (N < 1)
        throw std::invalid_argument("contact_statistics: horizon must be >= 1");
    ContactStatistics st;
    st.profile.assign(static_cast<std::size_t>(N + 1), 0.0);
    std::vector<double> fractions;
    fractions.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.horizon != N)
            throw std::invalid_argument("contact_statistics: samples need a common horizon");
        for (auto p : s.points)
            st.profile[static_cast<std::size_t>(p)] += 1.0;
        fractions.push_back(static_cast<double>(s.points.size() - 1) / static_cast<double>(N));
    }
    const double S = static_cast<double>(samples.size());
    for (auto& p : st.profile)
        p /= S;
    double m = 0.0;
    for (double f : fractions)
        m += f;
    m /= S;
    double ss = 0.0;
    for (double f : fractions)
        ss += (f - m) * (f - m);
    st.fraction_mean = m;
    st.fraction_se = samples.size() > 1 ? std::sqrt(ss / (S - 1.0) / S) : 0.0;
    return st;
}

std::string occupation_csv(const std::vector<ContactSet>& samples)
{
    std::string out;
    for (const auto& s : samples) {
        std::string row(static_cast<std::size_t>(2 * s.horizon + 2), ',');
        for (std::int64_t n = 0; n <= s.horizon; ++n)
            row[static_cast<std::size_t>(2 * n)] = '0';
        for (auto p : s.points)
            row[static_cast<std::size_t>(2 * p)] = '1';
        row.back() = '\n';
        out += row;
    }
    return out;
}

} // namespace pinlab
