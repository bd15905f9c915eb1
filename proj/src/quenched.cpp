#include "pinlab/quenched.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/kv.hpp"
#include "pinlab/parallel.hpp"
#include "pinlab/random.hpp"
#include "pinlab/recursion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pinlab {

namespace {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs)
{
    const double n = static_cast<double>(xs.size());
    double m = 0.0;
    for (double x : xs)
        m += x;
    m /= n;
    double ss = 0.0;
    for (double x : xs)
        ss += (x - m) * (x - m);
    const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {m, sd / std::sqrt(n)};
}

// Sample variance of exp(l_i) and its standard error, evaluated relative to
// max l_i. Returned values are scaled by exp(-2 * shift) when shift != 0.
struct VarianceEstimate {
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
};

VarianceEstimate variance_of_exp(const std::vector<double>& logs, double shift)
{
    const double R = static_cast<double>(logs.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (double l : logs)
        mx = std::max(mx, l);
    std::vector<double> y(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i)
        y[i] = std::exp(logs[i] - mx);
    double m = 0.0;
    for (double v : y)
        m += v;
    m /= R;
    double m2 = 0.0, m4 = 0.0;
    for (double v : y) {
        const double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double var = m2 / (R - 1.0);
    m4 /= R;
    const double se2 = std::max(0.0, (m4 - (R - 3.0) / (R - 1.0) * var * var) / R);
    const double scale = std::exp(mx - shift);
    return {m * scale, var * scale * scale, std::sqrt(se2) * scale * scale};
}

} // namespace

DisorderSample sample_disorder(std::uint64_t seed, std::int64_t N, double beta, double h)
{
    if (N < 1)
        throw std::invalid_argument("sample_disorder: N must be >= 1");
    DisorderSample d;
    d.beta = beta;
    d.h = h;
    d.seed = seed;
    d.omega.resize(static_cast<std::size_t>(N));
    GaussianStream g(seed);
    for (auto& w : d.omega)
        w = g();
    return d;
}

KernelCache::KernelCache(const InterArrivalLaw& law, std::int64_t n)
    : N(n), k(law.weights(n)), kbar(law.survival(n)), log_k(static_cast<std::size_t>(n + 1))
{
    for (std::int64_t j = 0; j <= n; ++j)
        log_k[static_cast<std::size_t>(j)] = law.log_K(j);
}

LogPartitionTable log_partition(const KernelCache& cache, const DisorderSample& disorder,
                                std::int64_t N)
{
    if (N < 1 || N > cache.N || N > disorder.length())
        throw std::invalid_argument("log_partition: N out of range");
    std::vector<double> w(static_cast<std::size_t>(N + 1), 0.0);
    for (std::int64_t n = 1; n <= N; ++n)
        w[static_cast<std::size_t>(n)] = disorder.log_xi(n);
    LogPartitionTable t;
    t.logZc = log_renewal_recursion(std::span(cache.k).first(static_cast<std::size_t>(N + 1)), w);
    t.logZf = log_free_from_constrained(t.logZc, cache.kbar);
    return t;
}

LogPartitionTable log_partition(const InterArrivalLaw& law, const DisorderSample& disorder,
                                std::int64_t N)
{
    return log_partition(KernelCache(law, N), disorder, N);
}

FreeEnergyEstimate free_energy_mc(const InterArrivalLaw& law, double beta, double h,
                                  std::int64_t N, int replicas, std::uint64_t seed, int threads)
{
    if (replicas < 2)
        throw std::invalid_argument("free_energy_mc: replicas must be >= 2");
    if (N < 1)
        throw std::invalid_argument("free_energy_mc: N must be >= 1");
    const KernelCache cache(law, N);

    std::vector<std::int64_t> sizes;
    for (std::int64_t s : {N / 8, N / 4, N / 2, N})
        if (s >= 1 && (sizes.empty() || sizes.back() != s))
            sizes.push_back(s);

    const int runs = beta == 0.0 ? 1 : replicas;
    std::vector<std::vector<double>> values(sizes.size(), std::vector<double>(runs));
    parallel_for(static_cast<std::size_t>(runs), threads, [&](std::size_t r) {
        const auto d = sample_disorder(stream_seed(seed, r), N, beta, h);
        const auto t = log_partition(cache, d, N);
        for (std::size_t i = 0; i < sizes.size(); ++i)
            values[i][r] = t.logZc[static_cast<std::size_t>(sizes[i])];
    });

    FreeEnergyEstimate est;
    est.N = N;
    est.replicas = replicas;
    est.lower_bound_certified = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto ms = mean_se(values[i]);
        const double n = static_cast<double>(sizes[i]);
        est.lower_bound_certified = std::max(est.lower_bound_certified, (ms.mean - 3.0 * ms.se) / n);
        if (sizes[i] == N) {
            est.value = ms.mean / n;
            est.std_error = ms.se / n;
        }
    }
    return est;
}

AnnealedReference annealed_reference(const InterArrivalLaw& law, double beta, double h)
{
    return {free_energy(law, h + 0.5 * beta * beta).b, hc0(law) - 0.5 * beta * beta};
}

double overlap_moment(const InterArrivalLaw& law, double coupling, std::int64_t N)
{
    if (coupling < 0.0)
        throw std::invalid_argument("overlap_moment: coupling must be >= 0");
    if (N < 0)
        throw std::invalid_argument("overlap_moment: N must be >= 0");
    if (coupling == 0.0 || N == 0)
        return 1.0;
    // sum over A in [1, N] of (e^c - 1)^|A| P(A in tau cap tau')
    auto v = renewal_function(law, N).u;
    for (auto& x : v)
        x *= x;
    v[0] = 0.0;
    const std::vector<double> w(v.size(), std::log(std::expm1(coupling)));
    const auto log_w = log_renewal_recursion(v, w);
    return std::exp(log_sum_exp(log_w));
}

VarianceReport variance_at_annealed_critical(const InterArrivalLaw& law, double beta,
                                             std::int64_t N, int replicas, std::uint64_t seed,
                                             int threads)
{
    if (!law.persistent())
        throw std::invalid_argument(
            "variance_at_annealed_critical: law must be persistent (apply persistentize first)");
    if (replicas < 4)
        throw std::invalid_argument("variance_at_annealed_critical: replicas must be >= 4");
    VarianceReport rep;
    rep.beta = beta;
    rep.N = N;
    rep.replicas = replicas;
    const double h = hc0(law) - 0.5 * beta * beta;

    if (beta == 0.0) {
        rep.mc_mean = 1.0;
    } else {
        const KernelCache cache(law, N);
        std::vector<double> logs(static_cast<std::size_t>(replicas));
        parallel_for(logs.size(), threads, [&](std::size_t r) {
            const auto d = sample_disorder(stream_seed(seed, r), N, beta, h);
            logs[r] = log_partition(cache, d, N).logZf;
        });
        const auto v = variance_of_exp(logs, 0.0);
        rep.mc_mean = v.mean;
        rep.mc_variance = v.variance;
        rep.mc_std_error = v.std_error;
    }
    rep.exact_variance = overlap_moment(law, beta * beta, N) - 1.0;

    const auto stats = intersection_stats(law, N);
    if (stats.gamma2) {
        const double g2 = *stats.gamma2;
        rep.gamma2 = g2;
        rep.beta0 = std::sqrt(std::log((1.0 + g2) / g2));
        if (beta < *rep.beta0) {
            const double p2 = 1.0 / (1.0 + g2);
            rep.analytic_limit = p2 / (1.0 - (1.0 - p2) * std::exp(beta * beta)) - 1.0;
        } else {
            rep.divergent = true;
        }
    } else {
        rep.divergent = true;
    }
    return rep;
}

SecondMomentReport second_moment_window(const InterArrivalLaw& law, double beta, double delta,
                                        double q, int replicas, std::uint64_t seed,
                                        double epsilon, int threads)
{
    if (!(delta > 0.0))
        throw std::invalid_argument("second_moment_window: delta must be > 0");
    if (!(q > 0.0))
        throw std::invalid_argument("second_moment_window: q must be > 0");
    if (replicas < 4)
        throw std::invalid_argument("second_moment_window: replicas must be >= 4");
    const auto base = persistentize(law).law;
    SecondMomentReport rep;
    rep.beta = beta;
    rep.delta = delta;
    rep.q = q;
    rep.epsilon = epsilon;
    rep.replicas = replicas;
    rep.F_delta = free_energy(base, delta).b;
    if (!(rep.F_delta > 0.0))
        throw std::invalid_argument("second_moment_window: F(0, delta) = 0");
    const double n0 = std::round(q / rep.F_delta);
    constexpr double max_n0 = 1 << 15;
    if (n0 > max_n0)
        throw ResourceLimit("second_moment_window: N0 = " + kv::format_double(n0) +
                            " exceeds 32768");
    rep.N0 = std::max<std::int64_t>(1, static_cast<std::int64_t>(n0));

    const double log_mean = log_free_partition(base, delta, rep.N0);
    rep.mean_Z = std::exp(log_mean);

    const double h = delta - 0.5 * beta * beta;
    const KernelCache cache(base, rep.N0);
    std::vector<double> logs(static_cast<std::size_t>(replicas));
    parallel_for(logs.size(), threads, [&](std::size_t r) {
        const auto d = sample_disorder(stream_seed(seed, r), rep.N0, beta, h);
        logs[r] = log_partition(cache, d, rep.N0).logZf;
    });
    const auto v = variance_of_exp(logs, log_mean);
    rep.mc_mean_Z = v.mean * rep.mean_Z;
    rep.mc_ratio = v.variance;
    rep.mc_ratio_std_error = v.std_error;
    const double threshold = std::log1p(-epsilon) + log_mean;
    int above = 0;
    for (double l : logs)
        if (l >= threshold)
            ++above;
    rep.prob_above = static_cast<double>(above) / replicas;

    rep.T1 = std::exp(log_free_partition(base, 2.0 * delta, rep.N0));
    rep.T2 = std::sqrt(std::max(0.0, overlap_moment(base, 2.0 * beta * beta, rep.N0) - 1.0));
    rep.bound = rep.T1 * rep.T2;
    return rep;
}

FlnoPrediction flno_prediction(const InterArrivalLaw& law, double beta, double delta)
{
    if (!(delta > 0.0))
        throw std::invalid_argument("flno_prediction: delta must be > 0");
    const double h = hc0(law) + delta;
    FlnoPrediction p;
    p.F0 = free_energy(law, h).b;
    p.dF = contact_fraction(law, h).value;
    p.prediction = p.F0 - 0.5 * std::expm1(beta * beta) * p.dF * p.dF;
    p.simplified = p.F0 - 0.5 * beta * beta * p.dF * p.dF;
    return p;
}

ScanResult critical_scan(const InterArrivalLaw& law, double beta, const std::vector<double>& h_grid,
                         std::int64_t N, int replicas, double threshold_sigmas, std::uint64_t seed,
                         std::optional<double> certified_left, int threads)
{
    if (h_grid.empty())
        throw std::invalid_argument("critical_scan: empty h grid");
    for (std::size_t i = 1; i < h_grid.size(); ++i)
        if (!(h_grid[i] > h_grid[i - 1]))
            throw std::invalid_argument("critical_scan: h grid must be increasing");
    if (replicas < 2)
        throw std::invalid_argument("critical_scan: replicas must be >= 2");

    const KernelCache cache(law, N);
    const int runs = beta == 0.0 ? 1 : replicas;
    std::vector<std::vector<double>> logs(h_grid.size(), std::vector<double>(runs));
    parallel_for(static_cast<std::size_t>(runs), threads, [&](std::size_t r) {
        auto d = sample_disorder(stream_seed(seed, r), N, beta, 0.0);
        for (std::size_t i = 0; i < h_grid.size(); ++i) {
            d.h = h_grid[i];
            logs[i][r] = log_partition(cache, d, N).logZc.back();
        }
    });

    ScanResult res;
    res.bracket.hc0 = hc0(law);
    res.bracket.hc_ann = res.bracket.hc0 - 0.5 * beta * beta;
    res.bracket.left = res.bracket.hc_ann;
    if (certified_left)
        res.bracket.left = std::max(res.bracket.left, *certified_left);
    for (std::size_t i = 0; i < h_grid.size(); ++i) {
        const auto ms = mean_se(logs[i]);
        ScanRow row{h_grid[i], ms.mean, ms.se, ms.mean > threshold_sigmas * ms.se};
        if (row.localized && !res.bracket.right)
            res.bracket.right = std::min(h_grid[i], res.bracket.hc0);
        res.rows.push_back(row);
    }
    if (res.bracket.right && *res.bracket.right < res.bracket.left)
        throw CertificateContradiction(
            "critical_scan: localized point below the certified left end");
    return res;
}

std::string to_csv(const std::vector<ScanRow>& rows)
{
    std::string out = "h,mean_log_z,std_error,localized\n";
    for (const auto& r : rows)
        out += kv::format_double(r.h) + "," + kv::format_double(r.mean_log_z) + "," +
               kv::format_double(r.std_error) + "," + (r.localized ? "1" : "0") + "\n";
    return out;
}

} // namespace pinlab
