#include "pinlab/smoothing.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/parallel.hpp"
#include "pinlab/random.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pinlab {

namespace {

struct BlockOutcome {
    bool success = false;
    double sum_omega = 0.0;
};

// Evaluates consecutive blocks of one Gaussian stream, omega shifted by `shift`.
std::vector<BlockOutcome> evaluate_blocks(const KernelCache& cache, std::int64_t ell, int blocks,
                                          double beta, double h, double shift, double threshold,
                                          std::uint64_t seed, int threads)
{
    std::vector<double> omega(static_cast<std::size_t>(ell) * static_cast<std::size_t>(blocks));
    GaussianStream g(seed);
    for (auto& w : omega)
        w = g();
    std::vector<BlockOutcome> out(static_cast<std::size_t>(blocks));
    parallel_for(out.size(), threads, [&](std::size_t b) {
        DisorderSample d;
        d.beta = beta;
        d.h = h;
        d.omega.assign(omega.begin() + static_cast<std::ptrdiff_t>(b * ell),
                       omega.begin() + static_cast<std::ptrdiff_t>((b + 1) * ell));
        double s = 0.0;
        for (auto& w : d.omega) {
            s += w;
            w += shift;
        }
        const auto t = log_partition(cache, d, ell);
        out[b] = {t.logZc[static_cast<std::size_t>(ell)] >= threshold, s};
    });
    return out;
}

} // namespace

double relative_entropy(std::int64_t ell, double delta, double beta)
{
    return delta * delta * static_cast<double>(ell) / (2.0 * beta * beta);
}

RareStretchResult rare_stretch_prob(const InterArrivalLaw& law, const RareStretchConfig& cfg)
{
    if (cfg.ell < 1)
        throw std::invalid_argument("rare_stretch_prob: ell must be >= 1");
    if (!(cfg.a > 0.0 && cfg.a < 1.0))
        throw std::invalid_argument("rare_stretch_prob: a must be in (0, 1)");
    if (!(cfg.beta > 0.0))
        throw std::invalid_argument("rare_stretch_prob: beta must be > 0");
    if (!(cfg.delta >= 0.0))
        throw std::invalid_argument("rare_stretch_prob: delta must be >= 0");
    if (cfg.replicas < 2)
        throw std::invalid_argument("rare_stretch_prob: replicas must be >= 2");
    if (!(cfg.epsilon >= 0.0))
        throw std::invalid_argument("rare_stretch_prob: epsilon must be >= 0");

    RareStretchResult res;
    if (cfg.F_shifted) {
        res.F_shifted = *cfg.F_shifted;
    } else {
        const auto e = free_energy_mc(law, cfg.beta, cfg.h + cfg.delta, cfg.F_N, cfg.F_replicas,
                                      stream_seed(cfg.seed, 2), cfg.threads);
        res.F_shifted = e.value;
        res.F_shifted_std_error = e.std_error;
    }
    if (!(res.F_shifted > 0.0))
        throw std::invalid_argument("rare_stretch_prob: F(beta, h + delta) is not positive");
    res.threshold = cfg.a * static_cast<double>(cfg.ell) * res.F_shifted;

    const KernelCache cache(law, cfg.ell);
    const double R = static_cast<double>(cfg.replicas);

    const auto naive = evaluate_blocks(cache, cfg.ell, cfg.replicas, cfg.beta, cfg.h, 0.0,
                                       res.threshold, stream_seed(cfg.seed, 0), cfg.threads);
    std::int64_t last = -1;
    double gap_sum = 0.0;
    int gaps = 0;
    for (std::size_t b = 0; b < naive.size(); ++b) {
        if (!naive[b].success)
            continue;
        ++res.successes;
        if (last >= 0) {
            gap_sum += static_cast<double>(static_cast<std::int64_t>(b) - last - 1);
            ++gaps;
        }
        last = static_cast<std::int64_t>(b);
    }
    res.p_ell = res.successes / R;
    res.std_error = std::sqrt(res.p_ell * (1.0 - res.p_ell) / (R - 1.0));
    res.mean_gap = gaps > 0 ? gap_sum / gaps : std::numeric_limits<double>::quiet_NaN();

    const double s = cfg.delta / cfg.beta;
    const auto tilted = evaluate_blocks(cache, cfg.ell, cfg.replicas, cfg.beta, cfg.h, s,
                                        res.threshold, stream_seed(cfg.seed, 1), cfg.threads);
    double m1 = 0.0, m2 = 0.0, hits = 0.0;
    const double ell = static_cast<double>(cfg.ell);
    for (const auto& b : tilted) {
        if (!b.success)
            continue;
        const double w = std::exp(-s * b.sum_omega - 0.5 * ell * s * s);
        m1 += w;
        m2 += w * w;
        hits += 1.0;
    }
    m1 /= R;
    res.p_is = m1;
    res.is_std_error = std::sqrt(std::max(0.0, m2 / R - m1 * m1) / (R - 1.0));
    res.shifted_success = hits / R;
    res.shifted_success_std_error =
        std::sqrt(res.shifted_success * (1.0 - res.shifted_success) / (R - 1.0));

    const double H = relative_entropy(cfg.ell, cfg.delta, cfg.beta);
    res.entropy_floor = std::exp(-H);
    res.entropy_floor_slack = std::exp(-H - cfg.epsilon * ell);
    const double pt = res.shifted_success - 3.0 * res.shifted_success_std_error;
    res.entropy_bound = pt > 0.0 ? pt * std::exp(-(H + std::exp(-1.0)) / pt) : 0.0;
    return res;
}

RareStretchBound rare_stretch_lower_bound(const InterArrivalLaw& law, double p, std::int64_t ell,
                                          double a, double F_shifted, double delta, double beta)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("rare_stretch_lower_bound: p must be in [0, 1]");
    if (ell < 1)
        throw std::invalid_argument("rare_stretch_lower_bound: ell must be >= 1");
    RareStretchBound out;
    if (p == 0.0)
        return out;
    if (p < 1e-6)
        throw ResourceLimit("rare_stretch_lower_bound: p below 1e-6 needs too many gap terms");
    // G geometric on {0, 1, ...}: P(G = g) = (1 - p)^g p; log K(0) := 0
    const double q = 1.0 - p;
    double acc = 0.0;
    double w = p * q;
    for (std::int64_t g = 1; w > 1e-300 && g < 100000000; ++g, w *= q) {
        const double lk = law.log_K(g * ell);
        if (!std::isfinite(lk)) {
            acc = -std::numeric_limits<double>::infinity();
            break;
        }
        acc += w * lk;
    }
    out.mean_log_gap_weight = acc;
    out.value = p * a * F_shifted + p / static_cast<double>(ell) * acc;
    out.bracket = p * (a * F_shifted - delta * delta * (1.0 + law.alpha) / (2.0 * a * a * beta * beta));
    return out;
}

std::string to_string(SmoothingVerdict v)
{
    switch (v) {
    case SmoothingVerdict::ok:
        return "ok";
    case SmoothingVerdict::violation:
        return "violation";
    case SmoothingVerdict::inconclusive:
        return "inconclusive";
    }
    return "";
}

int SmoothingReport::violations() const
{
    int n = 0;
    for (const auto& r : rows)
        n += r.verdict == SmoothingVerdict::violation;
    return n;
}

SmoothingReport smoothing_check(const InterArrivalLaw& law, double beta,
                                const CriticalBracket& bracket,
                                const std::vector<double>& delta_grid, std::int64_t N,
                                int replicas, std::uint64_t seed, int threads)
{
    if (!(beta > 0.0))
        throw std::invalid_argument("smoothing_check: beta must be > 0");
    if (!bracket.right)
        throw std::invalid_argument("smoothing_check: the bracket has no right end");
    SmoothingReport rep;
    rep.beta = beta;
    rep.alpha = law.alpha;
    rep.bracket = bracket;
    rep.N = N;
    rep.replicas = replicas;
    rep.seed = seed;
    for (double delta : delta_grid) {
        SmoothingRow row;
        row.delta = delta;
        row.h = *bracket.right + delta;
        const auto e = free_energy_mc(law, beta, row.h, N, replicas, seed, threads);
        row.F_mc = e.value;
        row.std_error = e.std_error;
        row.delta_prime = delta + bracket.width();
        row.bound = (1.0 + law.alpha) * row.delta_prime * row.delta_prime / (beta * beta);
        if (row.F_mc - 3.0 * row.std_error > row.bound)
            row.verdict = SmoothingVerdict::violation;
        else if (row.F_mc + 3.0 * row.std_error <= row.bound)
            row.verdict = SmoothingVerdict::ok;
        else
            row.verdict = SmoothingVerdict::inconclusive;
        rep.rows.push_back(row);
    }
    return rep;
}

std::string to_json(const SmoothingReport& report)
{
    nlohmann::json j;
    j["beta"] = report.beta;
    j["alpha"] = report.alpha;
    j["N"] = report.N;
    j["replicas"] = report.replicas;
    j["seed"] = report.seed;
    j["bracket"] = {{"left", report.bracket.left},
                    {"right", report.bracket.right ? nlohmann::json(*report.bracket.right)
                                                   : nlohmann::json(nullptr)},
                    {"hc_ann", report.bracket.hc_ann},
                    {"hc0", report.bracket.hc0}};
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"delta", r.delta},
                        {"h", r.h},
                        {"F_mc", r.F_mc},
                        {"std_error", r.std_error},
                        {"delta_prime", r.delta_prime},
                        {"bound", r.bound},
                        {"verdict", to_string(r.verdict)}});
    j["violations"] = report.violations();
    return j.dump(2) + "\n";
}

} // namespace pinlab
