#include "pinlab/bounds.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/homogeneous.hpp"
#include "pinlab/kv.hpp"
#include "pinlab/parallel.hpp"
#include "pinlab/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace pinlab {

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();
constexpr std::size_t block_size = 64;

void require_gamma(const InterArrivalLaw& law, double gamma, const char* where)
{
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument(std::string(where) + ": gamma must be in (0, 1)");
    if (law.has_tail() && !((1.0 + law.alpha) * gamma > 1.0))
        throw std::invalid_argument(std::string(where) +
                                    ": sum K(n)^gamma diverges, need (1 + alpha) gamma > 1");
}

Verdict verdict_of(double rho)
{
    return rho + certificate_margin <= 1.0 ? Verdict::certified_delocalized : Verdict::inconclusive;
}

// Streaming estimate of E[exp(x)] kept relative to a running maximum.
struct ExpMoment {
    double shift = -std::numeric_limits<double>::infinity();
    double s1 = 0.0;
    double s2 = 0.0;

    void add(double x)
    {
        if (x > shift) {
            const double r = std::exp(shift - x);
            s1 *= r;
            s2 *= r * r;
            shift = x;
        }
        const double y = std::exp(x - shift);
        s1 += y;
        s2 += y * y;
    }
};

// Smallest contiguous window carrying `fraction` of the total.
std::pair<std::int64_t, std::int64_t> dominant_window(const std::vector<double>& c, double fraction)
{
    double total = 0.0;
    for (double x : c)
        total += x;
    if (!(total > 0.0) || c.empty())
        return {0, 0};
    const double target = fraction * total;
    std::size_t best_lo = 0, best_hi = c.size() - 1;
    std::size_t lo = 0;
    double acc = 0.0;
    for (std::size_t hi = 0; hi < c.size(); ++hi) {
        acc += c[hi];
        while (lo < hi && acc - c[lo] >= target) {
            acc -= c[lo];
            ++lo;
        }
        if (acc >= target && hi - lo < best_hi - best_lo) {
            best_lo = lo;
            best_hi = hi;
        }
    }
    return {static_cast<std::int64_t>(best_lo), static_cast<std::int64_t>(best_hi)};
}

struct RigorousTable {
    std::vector<double> annealed;
    std::vector<std::optional<double>> shifted;
};

RigorousTable rigorous_table(const InterArrivalLaw& law, double beta, double h, double gamma,
                             std::int64_t jmax, const std::vector<double>& shift_a)
{
    RigorousTable t;
    const auto ann = partition(law, h + 0.5 * beta * beta, jmax);
    t.annealed.resize(ann.size());
    for (std::size_t j = 0; j < ann.size(); ++j)
        t.annealed[j] = std::exp(gamma * ann[j]);
    t.shifted.assign(ann.size(), std::nullopt);
    if (beta == 0.0)
        return t;
    const double delta = h - (hc0(law) - 0.5 * beta * beta);
    for (double a : shift_a) {
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("shift parameter a must be in (0, 1)");
        const double pin = hc0(law) + delta - std::sqrt(a) * beta * beta;
        const auto z = partition(law, pin, jmax);
        for (std::int64_t j = 1; j <= jmax; ++j) {
            const double b = std::exp(gamma * z[static_cast<std::size_t>(j)] +
                                      gamma / (1.0 - gamma) * a * beta * beta * static_cast<double>(j));
            auto& s = t.shifted[static_cast<std::size_t>(j)];
            if (!s || b < *s)
                s = b;
        }
    }
    return t;
}

Certificate assemble(const InterArrivalLaw& law, double beta, double h, double gamma,
                     std::int64_t k, CertificateGrade grade, const MomentTable& mc,
                     const RigorousTable& rig, const std::vector<double>& S)
{
    Certificate c;
    c.kind = CertificateKind::iterated;
    c.grade = grade;
    c.gamma = gamma;
    c.k = k;
    c.beta = beta;
    c.h = h;
    c.law = law;
    c.xi_moment = xi_moment(beta, h, gamma);
    bool used_shift = false;
    double sum = 0.0;
    std::vector<double> contrib(static_cast<std::size_t>(k));
    for (std::int64_t j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        MomentEvidence e;
        e.j = j;
        e.mc = mc.mean[ju];
        e.mc_std_error = mc.std_error[ju];
        e.annealed = rig.annealed[ju];
        e.shifted = rig.shifted[ju];
        if (j == 0) {
            e.used = 1.0;
        } else if (grade == CertificateGrade::statistical) {
            e.used = e.mc + 3.0 * e.mc_std_error;
        } else {
            e.used = e.annealed;
            if (e.shifted && *e.shifted < e.used) {
                e.used = *e.shifted;
                used_shift = true;
            }
        }
        const double term = e.used * S[static_cast<std::size_t>(k - j)];
        sum += term;
        e.contribution = c.xi_moment * term;
        contrib[ju] = e.contribution;
        c.evidence.push_back(e);
    }
    c.rho = c.xi_moment * sum;
    c.verdict = verdict_of(c.rho);
    if (used_shift)
        c.kind = CertificateKind::shifted;
    std::tie(c.dominant_j_lo, c.dominant_j_hi) = dominant_window(contrib, 0.9);
    return c;
}

std::vector<DecayCheck> decay_checks(const InterArrivalLaw& law, double beta, double h,
                                     double gamma, std::int64_t k, const Certificate& cert,
                                     int replicas, std::uint64_t seed, int threads)
{
    double max_used = 0.0;
    for (const auto& e : cert.evidence)
        max_used = std::max(max_used, e.used);
    const auto t = fm_moments(law, beta, h, gamma, 4 * k, replicas, seed, threads);
    std::vector<DecayCheck> out;
    for (std::int64_t N : {2 * k, 4 * k}) {
        DecayCheck d;
        d.N = N;
        d.mc = t.mean[static_cast<std::size_t>(N)];
        d.mc_std_error = t.std_error[static_cast<std::size_t>(N)];
        const double kg = std::pow(law.K(N), gamma);
        d.ratio = kg > 0.0 ? d.mc / kg : std::numeric_limits<double>::infinity();
        d.below_max = d.mc - 3.0 * d.mc_std_error <= max_used;
        out.push_back(d);
    }
    return out;
}

nlohmann::json evidence_json(const MomentEvidence& e)
{
    nlohmann::json j = {{"j", e.j},
                        {"mc", e.mc},
                        {"mc_std_error", e.mc_std_error},
                        {"annealed", e.annealed},
                        {"used", e.used},
                        {"contribution", e.contribution}};
    j["shifted"] = e.shifted ? nlohmann::json(*e.shifted) : nlohmann::json(nullptr);
    return j;
}

} // namespace

double xi_moment(double beta, double h, double gamma)
{
    return std::exp(gamma * h + 0.5 * gamma * gamma * beta * beta);
}

std::vector<double> fractional_tail_sums(const InterArrivalLaw& law, double gamma, std::int64_t k)
{
    if (k < 1)
        throw std::invalid_argument("fractional_tail_sums: k must be >= 1");
    const std::int64_t M = std::max(k, law.n_table());
    const double tail = law.has_tail() ? moment_sum(law, gamma, 0.0, 0.0, M + 1).upper() : 0.0;
    if (!std::isfinite(tail))
        throw std::invalid_argument("fractional_tail_sums: sum K(n)^gamma diverges");
    std::vector<double> S(static_cast<std::size_t>(k + 1), 0.0);
    const double round_up = 1.0 + 2.0 * eps * static_cast<double>(M + 2);
    double acc = tail;
    for (std::int64_t m = M; m >= 1; --m) {
        const double km = law.K(m);
        if (km > 0.0)
            acc += std::pow(km, gamma);
        if (m <= k)
            S[static_cast<std::size_t>(m)] = acc * round_up;
    }
    return S;
}

std::string to_string(CertificateKind kind)
{
    switch (kind) {
    case CertificateKind::simple:
        return "simple";
    case CertificateKind::iterated:
        return "iterated";
    case CertificateKind::shifted:
        return "shifted";
    }
    return "";
}

std::string to_string(CertificateGrade grade)
{
    return grade == CertificateGrade::rigorous ? "rigorous" : "statistical";
}

std::string to_string(Verdict verdict)
{
    return verdict == Verdict::certified_delocalized ? "certified_delocalized" : "inconclusive";
}

Certificate simple_certificate(const InterArrivalLaw& law, double beta, double h, double gamma)
{
    require_gamma(law, gamma, "simple_certificate");
    const auto S = fractional_tail_sums(law, gamma, 1);
    Certificate c;
    c.kind = CertificateKind::simple;
    c.grade = CertificateGrade::rigorous;
    c.gamma = gamma;
    c.k = 1;
    c.beta = beta;
    c.h = h;
    c.law = law;
    c.xi_moment = xi_moment(beta, h, gamma);
    double sum = 0.0;
    sum += 1.0 * S[1];
    c.rho = c.xi_moment * sum;
    c.verdict = verdict_of(c.rho);
    MomentEvidence e;
    e.mc = 1.0;
    e.annealed = 1.0;
    e.used = 1.0;
    e.contribution = c.rho;
    c.evidence.push_back(e);
    return c;
}

double simple_certified_h(const InterArrivalLaw& law, double beta, double gamma)
{
    require_gamma(law, gamma, "simple_certified_h");
    const double S = fractional_tail_sums(law, gamma, 1)[1];
    double h = (std::log1p(-certificate_margin) - std::log(S)) / gamma - 0.5 * gamma * beta * beta;
    while (!simple_certificate(law, beta, h, gamma).certified())
        h = std::nextafter(h, -std::numeric_limits<double>::infinity()) - 1e-15 * std::abs(h);
    return h;
}

MomentTable fm_moments(const InterArrivalLaw& law, double beta, double h, double gamma,
                       std::int64_t jmax, int replicas, std::uint64_t seed, int threads)
{
    if (jmax < 1)
        throw std::invalid_argument("fm_moments: jmax must be >= 1");
    if (replicas < 2)
        throw std::invalid_argument("fm_moments: replicas must be >= 2");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("fm_moments: gamma must be in (0, 1)");
    const auto n = static_cast<std::size_t>(jmax + 1);
    MomentTable t;
    t.mean.assign(n, 0.0);
    t.std_error.assign(n, 0.0);
    t.annealed.resize(n);
    const auto ann = partition(law, h + 0.5 * beta * beta, jmax);
    for (std::size_t j = 0; j < n; ++j)
        t.annealed[j] = std::exp(gamma * ann[j]);

    const KernelCache cache(law, jmax);
    if (beta == 0.0) {
        const auto z = log_partition(cache, sample_disorder(seed, jmax, 0.0, h), jmax);
        for (std::size_t j = 0; j < n; ++j)
            t.mean[j] = std::exp(gamma * z.logZc[j]);
        return t;
    }

    std::vector<ExpMoment> acc(n);
    std::vector<std::vector<double>> block(block_size);
    for (std::size_t start = 0; start < static_cast<std::size_t>(replicas); start += block_size) {
        const std::size_t count = std::min(block_size, static_cast<std::size_t>(replicas) - start);
        parallel_for(count, threads, [&](std::size_t i) {
            const auto d = sample_disorder(stream_seed(seed, start + i), jmax, beta, h);
            block[i] = log_partition(cache, d, jmax).logZc;
        });
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < n; ++j)
                acc[j].add(gamma * block[i][j]);
    }
    const double R = static_cast<double>(replicas);
    for (std::size_t j = 0; j < n; ++j) {
        const double m1 = acc[j].s1 / R;
        const double var = std::max(0.0, acc[j].s2 / R - m1 * m1) * R / (R - 1.0);
        const double scale = std::exp(acc[j].shift);
        t.mean[j] = m1 * scale;
        t.std_error[j] = std::sqrt(var / R) * scale;
    }
    return t;
}

MomentEstimate fm_moment_mc(const InterArrivalLaw& law, double beta, double h, double gamma,
                            std::int64_t j, int replicas, std::uint64_t seed, int threads)
{
    if (j < 1)
        throw std::invalid_argument("fm_moment_mc: j must be >= 1");
    const auto t = fm_moments(law, beta, h, gamma, j, replicas, seed, threads);
    const auto ju = static_cast<std::size_t>(j);
    return {t.mean[ju], t.std_error[ju], t.annealed[ju]};
}

double shifted_bound(const InterArrivalLaw& law, double beta, double delta, double gamma, double a,
                     std::int64_t j, std::int64_t k)
{
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("shifted_bound: gamma must be in (0, 1)");
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("shifted_bound: a must be in (0, 1)");
    if (j < 0 || j > k)
        throw std::invalid_argument("shifted_bound: need 0 <= j <= k");
    const double pin = hc0(law) + delta - std::sqrt(a) * beta * beta;
    const double log_z = j == 0 ? 0.0 : partition(law, pin, j)[static_cast<std::size_t>(j)];
    return std::exp(gamma * log_z + gamma / (1.0 - gamma) * a * beta * beta * static_cast<double>(k));
}

std::int64_t correlation_scale(const InterArrivalLaw& law, double delta)
{
    const double F = free_energy(law, hc0(law) + delta).b;
    if (!(F > 0.0))
        throw std::invalid_argument("correlation_scale: F(0, delta) = 0");
    return std::max<std::int64_t>(1, std::llround(1.0 / F));
}

IteratedCertificates iterated_certificate(const InterArrivalLaw& law, double beta, double h,
                                          double gamma, std::int64_t k, const IteratedOptions& opt)
{
    require_gamma(law, gamma, "iterated_certificate");
    if (k < 1)
        throw std::invalid_argument("iterated_certificate: k must be >= 1");
    if (k > opt.max_k)
        throw ResourceLimit("iterated_certificate: k = " + std::to_string(k) + " exceeds " +
                            std::to_string(opt.max_k));
    const auto S = fractional_tail_sums(law, gamma, k);
    MomentTable mc;
    RigorousTable rig;
    if (k == 1) {
        mc.mean = {1.0};
        mc.std_error = {0.0};
        rig.annealed = {1.0};
        rig.shifted = {std::nullopt};
    } else {
        mc = fm_moments(law, beta, h, gamma, k - 1, opt.replicas, opt.seed, opt.threads);
        rig = rigorous_table(law, beta, h, gamma, k - 1, opt.shift_a);
    }
    IteratedCertificates out{
        assemble(law, beta, h, gamma, k, CertificateGrade::statistical, mc, rig, S),
        assemble(law, beta, h, gamma, k, CertificateGrade::rigorous, mc, rig, S)};
    for (auto* c : {&out.statistical, &out.rigorous}) {
        c->replicas = opt.replicas;
        c->seed = opt.seed;
    }
    if (opt.decay_check) {
        const int dr = opt.decay_replicas > 0 ? opt.decay_replicas : std::max(20, opt.replicas / 10);
        out.statistical.decay = decay_checks(law, beta, h, gamma, k, out.statistical, dr,
                                             stream_seed(opt.seed, 0xdeca7), opt.threads);
    }
    return out;
}

SearchResult search_certificate(const InterArrivalLaw& law, double beta, double h,
                                const SearchOptions& opt)
{
    SearchResult res;
    std::int64_t kcap = opt.max_k;
    const double delta = h - (hc0(law) - 0.5 * beta * beta);
    if (delta > 0.0) {
        const double F = free_energy(law, hc0(law) + delta).b;
        if (F > 0.0 && 1.0 / F < static_cast<double>(kcap))
            kcap = std::max<std::int64_t>(1, static_cast<std::int64_t>(1.0 / F));
    }
    const double gmin = law.has_tail() ? 1.0 / (1.0 + law.alpha) : 0.0;
    for (double gamma : opt.gamma_grid) {
        if (!(gamma > gmin && gamma < 1.0))
            continue;
        const auto S = fractional_tail_sums(law, gamma, kcap);
        MomentTable mc;
        RigorousTable rig;
        if (kcap > 1) {
            mc = fm_moments(law, beta, h, gamma, kcap - 1, opt.iterated.replicas, opt.iterated.seed,
                            opt.iterated.threads);
            rig = rigorous_table(law, beta, h, gamma, kcap - 1, opt.iterated.shift_a);
        } else {
            mc.mean = {1.0};
            mc.std_error = {0.0};
            rig.annealed = {1.0};
            rig.shifted = {std::nullopt};
        }
        for (std::int64_t k = 1; k <= kcap; k *= 2) {
            for (auto grade : {CertificateGrade::statistical, CertificateGrade::rigorous}) {
                auto c = assemble(law, beta, h, gamma, k, grade, mc, rig, S);
                c.replicas = opt.iterated.replicas;
                c.seed = opt.iterated.seed;
                auto& best = grade == CertificateGrade::statistical ? res.best_statistical
                                                                     : res.best_rigorous;
                if (!best || c.rho < best->rho)
                    best = c;
                c.evidence.clear();
                res.candidates.push_back(std::move(c));
            }
        }
    }
    if (res.best_statistical && opt.iterated.decay_check && res.best_statistical->k > 1) {
        auto& b = *res.best_statistical;
        const int dr = opt.iterated.decay_replicas > 0 ? opt.iterated.decay_replicas
                                                       : std::max(20, opt.iterated.replicas / 10);
        b.decay = decay_checks(law, beta, h, b.gamma, b.k, b, dr,
                               stream_seed(opt.iterated.seed, 0xdeca7), opt.iterated.threads);
    }
    return res;
}

void check_consistency(const Certificate& cert, const FreeEnergyEstimate& estimate)
{
    if (cert.certified() && estimate.value > 3.0 * estimate.std_error)
        throw CertificateContradiction(
            "certificate at h = " + kv::format_double(cert.h) + " says delocalized but F_mc = " +
            kv::format_double(estimate.value) + " +- " + kv::format_double(estimate.std_error));
}

std::string to_json(const Certificate& cert)
{
    nlohmann::json j;
    j["kind"] = to_string(cert.kind);
    j["grade"] = to_string(cert.grade);
    j["gamma"] = cert.gamma;
    j["k"] = cert.k;
    j["rho"] = cert.rho;
    j["safety_margin"] = certificate_margin;
    j["verdict"] = to_string(cert.verdict);
    j["beta"] = cert.beta;
    j["h"] = cert.h;
    j["law"] = to_text(cert.law);
    j["xi_moment"] = cert.xi_moment;
    j["replicas"] = cert.replicas;
    j["seed"] = cert.seed;
    j["dominant_j"] = {cert.dominant_j_lo, cert.dominant_j_hi};
    auto& ev = j["evidence"] = nlohmann::json::array();
    for (const auto& e : cert.evidence)
        ev.push_back(evidence_json(e));
    auto& dc = j["decay_checks"] = nlohmann::json::array();
    for (const auto& d : cert.decay)
        dc.push_back({{"N", d.N},
                      {"mc", d.mc},
                      {"mc_std_error", d.mc_std_error},
                      {"ratio_to_K_gamma", d.ratio},
                      {"below_max", d.below_max}});
    return j.dump(2) + "\n";
}

} // namespace pinlab
