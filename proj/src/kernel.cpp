#include "pinlab/kernel.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/kv.hpp"
#include "pinlab/recursion.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pinlab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double mass_tol = 1e-12;

// Neumaier compensated sum.
struct Accumulator {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x)
    {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

// B_{2k} / (2k)! for k = 1..6.
constexpr double bernoulli_over_factorial[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
};

// m-th derivative of f(x) = x^-s e^{-b x}.
double derivative(double s, double b, double x, int m)
{
    // f^(m) = (-1)^m e^{-bx} sum_j C(m,j) (s)_j x^{-s-j} b^{m-j}, (s)_j rising factorial
    const double base = std::pow(x, -s) * std::exp(-b * x);
    double total = 0.0;
    double binom = 1.0;
    double rising = 1.0;
    double xpow = 1.0;
    for (int j = 0; j <= m; ++j) {
        total += binom * rising * xpow * std::pow(b, m - j);
        binom = binom * (m - j) / (j + 1);
        rising *= s + j;
        xpow /= x;
    }
    return (m % 2 == 0 ? 1.0 : -1.0) * base * total;
}

// integral_x^inf t^-s e^{-b t} dt
double tail_integral(double s, double b, double x)
{
    if (b == 0.0)
        return std::pow(x, 1.0 - s) / (s - 1.0);
    return std::pow(b, s - 1.0) * upper_incomplete_gamma(1.0 - s, b * x);
}

TailSum direct_sum(double s, double b, std::int64_t n0)
{
    // s <= 0 and b > 0: terms eventually decrease geometrically.
    const double peak = (s < 0.0) ? -s / b : 0.0;
    Accumulator acc;
    constexpr std::int64_t max_terms = 100'000'000;
    for (std::int64_t n = n0;; ++n) {
        if (n - n0 > max_terms)
            throw ResourceLimit("power_exp_sum: too many terms");
        const double x = static_cast<double>(n);
        const double term = std::pow(x, -s) * std::exp(-b * x);
        acc.add(term);
        if (x > peak + 1.0 && term <= 1e-18 * std::abs(acc.value())) {
            const double ratio = std::pow(1.0 + 1.0 / x, -s) * std::exp(-b);
            const double rest = ratio < 1.0 ? term * ratio / (1.0 - ratio) : inf;
            return {acc.value() + rest, rest + 4e-16 * acc.value()};
        }
        if (term == 0.0 && x > peak)
            return {acc.value(), 4e-16 * acc.value()};
    }
}

} // namespace

double TailSum::upper() const
{
    const double u = value + error;
    if (!std::isfinite(u))
        return u;
    return u * (1.0 + 8.0 * std::numeric_limits<double>::epsilon()) +
           std::numeric_limits<double>::denorm_min();
}

double upper_incomplete_gamma(double a, double z)
{
    if (!(z > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("upper_incomplete_gamma: need z > 0 and finite a");
    if (a > 0.0)
        return boost::math::tgamma(a, z);
    const int steps = static_cast<int>(std::ceil(-a));
    const double a0 = a + steps;
    double g = (a0 > 0.0) ? boost::math::tgamma(a0, z) : boost::math::expint(1, z);
    for (int i = 1; i <= steps; ++i) {
        const double ai = a0 - i;
        g = (g - std::pow(z, ai) * std::exp(-z)) / ai;
    }
    return g;
}

TailSum power_exp_sum(double s, double b, std::int64_t n0)
{
    if (n0 < 1)
        throw std::invalid_argument("power_exp_sum: n0 must be >= 1");
    if (b < 0.0 || !std::isfinite(b) || !std::isfinite(s))
        throw std::invalid_argument("power_exp_sum: need finite s and b >= 0");
    if (b == 0.0 && s <= 1.0)
        return {inf, 0.0};
    if (s <= 0.0)
        return direct_sum(s, b, n0);

    constexpr std::int64_t em_start = 64;
    Accumulator acc;
    std::int64_t start = n0;
    for (; start < em_start; ++start) {
        const double x = static_cast<double>(start);
        acc.add(std::pow(x, -s) * std::exp(-b * x));
    }
    const double x = static_cast<double>(start);
    acc.add(tail_integral(s, b, x));
    acc.add(0.5 * std::pow(x, -s) * std::exp(-b * x));
    for (int k = 1; k <= 5; ++k)
        acc.add(-bernoulli_over_factorial[k - 1] * derivative(s, b, x, 2 * k - 1));
    const double remainder = 2.0 * std::abs(bernoulli_over_factorial[5] * derivative(s, b, x, 11));
    const double value = acc.value();
    return {value, remainder + 4e-16 * std::abs(value)};
}

bool InterArrivalLaw::persistent() const { return k_infinity <= mass_tol; }

double InterArrivalLaw::K(std::int64_t n) const
{
    if (n <= 0)
        return 0.0;
    if (n <= n_table())
        return table[static_cast<std::size_t>(n - 1)];
    if (!has_tail() || n % period != 0)
        return 0.0;
    const double x = static_cast<double>(n);
    return period * cK * std::pow(x, -(1.0 + alpha)) * std::exp(-decay * x);
}

double InterArrivalLaw::log_K(std::int64_t n) const
{
    if (n <= 0)
        return -inf;
    if (n <= n_table()) {
        const double k = table[static_cast<std::size_t>(n - 1)];
        return k > 0.0 ? std::log(k) : -inf;
    }
    if (!has_tail() || n % period != 0)
        return -inf;
    const double x = static_cast<double>(n);
    return std::log(period * cK) - (1.0 + alpha) * std::log(x) - decay * x;
}

std::vector<double> InterArrivalLaw::weights(std::int64_t n) const
{
    if (n < 0)
        throw std::invalid_argument("weights: n must be >= 0");
    std::vector<double> w(static_cast<std::size_t>(n + 1));
    for (std::int64_t j = 0; j <= n; ++j)
        w[static_cast<std::size_t>(j)] = K(j);
    return w;
}

std::vector<double> InterArrivalLaw::survival(std::int64_t n) const
{
    if (n < 0)
        throw std::invalid_argument("survival: n must be >= 0");
    std::vector<double> s(static_cast<std::size_t>(n + 1));
    double acc = moment_sum(*this, 1.0, 0.0, 0.0, n + 1).value + k_infinity;
    for (std::int64_t m = n; m >= 0; --m) {
        s[static_cast<std::size_t>(m)] = acc;
        acc += K(m);
    }
    return s;
}

TailSum moment_sum(const InterArrivalLaw& law, double gamma, double weight_power,
                   double extra_decay, std::int64_t from)
{
    if (!(gamma > 0.0))
        throw std::invalid_argument("moment_sum: gamma must be > 0");
    from = std::max<std::int64_t>(from, 1);
    const bool plain = gamma == 1.0 && weight_power == 0.0 && extra_decay == 0.0;
    Accumulator acc;
    for (std::int64_t n = from; n <= law.n_table(); ++n) {
        const double k = law.table[static_cast<std::size_t>(n - 1)];
        if (k <= 0.0)
            continue;
        if (plain) {
            acc.add(k);
        } else {
            const double x = static_cast<double>(n);
            acc.add(std::pow(x, weight_power) * std::pow(k, gamma) * std::exp(-extra_decay * x));
        }
    }
    double value = acc.value();
    double error = 0.0;
    if (law.has_tail()) {
        const std::int64_t start = std::max(law.n_table() + 1, from);
        const std::int64_t p = law.period;
        const std::int64_t m0 = (start + p - 1) / p;
        const double s = (1.0 + law.alpha) * gamma - weight_power;
        const double b = (gamma * law.decay + extra_decay) * p;
        const double coef =
            std::pow(p * law.cK, gamma) * std::pow(static_cast<double>(p), -s);
        const TailSum t = power_exp_sum(s, b, m0);
        if (!std::isfinite(t.value))
            return {inf, 0.0};
        value += coef * t.value;
        error += coef * t.error;
    }
    error += 4e-16 * std::abs(value);
    return {value, error};
}

InterArrivalLaw make_power_law(double alpha, double k_infinity, std::int64_t n_table,
                               double tail_tol)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("make_power_law: alpha must be > 0");
    if (!(k_infinity >= 0.0 && k_infinity < 1.0))
        throw std::invalid_argument("make_power_law: k_infinity must be in [0, 1)");
    if (n_table < 2)
        throw std::invalid_argument("make_power_law: n_table must be >= 2");
    if (!(tail_tol > 0.0))
        throw std::invalid_argument("make_power_law: tail_tol must be > 0");

    const double s = 1.0 + alpha;
    Accumulator head;
    for (std::int64_t n = 1; n <= n_table; ++n)
        head.add(std::pow(static_cast<double>(n), -s));
    const TailSum tail = power_exp_sum(s, 0.0, n_table + 1);
    const double zeta = head.value() + tail.value;
    const double c = (1.0 - k_infinity) / zeta;
    if (c * tail.error > tail_tol)
        throw std::invalid_argument("make_power_law: tail_tol unreachable at this n_table");

    InterArrivalLaw law;
    law.alpha = alpha;
    law.cK = c;
    law.k_infinity = k_infinity;
    law.table.resize(static_cast<std::size_t>(n_table));
    for (std::int64_t n = 1; n <= n_table; ++n)
        law.table[static_cast<std::size_t>(n - 1)] = c * std::pow(static_cast<double>(n), -s);
    law.total_mass = moment_sum(law).value;
    return law;
}

InterArrivalLaw make_explicit(std::vector<double> table, double k_infinity)
{
    if (table.empty())
        throw std::invalid_argument("make_explicit: empty table");
    if (!(k_infinity >= 0.0 && k_infinity < 1.0))
        throw std::invalid_argument("make_explicit: k_infinity must be in [0, 1)");
    Accumulator acc;
    for (double k : table) {
        if (!(k >= 0.0) || !std::isfinite(k))
            throw std::invalid_argument("make_explicit: entries must be finite and >= 0");
        acc.add(k);
    }
    const double mass = acc.value();
    if (std::abs(mass + k_infinity - 1.0) > mass_tol)
        throw std::invalid_argument("make_explicit: normalization violated: mass " +
                                    kv::format_double(mass) + " + k_infinity " +
                                    kv::format_double(k_infinity) + " != 1");
    InterArrivalLaw law;
    law.table = std::move(table);
    law.k_infinity = k_infinity;
    law.total_mass = mass;
    return law;
}

InterArrivalLaw make_srw_law(std::int64_t n_table, double tail_tol)
{
    if (n_table < 2)
        throw std::invalid_argument("make_srw_law: n_table must be >= 2");
    if (n_table % 2 != 0)
        ++n_table;
    const std::int64_t M = n_table / 2;

    // q_m = P(S_1..S_2m != 0) = C(2m, m) 4^-m; first return at 2m has probability q_m / (2m - 1).
    InterArrivalLaw law;
    law.alpha = 0.5;
    law.period = 2;
    law.table.assign(static_cast<std::size_t>(n_table), 0.0);
    double q = 1.0;
    for (std::int64_t m = 1; m <= M; ++m) {
        q *= (2.0 * m - 1.0) / (2.0 * m);
        law.table[static_cast<std::size_t>(2 * m - 1)] = q / (2.0 * m - 1.0);
    }
    const double tail_mass = q;

    // tail mass = 2 cK sum_{m > M} (2m)^-1.5
    const TailSum t = power_exp_sum(1.5, 0.0, M + 1);
    const double scale = 2.0 * std::pow(2.0, -1.5);
    law.cK = tail_mass / (scale * t.value);
    if (law.cK * scale * t.error > tail_tol)
        throw std::invalid_argument("make_srw_law: tail_tol unreachable at this n_table");

    const double x = static_cast<double>(n_table);
    const double tail_at_junction = 2.0 * law.cK * std::pow(x, -1.5);
    law.junction_mismatch = std::abs(law.table.back() - tail_at_junction) / tail_at_junction;
    law.total_mass = moment_sum(law).value;
    law.k_infinity = 0.0;
    return law;
}

PersistentizedLaw persistentize(const InterArrivalLaw& law)
{
    if (law.persistent())
        return {law, 0.0, true};
    const double scale = 1.0 / law.total_mass;
    InterArrivalLaw out = law;
    for (double& k : out.table)
        k *= scale;
    out.cK *= scale;
    out.k_infinity = 0.0;
    out.total_mass = moment_sum(out).value;
    return {std::move(out), std::log(law.total_mass), false};
}

InterArrivalLaw tilt(const InterArrivalLaw& law, double h, double b)
{
    if (!(b >= 0.0) || !std::isfinite(b) || !std::isfinite(h))
        throw std::invalid_argument("tilt: need b >= 0 and finite h");
    InterArrivalLaw out = law;
    if (h != 0.0 || b != 0.0) {
        for (std::size_t i = 0; i < out.table.size(); ++i)
            out.table[i] *= std::exp(h - b * static_cast<double>(i + 1));
        out.cK *= std::exp(h);
        out.decay += b;
    }
    out.total_mass = moment_sum(out).value;
    if (out.total_mass > 1.0 + mass_tol)
        throw std::invalid_argument("tilt: tilted mass " + kv::format_double(out.total_mass) +
                                    " exceeds 1");
    out.k_infinity = std::max(0.0, 1.0 - out.total_mass);
    out.junction_mismatch = 0.0;
    return out;
}

RenewalFunctionTable renewal_function(const InterArrivalLaw& law, std::int64_t N)
{
    if (N < 0)
        throw std::invalid_argument("renewal_function: N must be >= 0");
    const auto k = law.weights(N);
    RenewalFunctionTable out;
    out.u.assign(static_cast<std::size_t>(N + 1), 0.0);
    out.u[0] = 1.0;
    // u_n = sum_{m<n} u_m K(n-m)
    for (std::size_t n = 1; n <= static_cast<std::size_t>(N); ++n)
        out.u[n] = reversed_dot(out.u.data(), k.data(), n);
    return out;
}

std::optional<double> mean_interarrival(const InterArrivalLaw& law)
{
    if (!law.persistent())
        return std::nullopt;
    if (law.has_tail() && law.decay == 0.0 && law.alpha <= 1.0)
        return std::nullopt;
    return moment_sum(law, 1.0, 1.0).value;
}

RenewalSampler::RenewalSampler(const InterArrivalLaw& law, std::int64_t horizon)
    : horizon_(horizon)
{
    if (horizon < 0)
        throw std::invalid_argument("RenewalSampler: horizon must be >= 0");
    cdf_.assign(static_cast<std::size_t>(horizon + 1), 0.0);
    Accumulator acc;
    for (std::int64_t n = 1; n <= horizon; ++n) {
        acc.add(law.K(n));
        cdf_[static_cast<std::size_t>(n)] = acc.value();
    }
}

std::int64_t RenewalSampler::draw_increment(double u, std::int64_t limit) const
{
    limit = std::min(limit, horizon_);
    if (limit < 1)
        return 0;
    const auto first = cdf_.begin() + 1;
    const auto last = cdf_.begin() + 1 + limit;
    const auto it = std::lower_bound(first, last, u);
    if (it == last)
        return 0;
    return static_cast<std::int64_t>(it - cdf_.begin());
}

ContactSet RenewalSampler::sample(Xoshiro256pp& rng) const
{
    ContactSet out;
    out.horizon = horizon_;
    out.points.push_back(0);
    std::int64_t pos = 0;
    while (true) {
        const double u = 1.0 - uniform01(rng); // (0, 1]
        const std::int64_t n = draw_increment(u, horizon_ - pos);
        if (n == 0)
            break;
        pos += n;
        out.points.push_back(pos);
    }
    return out;
}

ContactSet sample_renewal(const InterArrivalLaw& law, std::int64_t N, std::uint64_t seed)
{
    Xoshiro256pp rng(seed);
    return RenewalSampler(law, N).sample(rng);
}

IntersectionStats intersection_stats(const InterArrivalLaw& law, std::int64_t N)
{
    if (!law.persistent())
        throw std::invalid_argument("intersection_stats: law must be persistent");
    if (N < 1)
        throw std::invalid_argument("intersection_stats: N must be >= 1");
    const auto u = renewal_function(law, N).u;
    IntersectionStats out;
    out.partial.assign(static_cast<std::size_t>(N + 1), 0.0);
    Accumulator acc;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(N); ++n) {
        acc.add(u[n] * u[n]);
        out.partial[n] = acc.value();
    }
    const double sN = out.partial.back();
    const bool heavy = law.has_tail() && law.decay == 0.0;

    if (heavy && law.alpha < 0.5) {
        const std::int64_t p = law.period;
        const std::int64_t n_eff = N - N % p;
        if (n_eff < 1)
            throw std::invalid_argument("intersection_stats: N smaller than the period");
        const double a = law.alpha;
        // u_n ~ A n^(a-1) on the visited sublattice
        const double x = static_cast<double>(n_eff);
        const double amp = u[static_cast<std::size_t>(n_eff)] * std::pow(x, 1.0 - a);
        const double amp_theory = p * a * std::sin(std::numbers::pi * a) / (std::numbers::pi * law.cK);
        const TailSum tail = power_exp_sum(2.0 - 2.0 * a, 0.0, n_eff / p + 1);
        const double sub = std::pow(static_cast<double>(p), 2.0 * a - 2.0) * tail.value;
        out.gamma2 = sN + amp * amp * sub;
        out.gamma2_leading = sN + amp_theory * amp_theory * sub;
        return out;
    }

    out.divergent = true;
    if (heavy && law.alpha < 1.0) {
        out.growth_exponent = 2.0 * law.alpha - 1.0;
        const double x = static_cast<double>(N);
        out.growth_constant = out.growth_exponent == 0.0 ? sN / std::log(x)
                                                         : sN / std::pow(x, out.growth_exponent);
    } else {
        out.growth_exponent = 1.0;
        out.growth_constant = sN / static_cast<double>(N);
    }
    return out;
}

std::string to_text(const InterArrivalLaw& law)
{
    std::string out;
    out += "alpha = " + kv::format_double(law.alpha) + "\n";
    out += "cK = " + kv::format_double(law.cK) + "\n";
    out += "k_infinity = " + kv::format_double(law.k_infinity) + "\n";
    out += "period = " + std::to_string(law.period) + "\n";
    out += "decay = " + kv::format_double(law.decay) + "\n";
    out += "n_table = " + std::to_string(law.n_table()) + "\n";
    out += "table = " + kv::format_double_list(law.table) + "\n";
    return out;
}

InterArrivalLaw law_from_text(std::string_view text)
{
    const auto doc = kv::parse(text);
    if (doc.sections.size() != 1 || !(doc.sections[0].name.empty() || doc.sections[0].name == "law"))
        throw ConfigError("law text must hold a single unnamed or [law] section");
    const auto& sec = doc.sections[0];
    static const char* known[] = {"alpha", "cK", "k_infinity", "period", "decay", "n_table", "table"};
    for (const auto& e : sec.entries)
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return e.key == k; }) == std::end(known))
            throw ConfigError("line " + std::to_string(e.line) + ", column 1: unknown key '" +
                                  e.key + "'",
                              e.line, 1, e.key);
    auto require = [&](const char* key) -> const kv::Entry& {
        const auto* e = sec.find(key);
        if (!e)
            throw ConfigError(std::string("missing key '") + key + "'", 0, 0, key);
        return *e;
    };
    auto range_error = [](const kv::Entry& e, const std::string& msg) {
        return ConfigError("line " + std::to_string(e.line) + ", column " +
                               std::to_string(e.column) + ": field '" + e.key + "' " + msg,
                           e.line, e.column, e.key);
    };

    InterArrivalLaw law;
    const auto& ea = require("alpha");
    const auto& ec = require("cK");
    const auto& ek = require("k_infinity");
    const auto& en = require("n_table");
    const auto& et = require("table");
    law.alpha = kv::to_double(ea);
    law.cK = kv::to_double(ec);
    law.k_infinity = kv::to_double(ek);
    law.table = kv::to_double_list(et);
    if (const auto* e = sec.find("period")) {
        const auto p = kv::to_int(*e);
        if (p < 1)
            throw range_error(*e, "must be >= 1");
        law.period = static_cast<int>(p);
    }
    if (const auto* e = sec.find("decay")) {
        law.decay = kv::to_double(*e);
        if (law.decay < 0.0)
            throw range_error(*e, "must be >= 0");
    }
    if (law.cK < 0.0)
        throw range_error(ec, "must be >= 0");
    if (law.cK > 0.0 && !(law.alpha > 0.0))
        throw range_error(ea, "must be > 0");
    if (!(law.k_infinity >= 0.0 && law.k_infinity < 1.0))
        throw range_error(ek, "must be in [0, 1)");
    if (kv::to_int(en) != law.n_table())
        throw range_error(en, "does not match the table length");
    for (double k : law.table)
        if (k < 0.0)
            throw range_error(et, "entries must be >= 0");
    law.total_mass = moment_sum(law).value;
    if (std::abs(law.total_mass + law.k_infinity - 1.0) > mass_tol)
        throw range_error(et, "normalization violated: total mass " +
                                  kv::format_double(law.total_mass + law.k_infinity));
    return law;
}

} // namespace pinlab
