#include "doctest.h"

#include "oracles.hpp"
#include "pinlab/bounds.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/random.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

using namespace pinlab;

TEST_CASE("xi moment")
{
    CHECK(xi_moment(0.0, 0.3, 0.7) == doctest::Approx(std::exp(0.21)).epsilon(1e-15));
    for (double beta : {0.5, 1.0, 3.0})
        CHECK(xi_moment(beta, -0.5 * beta * beta, 0.5) ==
              doctest::Approx(std::exp(-beta * beta / 8)).epsilon(1e-14));

    const double beta = 1.2, h = -0.3, gamma = 0.6;
    GaussianStream g(31);
    const int R = 1000000;
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < R; ++i) {
        const double x = std::exp(gamma * (beta * g() + h));
        m += x;
        m2 += x * x;
    }
    m /= R;
    const double se = std::sqrt((m2 / R - m * m) / R);
    CHECK(std::abs(m - xi_moment(beta, h, gamma)) < 3 * se);
}

TEST_CASE("fractional subadditivity")
{
    Xoshiro256pp rng(8);
    for (int t = 0; t < 1000; ++t) {
        const double gamma = 0.05 + 0.9 * uniform01(rng);
        const int n = 1 + t % 20;
        double s = 0.0, sg = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = std::exp(10.0 * uniform01(rng) - 5.0);
            s += a;
            sg += std::pow(a, gamma);
        }
        CHECK(std::pow(s, gamma) <= sg);
    }
}

TEST_CASE("fractional tail sums")
{
    auto law = make_power_law(0.5, 0.0, 256);
    auto S = fractional_tail_sums(law, 0.8, 600);
    const double direct = moment_sum(law, 0.8).value;
    CHECK(S[1] >= direct);
    CHECK(S[1] == doctest::Approx(direct).epsilon(1e-12));
    CHECK(S[300] == doctest::Approx(moment_sum(law, 0.8, 0.0, 0.0, 300).value).epsilon(1e-12));
    for (int r = 1; r < 600; ++r)
        CHECK(S[r] > S[r + 1]);
    CHECK_THROWS_AS(fractional_tail_sums(law, 0.6, 4), std::invalid_argument);
}

TEST_CASE("simple certificate")
{
    auto law = make_power_law(0.5, 0.0, 512);
    auto c0 = simple_certificate(law, 0.0, 0.0, 0.8);
    CHECK(c0.verdict == Verdict::inconclusive);
    CHECK(c0.rho > 1.0);
    CHECK(c0.rho == doctest::Approx(moment_sum(law, 0.8).value).epsilon(1e-12));
    CHECK_THROWS_AS(simple_certificate(law, 1.0, 0.0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(simple_certificate(law, 1.0, 0.0, 1.0), std::invalid_argument);

    // log rho at fixed delta is -gamma (1 - gamma) beta^2 / 2 + delta gamma + log S
    const double gamma = 0.8, delta = 0.1;
    const double logS = std::log(fractional_tail_sums(law, gamma, 1)[1]);
    for (double beta : {0.5, 2.0, 5.0}) {
        const auto c = simple_certificate(law, beta, delta - 0.5 * beta * beta, gamma);
        CHECK(std::log(c.rho) ==
              doctest::Approx(-0.5 * beta * beta * gamma * (1 - gamma) + delta * gamma + logS)
                  .epsilon(1e-12));
    }
    const double beta_star =
        std::sqrt(2.0 * (delta * gamma + logS - std::log1p(-certificate_margin)) / (gamma * (1 - gamma)));
    CHECK(simple_certificate(law, beta_star * 1.001, delta - 0.5 * beta_star * beta_star * 1.002001,
                             gamma)
              .certified());
    CHECK_FALSE(simple_certificate(law, beta_star * 0.999,
                                   delta - 0.5 * beta_star * beta_star * 0.998001, gamma)
                    .certified());

    // certified gap above hc_ann grows like (1 - gamma) beta^2 / 2
    for (double beta : {4.0, 8.0, 16.0}) {
        const double gap = simple_certified_h(law, beta, gamma) + 0.5 * beta * beta;
        CHECK(gap / (beta * beta) ==
              doctest::Approx(0.5 * (1 - gamma)).epsilon(std::abs(logS / gamma) / (beta * beta) + 1e-9));
        CHECK(simple_certificate(law, beta, simple_certified_h(law, beta, gamma), gamma).certified());
    }
}

TEST_CASE("iterated certificate with k = 1 is the simple certificate")
{
    for (auto law : {make_power_law(0.5, 0.0, 512), make_power_law(0.75, 0.2, 64)}) {
        for (double gamma : {0.7, 0.9}) {
            for (double beta : {0.5, 3.0}) {
                const double h = -0.5 * beta * beta + 0.4;
                IteratedOptions opt;
                opt.decay_check = false;
                auto it = iterated_certificate(law, beta, h, gamma, 1, opt);
                auto s = simple_certificate(law, beta, h, gamma);
                CHECK(it.statistical.rho == s.rho);
                CHECK(it.rigorous.rho == s.rho);
                CHECK(it.rigorous.verdict == s.verdict);
            }
        }
    }
}

TEST_CASE("fractional moments")
{
    auto law = make_power_law(0.75, 0.0, 128);
    auto t0 = fm_moments(law, 0.0, -0.1, 0.8, 64, 10, 1);
    const auto z = partition(law, -0.1, 64);
    for (int j = 0; j <= 64; ++j) {
        CHECK(t0.std_error[j] == 0.0);
        CHECK(t0.mean[j] == doctest::Approx(std::exp(0.8 * z[j])).epsilon(1e-12));
    }

    auto t = fm_moments(law, 1.0, -0.4, 0.8, 64, 400, 2);
    for (int j = 1; j <= 64; ++j)
        CHECK(t.mean[j] <= t.annealed[j] + 3 * t.std_error[j]);

    // renewal inequality A_N <= E[xi^g] sum_n A_{N-n} K(n)^g
    const double xm = xi_moment(1.0, -0.4, 0.8);
    for (int N = 1; N <= 64; ++N) {
        double rhs = 0.0;
        for (int n = 1; n <= N; ++n)
            rhs += (t.mean[N - n] + 3 * t.std_error[N - n]) * std::pow(law.K(n), 0.8);
        CHECK(t.mean[N] - 3 * t.std_error[N] <= xm * rhs);
    }

    auto a = fm_moments(law, 1.0, -0.4, 0.8, 32, 70, 9, 1);
    auto b = fm_moments(law, 1.0, -0.4, 0.8, 32, 70, 9, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("fractional moment against enumeration over compositions")
{
    auto law = make_power_law(0.6, 0.0, 32);
    const double beta = 0.8, h = -0.2, gamma = 0.7;
    const int j = 8, R = 100000;
    auto est = fm_moment_mc(law, beta, h, gamma, j, R, 4);

    auto k = law.weights(j);
    GaussianStream g(12345);
    double m = 0.0, m2 = 0.0;
    std::vector<double> xi(j + 1, 1.0);
    for (int r = 0; r < R; ++r) {
        for (int n = 1; n <= j; ++n)
            xi[n] = std::exp(beta * g() + h);
        const double a = std::pow(oracle::constrained_partition(k, xi, j), gamma);
        m += a;
        m2 += a * a;
    }
    m /= R;
    const double se = std::sqrt((m2 / R - m * m) / R);
    CHECK(std::abs(est.value - m) < 3 * std::hypot(se, est.std_error));
}

TEST_CASE("shifted bound")
{
    auto law = make_power_law(0.75, 0.0, 256);
    const double beta = 1.0, gamma = 0.8;
    // a -> 1: the shift cancels delta and only the Hoelder factor remains
    for (double a : {0.99, 0.9999}) {
        const double b = shifted_bound(law, beta, a * beta * beta, gamma, a, 50, 64);
        const double ref = std::exp(gamma * partition(law, 0.0, 50)[50] +
                                    gamma / (1 - gamma) * a * beta * beta * 64);
        CHECK(std::abs(std::log(b / ref)) < 3 * (1 - std::sqrt(a)) * 50 + 1e-12);
    }

    // alpha = 2: delta / F(0, delta) tends to a constant
    auto law2 = make_power_law(2.0, 0.0, 256);
    std::vector<double> r;
    for (double d : {1e-2, 1e-3, 1e-4})
        r.push_back(d * correlation_scale(law2, d));
    CHECK(std::abs(r[2] / r[1] - 1) < std::abs(r[1] / r[0] - 1) + 1e-3);
    CHECK(std::abs(r[2] / r[1] - 1) < 0.01);
    CHECK_THROWS_AS(correlation_scale(law, -0.1), std::invalid_argument);

    // bound dominates the Monte Carlo moment
    for (double a : {0.1, 0.3}) {
        const double delta = a * beta * beta;
        const double h = -0.5 * beta * beta + delta;
        auto t = fm_moments(law, beta, h, gamma, 40, 300, 21);
        for (int j : {5, 20, 40})
            CHECK(t.mean[j] - 3 * t.std_error[j] <= shifted_bound(law, beta, delta, gamma, a, j, j));
    }
}

TEST_CASE("iterated certificate and search")
{
    auto law = make_power_law(0.75, 0.0, 256);
    IteratedOptions opt;
    opt.replicas = 200;
    opt.seed = 3;
    auto it = iterated_certificate(law, 1.0, -1.5, 0.8, 32, opt);
    CHECK(it.statistical.certified());
    CHECK(it.statistical.evidence.size() == 32);
    CHECK(it.statistical.dominant_j_lo <= it.statistical.dominant_j_hi);
    REQUIRE(it.statistical.decay.size() == 2);
    CHECK(it.statistical.decay[0].N == 64);
    CHECK(it.statistical.decay[1].below_max);
    CHECK_THROWS_AS(iterated_certificate(law, 1.0, -1.5, 0.8, 1 << 20, opt), ResourceLimit);

    SearchOptions so;
    so.max_k = 64;
    so.iterated.replicas = 50;
    so.iterated.decay_check = false;
    auto none = search_certificate(law, 0.0, 0.0, so);
    REQUIRE(none.best_rigorous.has_value());
    CHECK_FALSE(none.best_rigorous->certified());
    CHECK(none.candidates.size() == 4 * 7 * 2);

    auto deep = search_certificate(law, 1.0, -1.5, so);
    REQUIRE(deep.best_statistical.has_value());
    CHECK(deep.best_statistical->certified());
}

TEST_CASE("certificate consistency and json")
{
    auto law = make_power_law(0.5, 0.0, 64);
    auto c = simple_certificate(law, 3.0, -8.0, 0.7);
    REQUIRE(c.certified());
    FreeEnergyEstimate bad;
    bad.value = 0.1;
    bad.std_error = 0.01;
    CHECK_THROWS_AS(check_consistency(c, bad), CertificateContradiction);
    FreeEnergyEstimate ok;
    ok.value = 0.01;
    ok.std_error = 0.01;
    CHECK_NOTHROW(check_consistency(c, ok));

    auto j = nlohmann::json::parse(to_json(c));
    CHECK(j["kind"] == "simple");
    CHECK(j["grade"] == "rigorous");
    CHECK(j["verdict"] == "certified_delocalized");
    CHECK(j["rho"].get<double>() == c.rho);
    CHECK(law_from_text(j["law"].get<std::string>()).table == law.table);
}
