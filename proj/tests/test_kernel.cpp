#include "doctest.h"

#include "pinlab/errors.hpp"
#include "pinlab/kernel.hpp"

#include <cmath>
#include <numbers>

using namespace pinlab;

namespace {

InterArrivalLaw geometric_law()
{
    std::vector<double> t(60);
    for (int n = 1; n <= 60; ++n)
        t[n - 1] = std::ldexp(1.0, -n);
    return make_explicit(t, 0.0);
}

double brute_sum(double s, double b, long n0, long n1)
{
    double acc = 0.0;
    for (long n = n1; n >= n0; --n)
        acc += std::pow(double(n), -s) * std::exp(-b * double(n));
    return acc;
}

} // namespace

TEST_CASE("incomplete gamma for negative and zero order")
{
    // mpmath.gammainc
    CHECK(upper_incomplete_gamma(-0.5, 2.0) == doctest::Approx(0.0300987571001864663).epsilon(1e-13));
    CHECK(upper_incomplete_gamma(-2.0, 0.3) == doctest::Approx(3.33379807293349314).epsilon(1e-13));
    CHECK(upper_incomplete_gamma(0.0, 1.0) == doctest::Approx(0.219383934395520274).epsilon(1e-14));
}

TEST_CASE("power_exp_sum against high-precision values")
{
    auto z = power_exp_sum(1.5, 0.0, 1);
    CHECK(std::abs(z.value - 2.61237534868548834) < 1e-13);
    CHECK(z.error < 1e-13);

    auto li = power_exp_sum(1.5, 0.01, 1);
    CHECK(std::abs(li.value - 2.27247773353231080) < 1e-13);

    auto t = power_exp_sum(2.5, 0.3, 7);
    CHECK(std::abs(t.value - 0.00211549706266195844) < 1e-16);

    auto g = power_exp_sum(-0.5, 0.2, 1);
    CHECK(std::abs(g.value - 9.70569327789093752) < 1e-12);

    auto hz = power_exp_sum(1.2, 0.0, 100);
    CHECK(std::abs(hz.value - 1.99253036964525131) < 1e-13);

    CHECK(std::isinf(power_exp_sum(1.0, 0.0, 1).value));
}

TEST_CASE("power_exp_sum error bound covers brute force")
{
    for (double s : {1.1, 1.5, 2.0, 3.7})
        for (double b : {0.05, 0.5}) {
            const auto t = power_exp_sum(s, b, 3);
            const double ref = brute_sum(s, b, 3, 4000);
            CHECK(std::abs(t.value - ref) <= t.error + 1e-15);
        }
}

TEST_CASE("power law normalization")
{
    auto law = make_power_law(0.5, 0.0, 1024);
    // 1 / zeta(3/2)
    CHECK(std::abs(law.cK - 0.382793383999426562) < 1e-13);
    CHECK(std::abs(law.total_mass - 1.0) < 1e-12);
    CHECK(law.persistent());

    auto half = make_power_law(0.5, 0.5, 256);
    CHECK(std::abs(half.total_mass - 0.5) < 1e-13);
    CHECK_FALSE(half.persistent());

    CHECK_THROWS_AS(make_power_law(-1.0, 0.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(make_power_law(0.5, 1.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(make_power_law(0.5, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_power_law(0.5, 0.0, 16, 1e-30), std::invalid_argument);
}

TEST_CASE("explicit laws")
{
    auto a = make_explicit({0.5, 0.5}, 0.0);
    CHECK(a.persistent());
    REQUIRE(mean_interarrival(a).has_value());
    CHECK(*mean_interarrival(a) == doctest::Approx(1.5).epsilon(1e-15));

    auto b = make_explicit({0.5}, 0.5);
    CHECK_FALSE(b.persistent());
    CHECK_FALSE(mean_interarrival(b).has_value());

    CHECK_THROWS_WITH_AS(make_explicit({0.6, 0.6}, 0.0), doctest::Contains("1.2"),
                         std::invalid_argument);
    CHECK_THROWS_AS(make_explicit({-0.1, 1.1}, 0.0), std::invalid_argument);
}

TEST_CASE("mean inter-arrival")
{
    CHECK_FALSE(mean_interarrival(make_power_law(0.5, 0.0, 64)).has_value());
    auto law = make_power_law(2.0, 0.0, 64);
    // zeta(2) / zeta(3)
    CHECK(std::abs(*mean_interarrival(law) - 1.36843277762020588) < 1e-12);
}

TEST_CASE("simple random walk law")
{
    auto law = make_srw_law(4096);
    CHECK(law.K(1) == 0.0);
    CHECK(law.K(2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(law.K(4) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(law.K(6) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(law.K(4097) == 0.0);
    CHECK(std::abs(law.total_mass - 1.0) < 1e-12);
    CHECK(law.junction_mismatch < 1e-3);
    // K(2n) ~ n^-3/2 / sqrt(4 pi)
    const double n = 2048.0;
    CHECK(law.K(2 * 2048) * std::pow(n, 1.5) * std::sqrt(4.0 * std::numbers::pi) ==
          doctest::Approx(1.0).epsilon(1e-3));
    CHECK(law.cK == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-3));
}

TEST_CASE("persistentize")
{
    auto p = persistentize(make_explicit({0.5}, 0.5));
    CHECK_FALSE(p.was_persistent);
    CHECK(p.law.K(1) == 1.0);
    CHECK(p.h_shift == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

    auto wet = persistentize(make_power_law(0.5, 0.5, 256));
    CHECK(wet.h_shift == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(wet.law.total_mass - 1.0) < 1e-12);

    auto id = persistentize(make_explicit({0.5, 0.5}, 0.0));
    CHECK(id.was_persistent);
    CHECK(id.h_shift == 0.0);
}

TEST_CASE("tilt")
{
    auto law = make_power_law(0.5, 0.0, 64);
    auto same = tilt(law, 0.0, 0.0);
    CHECK(same.table == law.table);
    CHECK(same.total_mass == law.total_mass);

    auto g = tilt(geometric_law(), std::log(3.0), std::log(2.0));
    CHECK(std::abs(g.total_mass - 1.0) < 1e-14);

    CHECK_THROWS_AS(tilt(law, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(tilt(law, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("renewal function examples")
{
    auto u = renewal_function(make_explicit({0.5, 0.5}, 0.0), 400).u;
    CHECK(u[0] == 1.0);
    CHECK(u[1] == 0.5);
    CHECK(u[2] == 0.75);
    CHECK(u[3] == 0.625);
    CHECK(std::abs(u[400] - 2.0 / 3.0) < 1e-12);

    auto t = renewal_function(make_explicit({0.5}, 0.5), 30).u;
    for (int n = 0; n <= 30; ++n)
        CHECK(t[n] == std::ldexp(1.0, -n));

    auto law = make_power_law(0.5, 0.0, 8192);
    auto v = renewal_function(law, 8192).u;
    const double limit = 0.5 * std::sin(std::numbers::pi * 0.5) / (std::numbers::pi * law.cK);
    CHECK(v[8192] * std::sqrt(8192.0) == doctest::Approx(limit).epsilon(0.02));
}

TEST_CASE("renewal identity sum u_n Kbar(N-n) = 1")
{
    for (auto law : {make_power_law(0.5, 0.0, 128), make_power_law(1.5, 0.0, 128),
                     make_explicit({0.2, 0.3, 0.5}, 0.0), make_srw_law(64)}) {
        const int N = 512;
        auto u = renewal_function(law, N).u;
        auto kbar = law.survival(N);
        double s = 0.0;
        for (int n = 0; n <= N; ++n)
            s += u[n] * kbar[N - n];
        CHECK(std::abs(s - 1.0) < 1e-10);
    }
}

TEST_CASE("terminating renewal asymptotics")
{
    for (double alpha : {0.5, 1.5}) {
        auto law = make_power_law(alpha, 0.5, 4096);
        auto u = renewal_function(law, 4096).u;
        const double predicted = law.K(4096) / (0.5 * 0.5);
        CHECK(std::abs(u[4096] / predicted - 1.0) < 0.05);
    }
}

TEST_CASE("renewal sampler")
{
    auto det = sample_renewal(make_explicit({1.0}, 0.0), 20, 7);
    REQUIRE(det.points.size() == 21);
    for (int i = 0; i <= 20; ++i)
        CHECK(det.points[i] == i);

    // binomial test of site occupations against the renewal function
    auto law = make_explicit({0.5, 0.5}, 0.0);
    const int N = 64;
    const int samples = 100000;
    RenewalSampler sampler(law, N);
    Xoshiro256pp rng(12345);
    std::vector<int> hits(N + 1, 0);
    for (int s = 0; s < samples; ++s)
        for (auto p : sampler.sample(rng).points)
            ++hits[p];
    auto u = renewal_function(law, N).u;
    int violations = 0;
    double max_dev = 0.0;
    for (int n = 1; n <= N; ++n) {
        const double f = double(hits[n]) / samples;
        const double sd = std::sqrt(u[n] * (1 - u[n]) / samples);
        if (std::abs(f - u[n]) > 3 * sd)
            ++violations;
        max_dev = std::max(max_dev, std::abs(f - u[n]));
    }
    CHECK(max_dev < 0.01);
    CHECK(violations <= 2);

    // terminating law: |tau| = 1 with probability K(inf)
    RenewalSampler term(make_explicit({0.5}, 0.5), 50);
    int only_origin = 0;
    for (int s = 0; s < samples; ++s)
        if (term.sample(rng).points.size() == 1)
            ++only_origin;
    CHECK(std::abs(double(only_origin) / samples - 0.5) < 3 * std::sqrt(0.25 / samples));

    CHECK(sampler.draw_increment(0.5, 10) == 1);
    CHECK(sampler.draw_increment(0.5000001, 10) == 2);
    CHECK(sampler.draw_increment(0.7, 1) == 0);
}

TEST_CASE("intersection statistics")
{
    auto one = intersection_stats(make_explicit({1.0}, 0.0), 100);
    CHECK(one.divergent);
    CHECK(one.partial[100] == 100.0);

    auto a3 = intersection_stats(make_power_law(0.3, 0.0, 4096), 4096);
    CHECK_FALSE(a3.divergent);
    REQUIRE(a3.gamma2.has_value());
    CHECK(*a3.gamma2 > a3.partial.back());
    CHECK(std::abs(*a3.gamma2 / *a3.gamma2_leading - 1.0) < 0.02);
    // the extrapolation is stable in N
    auto a3b = intersection_stats(make_power_law(0.3, 0.0, 4096), 2048);
    CHECK(std::abs(*a3.gamma2 / *a3b.gamma2 - 1.0) < 2e-3);

    auto a75 = intersection_stats(make_power_law(0.75, 0.0, 4096), 4096);
    CHECK(a75.divergent);
    CHECK(a75.growth_exponent == 0.5);
    const double r1 = a75.partial[1024] / std::sqrt(1024.0);
    const double r2 = a75.partial[4096] / std::sqrt(4096.0);
    CHECK(std::abs(r2 / r1 - 1.0) < 0.1);

    CHECK_THROWS_AS(intersection_stats(make_explicit({0.5}, 0.5), 10), std::invalid_argument);
}

TEST_CASE("law text round trip")
{
    for (auto law : {make_power_law(0.3, 0.25, 32), make_srw_law(16), make_explicit({0.2, 0.8}, 0.0)}) {
        auto back = law_from_text(to_text(law));
        CHECK(back.alpha == law.alpha);
        CHECK(back.cK == law.cK);
        CHECK(back.k_infinity == law.k_infinity);
        CHECK(back.period == law.period);
        CHECK(back.table == law.table);
        CHECK(to_text(back) == to_text(law));
    }
    CHECK_THROWS_AS(law_from_text("alpha = 1\ncK = 0\nk_infinity = 0\nn_table = 2\ntable = 0.6, 0.6\n"),
                    ConfigError);
    CHECK_THROWS_AS(law_from_text("alpha = 1\ncK = 0\nk_infinity = 0\nn_table = 1\ntable = 1\nfoo = 2\n"),
                    ConfigError);
}
