#include "doctest.h"

#include "oracles.hpp"
#include "pinlab/quenched.hpp"
#include "pinlab/random.hpp"
#include "pinlab/sampler.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

using namespace pinlab;

TEST_CASE("disorder stream")
{
    auto a = sample_disorder(99, 1000, 1.0, 0.0);
    auto b = sample_disorder(99, 1000, 1.0, 0.0);
    CHECK(a.omega == b.omega);
    CHECK(sample_disorder(100, 1000, 1.0, 0.0).omega != a.omega);

    auto big = sample_disorder(2024, 1000000, 1.0, 0.0);
    double m = 0.0, s2 = 0.0;
    for (double w : big.omega)
        m += w;
    m /= big.omega.size();
    for (double w : big.omega)
        s2 += (w - m) * (w - m);
    s2 /= big.omega.size() - 1;
    CHECK(std::abs(m) < 0.003);
    CHECK(std::abs(s2 - 1.0) < 0.005);
}

TEST_CASE("log partition against composition enumeration")
{
    auto law = make_power_law(0.6, 0.1, 64);
    Xoshiro256pp rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double beta = 2.0 * uniform01(rng);
        const double h = 2.0 * uniform01(rng) - 1.0;
        const int N = 1 + trial % 12;
        auto d = sample_disorder(1000 + trial, N, beta, h);
        auto t = log_partition(law, d, N);
        auto k = law.weights(N);
        std::vector<double> xi(N + 1, 1.0);
        for (int n = 1; n <= N; ++n)
            xi[n] = std::exp(d.log_xi(n));
        for (int n = 1; n <= N; ++n) {
            const double ref = oracle::constrained_partition(k, xi, n);
            CHECK(std::abs(std::exp(t.logZc[n]) / ref - 1.0) < 1e-10);
        }
        CHECK(t.logZc[1] == doctest::Approx(d.log_xi(1) + std::log(law.K(1))).epsilon(1e-14));
    }
}

TEST_CASE("beta = 0 reduces to the homogeneous model")
{
    auto law = make_power_law(0.75, 0.0, 256);
    auto d = sample_disorder(1, 256, 0.0, 0.15);
    auto t = log_partition(law, d, 256);
    auto z = partition(law, 0.15, 256);
    for (int n = 0; n <= 256; ++n)
        CHECK(std::abs(t.logZc[n] - z[n]) < 1e-10);
    CHECK(std::abs(t.logZf - log_free_partition(law, 0.15, 256)) < 1e-10);
}

TEST_CASE("pathwise bounds and superadditivity")
{
    auto law = make_power_law(0.5, 0.0, 512);
    const KernelCache cache(law, 512);
    for (int r = 0; r < 10; ++r) {
        auto d = sample_disorder(stream_seed(7, r), 512, 1.0, -0.2);
        auto t = log_partition(cache, d, 512);
        auto s = suffix_partition(cache, d, 512);
        for (int n = 1; n <= 512; ++n)
            CHECK(t.logZc[n] >= d.log_xi(n) + law.log_K(n) - 1e-12);
        CHECK(t.logZf >= t.logZc[512] - 1e-12);
        for (int M = 0; M <= 512; ++M)
            CHECK(t.logZc[512] >= t.logZc[M] + s.logZ_suffix[M] - 1e-9);
    }
}

TEST_CASE("free energy estimates")
{
    auto law = make_power_law(0.75, 0.0, 1024);
    auto e0 = free_energy_mc(law, 0.0, 0.1, 1024, 8, 1);
    CHECK(e0.std_error == 0.0);
    // finite-size offset log(u^tilt_N) / N
    CHECK(std::abs(e0.value - free_energy(law, 0.1).b) < 5.0 / 1024);

    for (double h : {-0.6, -0.2, 0.2}) {
        auto e = free_energy_mc(law, 1.0, h, 512, 40, 11);
        const double ann = annealed_reference(law, 1.0, h).F_ann;
        CHECK(e.value <= ann + 3 * e.std_error);
        CHECK(e.lower_bound_certified <= e.value + 3 * e.std_error);
        CHECK(e.value >= -std::abs(h) - 3);
    }

    // common random numbers: log Z is nondecreasing in h replica by replica
    auto lo = free_energy_mc(law, 1.0, -0.1, 256, 20, 3);
    auto hi = free_energy_mc(law, 1.0, 0.1, 256, 20, 3);
    CHECK(hi.value >= lo.value);
}

TEST_CASE("thread count does not change estimates")
{
    auto law = make_power_law(0.5, 0.0, 256);
    auto a = free_energy_mc(law, 1.0, 0.0, 256, 17, 42, 1);
    auto b = free_energy_mc(law, 1.0, 0.0, 256, 17, 42, 3);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.lower_bound_certified == b.lower_bound_certified);
}

TEST_CASE("annealed partition function")
{
    auto law = make_power_law(0.5, 0.0, 64);
    const double beta = 0.6, h = -0.1;
    const KernelCache cache(law, 64);
    const int R = 10000;
    double m = 0.0, m2 = 0.0;
    for (int r = 0; r < R; ++r) {
        auto d = sample_disorder(stream_seed(77, r), 64, beta, h);
        const double z = std::exp(log_partition(cache, d, 64).logZc[64]);
        m += z;
        m2 += z * z;
    }
    m /= R;
    const double se = std::sqrt((m2 / R - m * m) / R);
    const double exact = std::exp(partition(law, h + beta * beta / 2, 64)[64]);
    CHECK(std::abs(m - exact) < 3 * se);
    CHECK(annealed_reference(law, 1.0, 0.0).hc_ann == doctest::Approx(-0.5).epsilon(1e-12));
    auto a0 = annealed_reference(law, 0.0, 0.3);
    CHECK(a0.F_ann == free_energy(law, 0.3).b);
}

TEST_CASE("overlap moment against subset enumeration")
{
    for (auto law : {make_explicit({0.2, 0.3, 0.5}, 0.0), make_power_law(0.4, 0.0, 16)}) {
        const int N = 8;
        auto p = oracle::free_subset_law(law.weights(N), law.survival(N), N);
        for (double c : {0.1, 0.7}) {
            double ref = 0.0;
            for (std::uint32_t a = 0; a < p.size(); ++a)
                for (std::uint32_t b = 0; b < p.size(); ++b)
                    ref += p[a] * p[b] * std::exp(c * std::popcount(a & b));
            CHECK(overlap_moment(law, c, N) == doctest::Approx(ref).epsilon(1e-12));
        }
    }
}

TEST_CASE("variance at the annealed critical point")
{
    auto law = make_power_law(0.3, 0.0, 2048);
    auto v0 = variance_at_annealed_critical(law, 0.0, 512, 8, 1);
    CHECK(v0.mc_variance == 0.0);
    CHECK(v0.exact_variance == 0.0);

    auto v = variance_at_annealed_critical(law, 0.2, 512, 400, 9);
    REQUIRE(v.gamma2.has_value());
    CHECK(v.beta0 == doctest::Approx(std::sqrt(std::log((1 + *v.gamma2) / *v.gamma2))));
    CHECK(std::abs(v.mc_variance - v.exact_variance) < 3 * v.mc_std_error);
    REQUIRE(v.analytic_limit.has_value());
    CHECK(v.exact_variance < *v.analytic_limit);
    // small beta expansion gamma2 beta^2
    auto small = variance_at_annealed_critical(law, 0.02, 64, 4, 1);
    CHECK(*small.analytic_limit / (*small.gamma2 * 0.0004) == doctest::Approx(1.0).epsilon(0.01));

    auto heavy = variance_at_annealed_critical(make_power_law(0.75, 0.0, 256), 0.2, 256, 8, 1);
    CHECK(heavy.divergent);
    CHECK_FALSE(heavy.analytic_limit.has_value());
    CHECK_THROWS_AS(variance_at_annealed_critical(make_power_law(0.3, 0.5, 64), 0.2, 64, 8, 1),
                    std::invalid_argument);
}

TEST_CASE("second moment window")
{
    auto law = make_power_law(0.3, 0.0, 1024);
    auto rep = second_moment_window(law, 0.2, 0.2, 1.0, 200, 5);
    CHECK(rep.N0 == static_cast<std::int64_t>(std::round(1.0 / free_energy(persistentize(law).law, 0.2).b)));
    CHECK(rep.T1 >= 1.0);
    CHECK(rep.mean_Z >= std::exp(-0.2 + rep.F_delta * rep.N0) * 0.999);
    CHECK(rep.mc_ratio <= rep.bound + 3 * rep.mc_ratio_std_error);
    CHECK(std::abs(rep.mc_mean_Z / rep.mean_Z - 1.0) < 0.05);
    CHECK_THROWS_AS(second_moment_window(law, 0.2, 0.0, 1.0, 10, 5), std::invalid_argument);
}

TEST_CASE("FLNO prediction")
{
    auto law = make_power_law(0.3, 0.0, 256);
    auto p0 = flno_prediction(law, 0.0, 0.05);
    CHECK(p0.prediction == p0.F0);
    auto p = flno_prediction(law, 0.2, 0.05);
    CHECK(p.prediction < p.F0);
    CHECK(p.simplified > p.prediction);
}

TEST_CASE("critical scan")
{
    auto law = make_power_law(0.75, 0.0, 256);
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i)
        grid.push_back(-0.6 + 0.1 * i);
    auto s0 = critical_scan(law, 0.0, grid, 256, 4, 3.0, 1);
    REQUIRE(s0.bracket.right.has_value());
    CHECK(s0.bracket.left <= 0.0);
    CHECK(*s0.bracket.right >= 0.0);

    auto s = critical_scan(law, 1.0, grid, 256, 20, 3.0, 1);
    CHECK(s.bracket.left == doctest::Approx(-0.5));
    if (s.bracket.right) {
        CHECK(*s.bracket.right <= 0.0);
        CHECK(*s.bracket.right >= s.bracket.left);
    }
    CHECK(to_csv(s.rows).rfind("h,mean_log_z,std_error,localized\n", 0) == 0);
}
