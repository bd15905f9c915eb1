#include "doctest.h"

#include "pinlab/homogeneous.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace pinlab;

namespace {

InterArrivalLaw geometric_law()
{
    std::vector<double> t(60);
    for (int n = 1; n <= 60; ++n)
        t[n - 1] = std::ldexp(1.0, -n);
    return make_explicit(t, 0.0);
}

// log-log slope by least squares
double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

} // namespace

TEST_CASE("critical point")
{
    CHECK(hc0(make_power_law(0.5, 0.0, 64)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(hc0(make_power_law(0.5, 0.5, 64)) - std::log(2.0)) < 1e-12);
    CHECK(hc0(make_explicit({0.25}, 0.75)) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("geometric law closed form")
{
    auto law = geometric_law();
    for (double h : {0.1, std::log(3.0), 2.0}) {
        const auto sol = free_energy(law, h);
        // b = log(1 + (e^h - 1) / 2)
        CHECK(std::abs(sol.b - std::log(1.0 + (std::exp(h) - 1.0) / 2.0)) < 1e-12);
        CHECK(std::abs(sol.tilted_law.total_mass - 1.0) < 1e-12);
        // dF/dh = e^h / (1 + e^h)
        CHECK(std::abs(contact_fraction(law, h).value - std::exp(h) / (1.0 + std::exp(h))) < 1e-10);
    }
    CHECK(std::abs(free_energy(law, std::log(3.0)).b - std::log(2.0)) < 1e-12);
}

TEST_CASE("below and at criticality")
{
    auto law = make_power_law(0.5, 0.0, 256);
    const auto at = free_energy(law, hc0(law));
    CHECK(at.b == 0.0);
    CHECK(at.critical);
    CHECK_FALSE(at.correlation_length.has_value());
    CHECK(free_energy(law, -0.3).b == 0.0);
    CHECK(contact_fraction(law, -0.3).value == 0.0);
    auto c = contact_fraction(law, hc0(law));
    CHECK(c.critical);
    CHECK(c.value == 0.0);

    auto heavy = make_power_law(2.0, 0.0, 256);
    auto c2 = contact_fraction(heavy, hc0(heavy));
    CHECK(c2.critical);
    CHECK(c2.value == doctest::Approx(1.0 / *mean_interarrival(heavy)).epsilon(1e-12));
}

TEST_CASE("contact fraction equals the finite-difference derivative")
{
    auto law = make_power_law(0.75, 0.0, 512);
    const double h = 0.2;
    for (double eps : {1e-3, 5e-4}) {
        const double fd = (free_energy(law, h + eps).b - free_energy(law, h - eps).b) / (2 * eps);
        CHECK(std::abs(fd - contact_fraction(law, h).value) < 10 * eps * eps);
    }
}

TEST_CASE("critical asymptotics")
{
    auto k = critical_asymptotics(make_explicit({0.5, 0.5}, 0.0));
    CHECK(k.exponent == 1.0);
    CHECK(k.constant == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

    auto half = make_power_law(0.5, 0.0, 1024);
    auto a = critical_asymptotics(half);
    CHECK(a.exponent == 2.0);
    std::vector<double> d, f;
    for (double x = 1e-4; x <= 1.0001e-2; x *= std::pow(10.0, 0.25)) {
        d.push_back(x);
        f.push_back(free_energy(half, x).b);
    }
    CHECK(std::abs(fit_slope(d, f) / 2.0 - 1.0) < 0.05);
    CHECK(f.front() / (a.constant * d.front() * d.front()) == doctest::Approx(1.0).epsilon(0.05));

    CHECK_THROWS_AS(critical_asymptotics(make_power_law(1.0, 0.0, 64)), std::invalid_argument);
}

TEST_CASE("convexity and monotonicity of F(0, h)")
{
    auto law = make_power_law(0.75, 0.2, 512);
    std::vector<double> f;
    for (int i = 0; i <= 40; ++i)
        f.push_back(free_energy(law, -0.2 + 0.025 * i).b);
    for (std::size_t i = 1; i < f.size(); ++i)
        CHECK(f[i] >= f[i - 1]);
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        CHECK(f[i + 1] - 2 * f[i] + f[i - 1] >= -1e-10);
}

TEST_CASE("partition functions")
{
    auto pair = make_explicit({0.5, 0.5}, 0.0);
    auto z = partition(pair, 0.0, 2);
    CHECK(std::exp(z[2]) == doctest::Approx(0.75).epsilon(1e-15));

    auto law = make_power_law(0.5, 0.0, 256);
    auto u = renewal_function(law, 256).u;
    auto lz = partition(law, 0.0, 256);
    for (int n = 0; n <= 256; ++n)
        CHECK(std::abs(lz[n] - std::log(u[n])) < 1e-12);

    // composition sum for N = 3: e^{3h}K1^3 + 2 e^{2h} K1 K2 + e^h K3
    auto tri = make_explicit({0.2, 0.3, 0.5}, 0.0);
    const double h = 0.4;
    const double e = std::exp(h);
    const double ref = e * e * e * 0.008 + 2 * e * e * 0.2 * 0.3 + e * 0.5;
    CHECK(std::exp(partition(tri, h, 3)[3]) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("tilted factorization")
{
    auto law = make_power_law(0.75, 0.1, 512);
    for (double h : {-0.2, 0.05, 0.3, 1.0}) {
        const auto sol = free_energy(law, h);
        auto lz = partition(law, h, 512);
        auto ut = renewal_function(sol.tilted_law, 512).u;
        for (int n = 1; n <= 512; ++n)
            CHECK(std::abs(lz[n] - sol.b * n - std::log(ut[n])) < 1e-9);
    }
}

TEST_CASE("free boundary bounds and sharp asymptotics")
{
    for (auto law : {geometric_law(), make_power_law(0.5, 0.0, 512), make_power_law(1.5, 0.0, 512)}) {
        for (double h : {0.05, 0.3, 0.69}) {
            const double F = free_energy(law, h).b;
            auto zf = partition(law, h, 1024, Boundary::free);
            auto zc = partition(law, h, 1024);
            for (int n = 0; n <= 1024; ++n) {
                CHECK(zf[n] >= -h + F * n - 1e-10);
                // the sum over e^{-F m} gives 1/(1 - e^{-F})
                CHECK(zf[n] <= F * n - std::log(1.0 - std::exp(-F)) + 1e-10);
                CHECK(zf[n] >= zc[n] - 1e-12);
            }
        }
    }

    auto law = geometric_law();
    const double h = 0.3;
    const double F = free_energy(law, h).b;
    const double dF = contact_fraction(law, h).value;
    const double limit = (1 - std::exp(-h)) * dF / (1 - std::exp(-F));
    auto zf = partition(law, h, 4096, Boundary::free);
    CHECK(std::exp(zf[4096] - F * 4096) == doctest::Approx(limit).epsilon(0.02));
}

TEST_CASE("correlation length governs relaxation")
{
    auto law = make_power_law(1.5, 0.0, 1024);
    const double h = 0.05;
    const auto sol = free_energy(law, h);
    const double F = sol.b;
    const double rate = 1.0 / moment_sum(sol.tilted_law, 1.0, 1.0).value;
    const int n1 = static_cast<int>(std::round(8.0 / F));
    const int n2 = static_cast<int>(std::round(16.0 / F));
    auto u = renewal_function(sol.tilted_law, n2).u;
    // u_n - 1/E tau ~ C n^-(1+alpha) e^{-F n}
    auto g = [&](int n) { return std::log(std::abs(u[n] - rate)) + 2.5 * std::log(double(n)); };
    const double slope = (g(n2) - g(n1)) / (n2 - n1);
    CHECK(std::abs(-slope / F - 1.0) < 0.1);
}

TEST_CASE("grid csv")
{
    auto rows = homogeneous_grid(geometric_law(), {-1.0, std::log(3.0)});
    const auto csv = to_csv(rows);
    CHECK(csv.rfind("h,F,contact_fraction,correlation_length\n-1,0,0,inf\n", 0) == 0);
}
