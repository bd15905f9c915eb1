#include "pinlab/homogeneous.hpp"

#include "pinlab/kv.hpp"
#include "pinlab/recursion.hpp"

#include <cmath>
#include <stdexcept>

namespace pinlab {

namespace {

constexpr double critical_tol = 1e-12;

// sum_n exp(h - b n) K(n)
double tilted_mass(const InterArrivalLaw& law, double h, double b)
{
    return std::exp(h) * moment_sum(law, 1.0, 0.0, b).value;
}

double tilted_mass_derivative(const InterArrivalLaw& law, double h, double b)
{
    return -std::exp(h) * moment_sum(law, 1.0, 1.0, b).value;
}

} // namespace

double hc0(const InterArrivalLaw& law) { return -std::log(law.total_mass); }

HomogeneousSolution free_energy(const InterArrivalLaw& law, double h, double tol)
{
    if (!(tol > 0.0))
        throw std::invalid_argument("free_energy: tol must be > 0");
    if (!std::isfinite(h))
        throw std::invalid_argument("free_energy: h must be finite");
    HomogeneousSolution sol;
    sol.h = h;
    sol.hc0 = hc0(law);
    const double mass0 = std::exp(h) * law.total_mass;
    sol.critical = std::abs(mass0 - 1.0) < critical_tol;

    if (h <= sol.hc0 || sol.critical) {
        sol.b = 0.0;
        sol.tilted_law = tilt(law, h, 0.0);
        sol.residual = 0.0;
        return sol;
    }

    double lo = 0.0;
    double hi = h - sol.hc0 + 1.0;
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        const double g = tilted_mass(law, h, mid);
        if (g > 1.0)
            lo = mid;
        else if (g < 1.0)
            hi = mid;
        else {
            lo = hi = mid;
            break;
        }
    }
    double b = 0.5 * (lo + hi);
    for (int it = 0; it < 30; ++it) {
        const double g = tilted_mass(law, h, b) - 1.0;
        if (g == 0.0)
            break;
        const double step = g / tilted_mass_derivative(law, h, b);
        double next = b - step;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (g > 0.0)
            lo = std::max(lo, b);
        else
            hi = std::min(hi, b);
        if (next == b || std::abs(next - b) <= 1e-16 * b)
            break;
        b = next;
    }
    sol.b = b;
    sol.residual = std::abs(tilted_mass(law, h, b) - 1.0);
    if (sol.residual > tol)
        throw std::runtime_error("free_energy: tolerance unreachable, residual " +
                                 kv::format_double(sol.residual));
    sol.tilted_law = tilt(law, h, b);
    sol.correlation_length = 1.0 / b;
    return sol;
}

std::vector<double> partition(const InterArrivalLaw& law, double h, std::int64_t N,
                              Boundary boundary)
{
    if (N < 0)
        throw std::invalid_argument("partition: N must be >= 0");
    const auto k = law.weights(N);
    const std::vector<double> w(static_cast<std::size_t>(N + 1), h);
    auto log_zc = log_renewal_recursion(k, w);
    if (boundary == Boundary::constrained)
        return log_zc;

    const auto kbar = law.survival(N);
    std::vector<double> log_zf(log_zc.size());
    for (std::size_t n = 0; n < log_zc.size(); ++n)
        log_zf[n] = log_free_from_constrained(std::span(log_zc).first(n + 1), kbar);
    return log_zf;
}

double log_free_partition(const InterArrivalLaw& law, double h, std::int64_t N)
{
    const auto log_zc = partition(law, h, N);
    return log_free_from_constrained(log_zc, law.survival(N));
}

ContactFraction contact_fraction(const InterArrivalLaw& law, double h)
{
    const auto sol = free_energy(law, h);
    ContactFraction out;
    out.critical = sol.critical;
    if (sol.b > 0.0 || sol.critical) {
        const double mean = moment_sum(sol.tilted_law, 1.0, 1.0).value;
        out.value = std::isfinite(mean) ? 1.0 / mean : 0.0;
    }
    return out;
}

CriticalAsymptotics critical_asymptotics(const InterArrivalLaw& law)
{
    if (!law.has_tail() || law.alpha > 1.0) {
        const double mean = moment_sum(law, 1.0, 1.0).value;
        return {1.0, law.total_mass / mean};
    }
    if (law.alpha == 1.0)
        throw std::invalid_argument("critical_asymptotics: alpha = 1 is not supported");
    const double a = law.alpha;
    const double c2 = std::pow(a * law.total_mass / (law.cK * std::tgamma(1.0 - a)), 1.0 / a);
    return {1.0 / a, c2};
}

std::vector<HomogeneousRow> homogeneous_grid(const InterArrivalLaw& law,
                                             const std::vector<double>& h_grid)
{
    std::vector<HomogeneousRow> rows;
    rows.reserve(h_grid.size());
    for (double h : h_grid) {
        const auto sol = free_energy(law, h);
        rows.push_back({h, sol.b, contact_fraction(law, h).value, sol.correlation_length});
    }
    return rows;
}

std::string to_csv(const std::vector<HomogeneousRow>& rows)
{
    std::string out = "h,F,contact_fraction,correlation_length\n";
    for (const auto& r : rows) {
        out += kv::format_double(r.h) + "," + kv::format_double(r.free_energy) + "," +
               kv::format_double(r.contact_fraction) + "," +
               (r.correlation_length ? kv::format_double(*r.correlation_length) : "inf") + "\n";
    }
    return out;
}

} // namespace pinlab
