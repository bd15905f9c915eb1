#pragma once

// The beta = 0 model: free energy, critical point, partition functions.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinlab/kernel.hpp"

namespace pinlab {

/// h_c(0) = -log sum_n K(n).
double hc0(const InterArrivalLaw& law);

struct HomogeneousSolution {
    double h = 0.0;
    double b = 0.0;   // F(0, h)
    double hc0 = 0.0;
    InterArrivalLaw tilted_law; // n -> exp(h - b n) K(n)
    std::optional<double> correlation_length; // 1/b; empty when b == 0
    bool critical = false;
    double residual = 0.0; // |sum exp(h - b n) K(n) - 1| for b > 0
};

/// Solves sum_n exp(h - b n) K(n) = 1 for b > 0, or returns b = 0 when h <= hc0.
HomogeneousSolution free_energy(const InterArrivalLaw& law, double h, double tol = 1e-12);

enum class Boundary { constrained, free };

/// log Z_n(h) for n = 0..N. With the free boundary entry n is log Z^f_n.
std::vector<double> partition(const InterArrivalLaw& law, double h, std::int64_t N,
                              Boundary boundary = Boundary::constrained);

/// log Z^f_N(h) for the last N only.
double log_free_partition(const InterArrivalLaw& law, double h, std::int64_t N);

struct ContactFraction {
    double value = 0.0;
    bool critical = false;
};

/// dF(0,h)/dh = 1 / E_b[tau_1] under the tilted law.
ContactFraction contact_fraction(const InterArrivalLaw& law, double h);

struct CriticalAsymptotics {
    double exponent = 0.0;
    double constant = 0.0;
};

/// F(0, hc0 + delta) ~ constant * delta^exponent as delta -> 0. Throws for alpha == 1.
CriticalAsymptotics critical_asymptotics(const InterArrivalLaw& law);

struct HomogeneousRow {
    double h = 0.0;
    double free_energy = 0.0;
    double contact_fraction = 0.0;
    std::optional<double> correlation_length;
};

std::vector<HomogeneousRow> homogeneous_grid(const InterArrivalLaw& law,
                                             const std::vector<double>& h_grid);

/// Header `h,F,contact_fraction,correlation_length`; infinite lengths print as `inf`.
std::string to_csv(const std::vector<HomogeneousRow>& rows);

} // namespace pinlab
