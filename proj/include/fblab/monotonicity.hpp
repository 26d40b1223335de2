#pragma once

/// @file monotonicity.hpp
/// @brief Kernel-weighted one-sided energies A+(r), A-(r), the product functional
/// Phi(r) = r^-4 A+ A-, radial traces of Phi and how far they stray from monotone.

#include <iosfwd>
#include <vector>

#include "fblab/functional.hpp"
#include "fblab/lattice.hpp"

namespace fblab::monotonicity {

using functional::Sign;
using lattice::GridDomain;
using lattice::GridFunction;

/// Integral over the ball of |grad u+-|^2 |y - x|^(2-n). The kernel is evaluated at cell
/// centres with the distance clamped below at kernel_floor (h/2 when <= 0); in 2D it is 1.
double A_pm(const GridFunction& u, const Ball& ball, Sign sign, double kernel_floor = 0.0);

/// r^-4 A+(r) A-(r).
double phi(const GridFunction& u, const Point& center, double r);

struct MonotonicityTrace {
    Point center{};
    std::vector<double> radii;
    std::vector<double> A_plus;
    std::vector<double> A_minus;
    std::vector<double> phi;
    double delta_exponent = 0.0;
    double violation = 0.0;     ///< max over s < r of (Phi(s) - Phi(r))+ / r^delta
    double center_value = 0.0;  ///< u at the centre; ideally 0
};

/// Geometric ladder of `count` radii from r_min to r_max. Requires B(center, 2 r_max) in
/// the grid, r_min >= 4h, count >= 2 and 0 < delta < alpha / (4(n + 1)).
MonotonicityTrace trace(const GridFunction& u, const Point& center, double r_min, double r_max, int count,
                        double delta, double alpha = 1.0);

/// Mean of Phi over the smallest ceil(count/4) radii. Needs at least four rungs.
double phi_limit_estimate(const MonotonicityTrace& t);

/// Columns r, A_plus, A_minus, phi; header line first.
void write_trace_csv(std::ostream& os, const MonotonicityTrace& t);

}  // namespace fblab::monotonicity
