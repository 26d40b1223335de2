#pragma once

/// @file functional.hpp
/// @brief Localized two-phase (and one-phase) free-boundary energy on balls,
/// the competitor families used to probe almost-minimality, and the defect
/// J(u) - (1 + kappa r^alpha) J(v).

#include "fblab/lattice.hpp"

namespace fblab::functional {

using lattice::GridDomain;
using lattice::GridFunction;

enum class Phase { one_phase, two_phase };
enum class Sign { plus, minus };

/// Pair of nonnegative nodal weights (q+, q-). In one-phase mode q- is identically zero.
class WeightField {
public:
    WeightField() = default;

    static WeightField one_phase(GridFunction q_plus);
    static WeightField two_phase(GridFunction q_plus, GridFunction q_minus);
    /// Constant weights; q_minus must be 0 for one_phase.
    static WeightField constant(const GridDomain& g, double q_plus, double q_minus, Phase mode);

    [[nodiscard]] const GridFunction& q_plus() const noexcept { return q_plus_; }
    [[nodiscard]] const GridFunction& q_minus() const noexcept { return q_minus_; }
    [[nodiscard]] const GridFunction& q(Sign s) const noexcept { return s == Sign::plus ? q_plus_ : q_minus_; }
    [[nodiscard]] Phase mode() const noexcept { return mode_; }
    [[nodiscard]] const GridDomain& domain() const noexcept { return q_plus_.domain(); }

private:
    WeightField(GridFunction qp, GridFunction qm, Phase mode);

    GridFunction q_plus_;
    GridFunction q_minus_;
    Phase mode_ = Phase::two_phase;
};

/// Constant weights equal to w's interpolated values at `point`, on the same grid.
WeightField freeze_weights(const WeightField& w, const Point& point);

/// Almost-minimality gauge h(r) = kappa r^alpha.
class AlmostMinParams {
public:
    AlmostMinParams() = default;
    /// kappa >= 0, alpha in (0, 1].
    AlmostMinParams(double kappa, double alpha);

    [[nodiscard]] double kappa() const noexcept { return kappa_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    /// alpha / (dim + 2 + alpha), the Hölder exponent of the gradient away from the zero set.
    [[nodiscard]] double beta(int dim) const noexcept { return alpha_ / (dim + 2 + alpha_); }
    [[nodiscard]] double gauge(double r) const { return kappa_ * std::pow(r, alpha_); }

private:
    double kappa_ = 0.0;
    double alpha_ = 1.0;
};

/// int_B |grad u|^2.
double energy(const GridFunction& u, const Ball& ball);

/// Fraction of the cell's subsample points where the interpolated u is > 0 (plus) or < 0 (minus).
[[nodiscard]] double cell_sign_fraction(const GridFunction& u, const MultiIndex& c, Sign sign);

/// int_B q_±^2 chi_{±u > 0}, weights taken at cell centres.
double measure_term(const GridFunction& u, const WeightField& w, const Ball& ball, Sign sign);

/// Localized functional: energy plus q+ term, plus q- term in two-phase mode.
double J(const GridFunction& u, const WeightField& w, const Ball& ball);

/// int_B |grad u^±|^2.
double sign_energy(const GridFunction& u, const Ball& ball, Sign sign);

/// v = u off {±u > 0}, v = (1 + lambda phi) u on it. Requires phi >= 0, phi = 0
/// at nodes outside the open ball, and |lambda phi| < 1 everywhere.
GridFunction competitor_scale(const GridFunction& u, const Ball& ball, double lambda, const GridFunction& phi,
                              Sign sign);

/// Constant of the Green function of the Laplacian: 1/(2 pi) in 2D, 1/(n(n-2) omega_n) in 3D.
[[nodiscard]] double green_constant(int dim);

/// Truncated Green cutoff: 0 outside B(x,r), G_r(y) on B(x,r) \ B(x,s), G_r at radius s inside B(x,s),
/// with G_r = c3 (|y-x|^{-1} - r^{-1}) in 3D and (1/2pi) log(r/|y-x|) in 2D. Requires 0 < s < r.
GridFunction competitor_green_cutoff(const GridDomain& g, const Ball& ball, double s);

/// Tent cutoff 1 - |y-x|/r on the ball, 0 outside.
GridFunction competitor_tent_cutoff(const GridDomain& g, const Ball& ball);

/// u + amplitude * (1 - |y-c|^2/rho^2)_+^3: a smooth bump supported in B(c, rho).
/// The support must lie inside the open ball.
GridFunction competitor_bump(const GridFunction& u, const Ball& ball, const Point& c, double rho,
                             double amplitude);

/// J(u) - (1 + kappa r^alpha) J(v). Throws InvalidArgument unless v == u at every
/// node outside the open ball.
double defect(const GridFunction& u, const GridFunction& v, const WeightField& w, const AlmostMinParams& params,
              const Ball& ball);

/// Discretization slack for defect tests: 10 h (J + 1).
[[nodiscard]] double defect_slack(const GridDomain& g, double j_value);

/// The lambda-linear coefficient of int_B |grad v^±|^2 for v = competitor_scale(u, ..., lambda, phi, ±),
/// computed on the lattice as 2 int_B <grad u^±, grad(phi u^±)>.
double scaling_bracket(const GridFunction& u, const GridFunction& phi, const Ball& ball, Sign sign);

/// Same coefficient in product-rule form 2 [int phi |grad u^±|^2 + int u^± <grad u^±, grad phi>],
/// with phi and u^± taken at cell centres. Agrees with scaling_bracket up to O(h).
double scaling_bracket_product_rule(const GridFunction& u, const GridFunction& phi, const Ball& ball, Sign sign);

}  // namespace fblab::functional
