#pragma once

/// @file solver.hpp
/// @brief Discrete minimizers of the free-boundary functional with Dirichlet data.
///
/// The characteristic functions chi_{u>0}, chi_{u<0} are replaced by the smoothed
/// Heaviside H_eps(t) = (1 + tanh(t/eps))/2 and eps is driven down a decreasing
/// schedule. Each stage is a smooth unconstrained problem over the interior nodes,
/// solved by a Laplacian-preconditioned descent with Armijo backtracking and warm
/// started from the previous stage. The first stage starts from the discrete
/// harmonic extension of the boundary data.

#include <iosfwd>
#include <vector>

#include "fblab/functional.hpp"
#include "fblab/lattice.hpp"

namespace fblab::solver {

using functional::AlmostMinParams;
using functional::WeightField;
using lattice::GridDomain;
using lattice::GridFunction;

enum class StepRule { fixed, backtracking };

struct SolveConfig {
    std::vector<double> epsilons;  ///< strictly decreasing smoothing widths, last >= grid spacing
    int max_outer = 200;           ///< descent iterations per stage
    double grad_tol = 1e-8;        ///< max-norm of the interior gradient per nodal volume
    StepRule step_rule = StepRule::backtracking;

    /// Throws InvalidArgument if the schedule is empty, not strictly decreasing, or
    /// ends below the grid spacing, or if max_outer/grad_tol are not positive.
    void validate(const GridDomain& g) const;

    /// Fractions {0.2, 0.1, 0.05, 0.02, 0.01} of the domain diameter that exceed
    /// final_width, continued by halving, and ending exactly at final_width.
    /// final_width defaults to the largest grid spacing.
    static SolveConfig defaults_for(const GridDomain& g, double final_width = 0.0);
};

struct StageLog {
    double epsilon = 0.0;
    std::vector<double> j_eps;      ///< smoothed energy after each accepted iterate (entry 0 = start)
    std::vector<double> grad_norm;  ///< matching gradient norms
};

struct SolveResult {
    GridFunction u;
    std::vector<StageLog> stages;
    double grad_norm_final = 0.0;
    int stage_count = 0;

    /// Per stage, the smoothed energy history.
    [[nodiscard]] std::vector<std::vector<double>> j_history() const;
};

/// Minimizes the smoothed functional on `domain` with boundary nodes pinned to
/// boundary(x). With nonneg = true (one-phase), the boundary data must be >= 0,
/// q_minus must vanish, and u is projected onto u >= 0 after each stage.
/// Throws NonFiniteError on non-finite boundary data and DivergenceError if the
/// smoothed energy grows across a stage.
SolveResult minimize(const GridDomain& domain, const WeightField& w, const lattice::ScalarFunction& boundary,
                     const SolveConfig& cfg, bool nonneg);

/// Smoothed energy J_eps of u over the whole grid (edge-form Dirichlet energy plus
/// lumped-mass smoothed measure terms).
double smoothed_energy(const GridFunction& u, const WeightField& w, double eps);

/// Discrete harmonic function on the whole rectangle with the given boundary values.
GridFunction harmonic_fill(const GridDomain& domain, const lattice::ScalarFunction& boundary);

/// Columns stage, epsilon, iter, J_eps, grad_norm; header line first.
void write_convergence_csv(std::ostream& os, const SolveResult& result);

/// A computed minimizer packaged for almost-minimality tests against frozen weights.
struct AlmostMinimizer {
    GridFunction u;
    WeightField frozen;
    AlmostMinParams params;
    Ball ball;
};

/// Tags base.u (unchanged) with frozen weights and the gauge it is expected to satisfy on `ball`.
AlmostMinimizer make_almost_minimizer(const SolveResult& base, const WeightField& w_frozen,
                                      const AlmostMinParams& params, const Ball& ball);

}  // namespace fblab::solver
