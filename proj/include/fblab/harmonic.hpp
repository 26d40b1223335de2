#pragma once

#include <functional>

#include "fblab/lattice.hpp"

namespace fblab::harmonic {

/// Energy-minimizing replacement of u inside a ball.
struct ExtensionResult {
    lattice::GridFunction extension;  ///< bitwise equal to the input outside the open ball
    int iterations = 0;
    double residual = 0.0;            ///< max |discrete Laplacian| over interior ball nodes
};

/// Maximum number of conjugate-gradient iterations before giving up.
inline constexpr int kMaxIterations = 1'000'000;

/// Discrete harmonic extension of u from the nodes outside the open ball.
///
/// Unknowns are the nodes strictly inside B; every other node keeps its value and
/// acts as Dirichlet data. The 5/7-point Laplacian with weights 1/h_i^2 is solved
/// by unpreconditioned conjugate gradients, starting from u itself, until the
/// max-norm of the residual drops to `tol`.
ExtensionResult harmonic_extension(const lattice::GridFunction& u, const Ball& ball, double tol);

/// Nodes strictly inside the open ball (the extension's unknowns), in lexicographic order.
std::vector<std::size_t> interior_ball_nodes(const lattice::GridDomain& g, const Ball& ball);

/// Nodes outside the open ball that neighbour an interior node along a lattice edge.
std::vector<std::size_t> ring_nodes(const lattice::GridDomain& g, const Ball& ball);

/// max over interior ball nodes of |sum_i (u(k+e_i) - 2u(k) + u(k-e_i)) / h_i^2|.
double laplacian_residual(const lattice::GridFunction& u, const Ball& ball);

/// Value at `point` (relative to the disk centre) of the harmonic function on the
/// disk of `radius` with boundary values boundary(theta), by trapezoid quadrature of
/// the Poisson integral with n_quad nodes. Throws if |point| >= radius or n_quad < 64.
double poisson_disk_value(const std::function<double(double)>& boundary, const Point& point, double radius,
                          int n_quad);

/// | int_B |grad u*|^2 - int_B <grad u, grad u*> |, with lattice ball quadrature.
double orthogonality_defect(const lattice::GridFunction& u, const ExtensionResult& ext, const Ball& ball);

}  // namespace fblab::harmonic
