#pragma once

/// @file blowup.hpp
/// @brief Rescalings u^(x,r)(y) = u(x + r y) / r onto a fixed reference grid,
/// blow-up sequences along a radius ladder, and how fast they settle.

#include <string>
#include <vector>

#include "fblab/functional.hpp"
#include "fblab/lattice.hpp"

namespace fblab::blowup {

using functional::WeightField;
using lattice::GridDomain;
using lattice::GridFunction;

/// Nodal values u_interp(x + r node) / r. Throws ContainmentError if the image of the
/// target box leaves u's grid.
GridFunction rescale(const GridFunction& u, const Point& x, double r, const GridDomain& target);

/// q(x + r y), resampled without amplitude scaling; the phase mode is kept.
WeightField rescale_weights(const WeightField& w, const Point& x, double r, const GridDomain& target);

/// Cube [-R, R]^dim with res nodes per axis.
GridDomain reference_grid(int dim, double R, std::size_t res);

struct BlowupSequence {
    Point base_point{};
    std::vector<double> radii;
    std::vector<GridFunction> members;
    double R = 1.0;
    std::size_t res = 0;
    GridDomain grid;
    double center_value = 0.0;  ///< u(x); member k has u_k(0) = center_value / r_k
};

/// Rescales u at every radius onto reference_grid(dim, R, res). Radii must be positive and
/// strictly decreasing, and |u(x)| <= zero_tol; zero_tol < 0 selects 10 h max(1, L) with L
/// the gradient bound of u on B(x, 2h).
BlowupSequence build_sequence(const GridFunction& u, const Point& x, const std::vector<double>& radii, double R,
                              std::size_t res, double zero_tol = -1.0);

/// r_k = r0 2^-k for k = 0..count-1.
std::vector<double> dyadic_radii(double r0, int count);

struct ConvergenceReport {
    std::vector<double> sup_dist;      ///< sup over nodes of B(0, 0.9R) of |u_k - u_last|
    std::vector<double> grad_l2_dist;  ///< L2 norm of grad(u_k - u_last) on B(0, 0.9R)
    std::vector<double> energy_gap;    ///< |J(u_k) - J(u_last)| on B(0, R/2), frozen weights
};

/// One entry per member, the last member standing in for the limit. w_frozen must live
/// on the sequence's reference grid.
ConvergenceReport convergence_report(const BlowupSequence& seq, const WeightField& w_frozen);

struct EnergyIdentity {
    double lhs = 0.0;  ///< J of the rescaled pair on `ball`
    double rhs = 0.0;  ///< r^-n J(u, w, x + r ball)
};

/// Compares the functional of the rescaled pair on `ball` with the scaled functional of
/// the original on the image ball. The rescaled function lives on a grid of spacing h/r
/// whose nodes map onto nodes of u's grid.
EnergyIdentity rescaling_energy_identity(const GridFunction& u, const WeightField& w, const Point& x, double r,
                                         const Ball& ball);

/// Same identity with the rescaled function sampled on an explicit grid.
EnergyIdentity rescaling_energy_identity(const GridFunction& u, const WeightField& w, const Point& x, double r,
                                         const Ball& ball, const GridDomain& target);

/// Manifest JSON with base_point, radii, R, res and the member file names.
std::string manifest_json(const BlowupSequence& seq, const std::vector<std::string>& member_files);

/// Writes member_<k>.fbgf files and manifest.json into dir (created if missing).
/// Returns the member file names.
std::vector<std::string> save_sequence(const BlowupSequence& seq, const std::string& dir);

std::string to_json(const ConvergenceReport& report);

}  // namespace fblab::blowup
