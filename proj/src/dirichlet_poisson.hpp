#pragma once

// Exact solver for the 5/7-point Dirichlet Laplacian on the interior nodes of a
// rectangular grid, by a separable sine transform (DST-I). Internal to the solver.

#include <memory>
#include <span>
#include <vector>

#include "fblab/lattice.hpp"

namespace fblab::solver::detail {

class DirichletPoisson {
public:
    explicit DirichletPoisson(const lattice::GridDomain& g);
    ~DirichletPoisson();
    DirichletPoisson(const DirichletPoisson&) = delete;
    DirichletPoisson& operator=(const DirichletPoisson&) = delete;

    /// Interior unknown count, (n0-2)(n1-2)[(n2-2)].
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

    /// In place: rhs -> z with (-Delta_h) z = rhs, z = 0 on the boundary.
    void solve(std::span<double> rhs_interior);

private:
    std::size_t size_ = 0;
    std::vector<double> eigen_;
    double scale_ = 1.0;
    double* buffer_ = nullptr;
    void* plan_ = nullptr;
};

}  // namespace fblab::solver::detail
