#include "dirichlet_poisson.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numbers>

namespace fblab::solver::detail {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

DirichletPoisson::DirichletPoisson(const lattice::GridDomain& g) {
    const int dim = g.dim();
    int n[3] = {1, 1, 1};
    std::vector<std::vector<double>> axis_eigen(static_cast<std::size_t>(dim));
    size_ = 1;
    for (int a = 0; a < dim; ++a) {
        n[a] = static_cast<int>(g.nodes(a)) - 2;
        size_ *= static_cast<std::size_t>(n[a]);
        const double h = g.spacing(a);
        const double m = static_cast<double>(n[a] + 1);
        scale_ /= 2.0 * m;
        for (int k = 0; k < n[a]; ++k) {
            const double s = std::sin(std::numbers::pi * (k + 1) / (2.0 * m));
            axis_eigen[a].push_back(4.0 * s * s / (h * h));
        }
    }
    eigen_.resize(size_);
    for (std::size_t idx = 0; idx < size_; ++idx) {
        std::size_t rest = idx;
        double lam = 0.0;
        for (int a = dim - 1; a >= 0; --a) {
            const auto na = static_cast<std::size_t>(n[a]);
            lam += axis_eigen[a][rest % na];
            rest /= na;
        }
        eigen_[idx] = lam;
    }

    std::lock_guard lock(planner_mutex());
    buffer_ = fftw_alloc_real(size_);
    fftw_r2r_kind kinds[3] = {FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00};
    plan_ = fftw_plan_r2r(dim, n, buffer_, buffer_, kinds, FFTW_ESTIMATE);
}

DirichletPoisson::~DirichletPoisson() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    fftw_free(buffer_);
}

void DirichletPoisson::solve(std::span<double> rhs) {
    std::copy(rhs.begin(), rhs.end(), buffer_);
    fftw_execute(static_cast<fftw_plan>(plan_));
    for (std::size_t i = 0; i < size_; ++i) {
        buffer_[i] /= eigen_[i];
    }
    fftw_execute(static_cast<fftw_plan>(plan_));
    for (std::size_t i = 0; i < size_; ++i) {
        rhs[i] = buffer_[i] * scale_;
    }
}

}  // namespace fblab::solver::detail
