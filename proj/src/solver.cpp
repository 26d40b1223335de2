#include "fblab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "dirichlet_poisson.hpp"

namespace fblab::solver {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 40;
constexpr int kMaxInnerIterations = 200;
constexpr double kInnerTolerance = 1e-3;

// Node layout helpers shared by the energy, its gradient and the interior operator.
struct Layout {
    explicit Layout(const GridDomain& g) : dim(g.dim()), vol(g.cell_volume()) {
        for (int a = 0; a < 3; ++a) {
            n[a] = g.nodes()[a];
            m[a] = a < dim ? n[a] - 2 : 1;
        }
        stride = {n[1] * n[2], n[2], 1};
        istride = {m[1] * m[2], m[2], 1};
        for (int a = 0; a < dim; ++a) {
            inv_h2[a] = 1.0 / (g.spacing(a) * g.spacing(a));
        }
        interior.reserve(m[0] * m[1] * m[2]);
        mass.resize(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            const MultiIndex k = g.node_multi(i);
            double w = vol;
            for (int a = 0; a < dim; ++a) {
                if (k[a] == 0 || k[a] + 1 == n[a]) {
                    w *= 0.5;
                }
            }
            mass[i] = w;
            if (!g.on_boundary(k)) {
                interior.push_back(i);
            }
        }
    }

    int dim;
    double vol;
    MultiIndex n{};
    MultiIndex m{};
    MultiIndex stride{};
    MultiIndex istride{};
    std::array<double, 3> inv_h2{};
    std::vector<std::size_t> interior;  // full index of each interior unknown (interior row-major order)
    std::vector<double> mass;           // lumped nodal volume
};

double heaviside(double t, double eps) { return 0.5 * (1.0 + std::tanh(t / eps)); }

double heaviside_d1(double t, double eps) {
    const double th = std::tanh(t / eps);
    return 0.5 * (1.0 - th * th) / eps;
}

double heaviside_d2(double t, double eps) {
    const double th = std::tanh(t / eps);
    return -th * (1.0 - th * th) / (eps * eps);
}

class SmoothedProblem {
public:
    SmoothedProblem(const Layout& layout, const WeightField& w, double eps) : lay_(layout), eps_(eps) {
        const auto qp = w.q_plus().values();
        const auto qm = w.q_minus().values();
        q2p_.resize(qp.size());
        q2m_.resize(qm.size());
        for (std::size_t i = 0; i < qp.size(); ++i) {
            q2p_[i] = qp[i] * qp[i];
            q2m_[i] = w.mode() == functional::Phase::two_phase ? qm[i] * qm[i] : 0.0;
        }
    }

    // Edge weight: vol/h_a^2 scaled by the share of incident cells present.
    template <class EdgeFn>
    void for_each_edge(EdgeFn&& fn) const {
        const int dim = lay_.dim;
        for (std::size_t i0 = 0; i0 < lay_.n[0]; ++i0) {
            const double f0 = (i0 == 0 || i0 + 1 == lay_.n[0]) ? 0.5 : 1.0;
            for (std::size_t i1 = 0; i1 < lay_.n[1]; ++i1) {
                const double f1 = (i1 == 0 || i1 + 1 == lay_.n[1]) ? 0.5 : 1.0;
                for (std::size_t i2 = 0; i2 < lay_.n[2]; ++i2) {
                    const double f2 = dim == 3 && (i2 == 0 || i2 + 1 == lay_.n[2]) ? 0.5 : 1.0;
                    const std::size_t node = i0 * lay_.stride[0] + i1 * lay_.stride[1] + i2;
                    const std::array<std::size_t, 3> k{i0, i1, i2};
                    const std::array<double, 3> f{f0, f1, f2};
                    for (int a = 0; a < dim; ++a) {
                        if (k[a] + 1 >= lay_.n[a]) {
                            continue;
                        }
                        double share = 1.0;
                        for (int b = 0; b < dim; ++b) {
                            if (b != a) {
                                share *= f[b];
                            }
                        }
                        fn(node, node + lay_.stride[a], lay_.vol * lay_.inv_h2[a] * share);
                    }
                }
            }
        }
    }

    [[nodiscard]] double value(const std::vector<double>& u) const {
        KahanSum acc;
        for_each_edge([&](std::size_t p, std::size_t q, double w) {
            const double d = u[q] - u[p];
            acc.add(w * d * d);
        });
        for (std::size_t i = 0; i < u.size(); ++i) {
            acc.add(lay_.mass[i] * (q2p_[i] * heaviside(u[i], eps_) + q2m_[i] * heaviside(-u[i], eps_)));
        }
        return acc.value();
    }

    // Full-size gradient, zeroed on boundary nodes.
    void gradient(const std::vector<double>& u, std::vector<double>& grad) const {
        grad.assign(u.size(), 0.0);
        for_each_edge([&](std::size_t p, std::size_t q, double w) {
            const double d = 2.0 * w * (u[q] - u[p]);
            grad[q] += d;
            grad[p] -= d;
        });
        std::vector<double> out(u.size(), 0.0);
        for (std::size_t i : lay_.interior) {
            out[i] = grad[i] + lay_.mass[i] * (q2p_[i] * heaviside_d1(u[i], eps_) -
                                               q2m_[i] * heaviside_d1(-u[i], eps_));
        }
        grad.swap(out);
    }

    // Positive part of the measure-term curvature per interior unknown, per unit volume.
    void curvature(const std::vector<double>& u, std::vector<double>& c) const {
        c.resize(lay_.interior.size());
        for (std::size_t j = 0; j < lay_.interior.size(); ++j) {
            const std::size_t i = lay_.interior[j];
            const double d2 = q2p_[i] * heaviside_d2(u[i], eps_) + q2m_[i] * heaviside_d2(-u[i], eps_);
            c[j] = std::max(d2, 0.0);
        }
    }

private:
    const Layout& lay_;
    double eps_;
    std::vector<double> q2p_;
    std::vector<double> q2m_;
};

// y = -Delta_h x on interior unknowns (zero Dirichlet data).
void neg_laplacian(const Layout& lay, const std::vector<double>& x, std::vector<double>& y) {
    const auto& m = lay.m;
    y.resize(x.size());
    for (std::size_t i0 = 0; i0 < m[0]; ++i0) {
        for (std::size_t i1 = 0; i1 < m[1]; ++i1) {
            for (std::size_t i2 = 0; i2 < m[2]; ++i2) {
                const std::array<std::size_t, 3> k{i0, i1, i2};
                const std::size_t j = i0 * lay.istride[0] + i1 * lay.istride[1] + i2;
                double acc = 0.0;
                for (int a = 0; a < lay.dim; ++a) {
                    const double lo = k[a] > 0 ? x[j - lay.istride[a]] : 0.0;
                    const double hi = k[a] + 1 < m[a] ? x[j + lay.istride[a]] : 0.0;
                    acc += (2.0 * x[j] - lo - hi) * lay.inv_h2[a];
                }
                y[j] = acc;
            }
        }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    KahanSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc.add(a[i] * b[i]);
    }
    return acc.value();
}

// Solves (2(-Delta_h) + diag(c)) d = rhs by conjugate gradients preconditioned with
// the exact inverse of 2(-Delta_h).
void descent_direction(const Layout& lay, detail::DirichletPoisson& poisson, const std::vector<double>& c,
                       const std::vector<double>& rhs, std::vector<double>& d) {
    const std::size_t n = rhs.size();
    auto precondition = [&](const std::vector<double>& r, std::vector<double>& z) {
        z = r;
        poisson.solve(z);
        for (double& v : z) {
            v *= 0.5;
        }
    };
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        neg_laplacian(lay, x, y);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 2.0 * y[i] + c[i] * x[i];
        }
    };
    d.assign(n, 0.0);
    std::vector<double> r = rhs;
    std::vector<double> z;
    precondition(r, z);
    std::vector<double> p = z;
    std::vector<double> ap(n);
    double rz = dot(r, z);
    const double rz0 = rz;
    if (rz0 <= 0.0) {
        return;
    }
    for (int it = 0; it < kMaxInnerIterations; ++it) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            break;
        }
        const double step = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        precondition(r, z);
        const double rz_new = dot(r, z);
        if (rz_new <= kInnerTolerance * kInnerTolerance * rz0) {
            break;
        }
        const double beta = rz_new / rz;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
}

double interior_grad_norm(const Layout& lay, const std::vector<double>& grad) {
    double m = 0.0;
    for (std::size_t i : lay.interior) {
        m = std::max(m, std::abs(grad[i]) / lay.mass[i]);
    }
    return m;
}

std::vector<double> pinned_start(const GridDomain& g, const lattice::ScalarFunction& boundary) {
    std::vector<double> u(g.node_count(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const MultiIndex k = g.node_multi(i);
        if (g.on_boundary(k)) {
            u[i] = boundary(g.node_point(k));
            if (!std::isfinite(u[i])) {
                throw NonFiniteError("boundary data is not finite at node " + std::to_string(i));
            }
        }
    }
    return u;
}

void fill_harmonic(const Layout& lay, detail::DirichletPoisson& poisson, std::vector<double>& u) {
    // -Delta_h z = Delta_h u0 on the interior, where u0 carries only boundary values.
    std::vector<double> rhs(lay.interior.size());
    for (std::size_t j = 0; j < lay.interior.size(); ++j) {
        const std::size_t i = lay.interior[j];
        double acc = 0.0;
        for (int a = 0; a < lay.dim; ++a) {
            acc += (u[i - lay.stride[a]] + u[i + lay.stride[a]]) * lay.inv_h2[a];
        }
        rhs[j] = acc;
    }
    poisson.solve(rhs);
    for (std::size_t j = 0; j < lay.interior.size(); ++j) {
        u[lay.interior[j]] = rhs[j];
    }
}

}  // namespace

void SolveConfig::validate(const GridDomain& g) const {
    if (epsilons.empty()) {
        throw InvalidArgument("solver: empty epsilon schedule");
    }
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0) || !std::isfinite(epsilons[i])) {
            throw InvalidArgument("solver: epsilons must be positive and finite");
        }
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
            throw InvalidArgument("solver: epsilons must be strictly decreasing");
        }
    }
    if (epsilons.back() < g.max_spacing() * (1.0 - 1e-12)) {
        throw InvalidArgument("solver: final epsilon is below the grid spacing");
    }
    if (max_outer <= 0 || !(grad_tol > 0.0)) {
        throw InvalidArgument("solver: max_outer and grad_tol must be positive");
    }
}

SolveConfig SolveConfig::defaults_for(const GridDomain& g, double final_width) {
    const double h = g.max_spacing();
    const double last = final_width > 0.0 ? std::max(final_width, h) : h;
    SolveConfig cfg;
    for (double f : {0.2, 0.1, 0.05, 0.02, 0.01}) {
        const double e = f * g.diameter();
        if (e > last * (1.0 + 1e-9)) {
            cfg.epsilons.push_back(e);
        }
    }
    while (!cfg.epsilons.empty() && cfg.epsilons.back() / 2.0 > last * (1.0 + 1e-9)) {
        cfg.epsilons.push_back(cfg.epsilons.back() / 2.0);
    }
    cfg.epsilons.push_back(last);
    return cfg;
}

std::vector<std::vector<double>> SolveResult::j_history() const {
    std::vector<std::vector<double>> out;
    for (const auto& s : stages) {
        out.push_back(s.j_eps);
    }
    return out;
}

GridFunction harmonic_fill(const GridDomain& domain, const lattice::ScalarFunction& boundary) {
    const Layout lay(domain);
    detail::DirichletPoisson poisson(domain);
    std::vector<double> u = pinned_start(domain, boundary);
    fill_harmonic(lay, poisson, u);
    return GridFunction(domain, std::move(u));
}

double smoothed_energy(const GridFunction& u, const WeightField& w, double eps) {
    if (!(u.domain() == w.domain())) {
        throw InvalidArgument("smoothed_energy: weights live on a different grid");
    }
    const Layout lay(u.domain());
    return SmoothedProblem(lay, w, eps).value(u.to_vector());
}

SolveResult minimize(const GridDomain& domain, const WeightField& w, const lattice::ScalarFunction& boundary,
                     const SolveConfig& cfg, bool nonneg) {
    cfg.validate(domain);
    if (!(w.domain() == domain)) {
        throw InvalidArgument("minimize: weights live on a different grid");
    }
    const Layout lay(domain);
    detail::DirichletPoisson poisson(domain);

    std::vector<double> u = pinned_start(domain, boundary);
    if (nonneg) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i] < 0.0) {
                throw InvalidArgument("minimize: one-phase boundary data must be nonnegative");
            }
        }
        for (double q : w.q_minus().values()) {
            if (q != 0.0) {
                throw InvalidArgument("minimize: one-phase problems need q_minus = 0");
            }
        }
    }
    fill_harmonic(lay, poisson, u);

    SolveResult result;
    std::vector<double> grad;
    std::vector<double> rhs(lay.interior.size());
    std::vector<double> curv;
    std::vector<double> dir;
    std::vector<double> trial(u.size());

    for (double eps : cfg.epsilons) {
        const SmoothedProblem problem(lay, w, eps);
        StageLog log;
        log.epsilon = eps;
        double j = problem.value(u);
        problem.gradient(u, grad);
        double gnorm = interior_grad_norm(lay, grad);
        const double j_start = j;
        log.j_eps.push_back(j);
        log.grad_norm.push_back(gnorm);

        for (int it = 0; it < cfg.max_outer && gnorm > cfg.grad_tol; ++it) {
            for (std::size_t k = 0; k < lay.interior.size(); ++k) {
                rhs[k] = grad[lay.interior[k]] / lay.vol;
            }
            problem.curvature(u, curv);
            descent_direction(lay, poisson, curv, rhs, dir);
            KahanSum slope_acc;
            for (std::size_t k = 0; k < lay.interior.size(); ++k) {
                slope_acc.add(grad[lay.interior[k]] * dir[k]);
            }
            const double slope = slope_acc.value();
            if (!(slope > 1e-15 * std::abs(j))) {
                break;  // numerically stationary
            }

            double t = 1.0;
            bool accepted = false;
            double j_trial = j;
            for (int halving = 0; halving <= kMaxHalvings; ++halving) {
                trial = u;
                for (std::size_t k = 0; k < lay.interior.size(); ++k) {
                    trial[lay.interior[k]] -= t * dir[k];
                }
                j_trial = problem.value(trial);
                if (cfg.step_rule == StepRule::fixed ||
                    (std::isfinite(j_trial) && j_trial <= j - kArmijo * t * slope)) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                break;
            }
            if (!std::isfinite(j_trial)) {
                throw DivergenceError("minimize: smoothed energy became non-finite");
            }
            u.swap(trial);
            j = j_trial;
            problem.gradient(u, grad);
            gnorm = interior_grad_norm(lay, grad);
            log.j_eps.push_back(j);
            log.grad_norm.push_back(gnorm);
        }
        if (j > j_start + 1e-12 * std::abs(j_start)) {
            std::ostringstream msg;
            msg << "minimize: smoothed energy increased across stage eps=" << eps << " (" << j_start << " -> "
                << j << ")";
            throw DivergenceError(msg.str());
        }
        if (nonneg) {
            for (double& v : u) {
                v = std::max(v, 0.0);
            }
        }
        result.grad_norm_final = gnorm;
        result.stages.push_back(std::move(log));
    }
    result.stage_count = static_cast<int>(result.stages.size());
    result.u = GridFunction(domain, std::move(u));
    return result;
}

void write_convergence_csv(std::ostream& os, const SolveResult& result) {
    std::ostringstream out;
    out.precision(17);
    out << "stage,epsilon,iter,J_eps,grad_norm\n";
    for (std::size_t s = 0; s < result.stages.size(); ++s) {
        const StageLog& log = result.stages[s];
        for (std::size_t i = 0; i < log.j_eps.size(); ++i) {
            out << s << ',' << log.epsilon << ',' << i << ',' << log.j_eps[i] << ',' << log.grad_norm[i] << '\n';
        }
    }
    os << out.str();
}

AlmostMinimizer make_almost_minimizer(const SolveResult& base, const WeightField& w_frozen,
                                      const AlmostMinParams& params, const Ball& ball) {
    if (!(base.u.domain() == w_frozen.domain())) {
        throw InvalidArgument("make_almost_minimizer: frozen weights live on a different grid");
    }
    return AlmostMinimizer{base.u, w_frozen, params, ball};
}

}  // namespace fblab::solver
