#include "fblab/harmonic.hpp"

#include <algorithm>
#include <cstdint>
#include <numbers>

namespace fblab::harmonic {

using lattice::GridDomain;
using lattice::GridFunction;

namespace {

bool strictly_inside(const GridDomain& g, const Point& p, const Ball& ball) {
    double d2 = 0.0;
    for (int i = 0; i < g.dim(); ++i) {
        d2 += (p[i] - ball.center[i]) * (p[i] - ball.center[i]);
    }
    return d2 < ball.radius * ball.radius;
}

// Unknown numbering plus, per unknown, its 2*dim neighbours (node indices).
struct BallSystem {
    std::vector<std::size_t> unknowns;
    std::vector<std::int64_t> slot;  // node -> unknown index, or -1
    std::vector<std::size_t> neighbours;
    std::array<double, 3> inv_h2{};
    int stencil = 0;
    double diag = 0.0;
};

BallSystem build_system(const GridDomain& g, const Ball& ball) {
    BallSystem s;
    s.unknowns = interior_ball_nodes(g, ball);
    s.slot.assign(g.node_count(), -1);
    for (std::size_t i = 0; i < s.unknowns.size(); ++i) {
        s.slot[s.unknowns[i]] = static_cast<std::int64_t>(i);
    }
    s.stencil = 2 * g.dim();
    for (int a = 0; a < g.dim(); ++a) {
        s.inv_h2[a] = 1.0 / (g.spacing(a) * g.spacing(a));
        s.diag += 2.0 * s.inv_h2[a];
    }
    s.neighbours.resize(s.unknowns.size() * static_cast<std::size_t>(s.stencil));
    for (std::size_t i = 0; i < s.unknowns.size(); ++i) {
        const MultiIndex k = g.node_multi(s.unknowns[i]);
        for (int a = 0; a < g.dim(); ++a) {
            MultiIndex lo = k;
            MultiIndex hi = k;
            --lo[a];
            ++hi[a];
            s.neighbours[i * s.stencil + 2 * a] = g.node_index(lo);
            s.neighbours[i * s.stencil + 2 * a + 1] = g.node_index(hi);
        }
    }
    return s;
}

// y = A x on the unknowns (A = negative Laplacian, Dirichlet data removed).
void apply(const BallSystem& s, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < s.unknowns.size(); ++i) {
        double acc = s.diag * x[i];
        for (int e = 0; e < s.stencil; ++e) {
            const std::int64_t j = s.slot[s.neighbours[i * s.stencil + e]];
            if (j >= 0) {
                acc -= s.inv_h2[e / 2] * x[static_cast<std::size_t>(j)];
            }
        }
        y[i] = acc;
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    KahanSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc.add(a[i] * b[i]);
    }
    return acc.value();
}

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

}  // namespace

std::vector<std::size_t> interior_ball_nodes(const GridDomain& g, const Ball& ball) {
    std::vector<std::size_t> nodes;
    MultiIndex lo{};
    MultiIndex hi{};
    g.cell_range(ball, lo, hi);
    for (int a = 0; a < g.dim(); ++a) {
        hi[a] += 1;
    }
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
        for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
            for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
                const MultiIndex m{i, j, k};
                if (!g.on_boundary(m) && strictly_inside(g, g.node_point(m), ball)) {
                    nodes.push_back(g.node_index(m));
                }
            }
        }
    }
    return nodes;
}

std::vector<std::size_t> ring_nodes(const GridDomain& g, const Ball& ball) {
    const BallSystem s = build_system(g, ball);
    std::vector<std::size_t> ring;
    for (std::size_t n : s.neighbours) {
        if (s.slot[n] < 0) {
            ring.push_back(n);
        }
    }
    std::sort(ring.begin(), ring.end());
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    return ring;
}

double laplacian_residual(const GridFunction& u, const Ball& ball) {
    const GridDomain& g = u.domain();
    g.require(ball, "laplacian_residual");
    const BallSystem s = build_system(g, ball);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.unknowns.size(); ++i) {
        double lap = 0.0;
        const double c = u[s.unknowns[i]];
        for (int a = 0; a < g.dim(); ++a) {
            const double lo = u[s.neighbours[i * s.stencil + 2 * a]];
            const double hi = u[s.neighbours[i * s.stencil + 2 * a + 1]];
            lap += (lo - 2.0 * c + hi) * s.inv_h2[a];
        }
        worst = std::max(worst, std::abs(lap));
    }
    return worst;
}

ExtensionResult harmonic_extension(const GridFunction& u, const Ball& ball, double tol) {
    if (!(tol > 0.0)) {
        throw InvalidArgument("harmonic_extension: tolerance must be positive");
    }
    const GridDomain& g = u.domain();
    g.require(ball, "harmonic_extension");
    const BallSystem s = build_system(g, ball);
    const std::size_t n = s.unknowns.size();

    std::vector<double> rhs(n, 0.0);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = u[s.unknowns[i]];
        for (int e = 0; e < s.stencil; ++e) {
            const std::size_t nb = s.neighbours[i * s.stencil + e];
            if (s.slot[nb] < 0) {
                rhs[i] += s.inv_h2[e / 2] * u[nb];
            }
        }
    }

    std::vector<double> r(n);
    std::vector<double> ap(n);
    auto true_residual = [&] {
        apply(s, x, ap);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = rhs[i] - ap[i];
        }
        return max_abs(r);
    };

    double res = true_residual();
    int iterations = 0;
    std::vector<double> p = r;
    double rr = dot(r, r);
    while (res > tol) {
        if (iterations >= kMaxIterations) {
            throw ConvergenceError("harmonic_extension: iteration cap reached with residual " +
                                   std::to_string(res));
        }
        apply(s, p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            break;
        }
        const double step = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        ++iterations;
        double rr_new = dot(r, r);
        if (max_abs(r) <= tol) {
            res = true_residual();
            if (res <= tol) {
                break;
            }
            // Recursive residual drifted; restart from the true one.
            p = r;
            rr = dot(r, r);
            continue;
        }
        const double beta = rr_new / rr;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }

    std::vector<double> out = u.to_vector();
    for (std::size_t i = 0; i < n; ++i) {
        out[s.unknowns[i]] = x[i];
    }
    ExtensionResult result{GridFunction(g, std::move(out)), iterations, 0.0};
    result.residual = laplacian_residual(result.extension, ball);
    return result;
}

double poisson_disk_value(const std::function<double(double)>& boundary, const Point& point, double radius,
                          int n_quad) {
    if (n_quad < 64) {
        throw InvalidArgument("poisson_disk_value: need at least 64 quadrature nodes");
    }
    const double z2 = point[0] * point[0] + point[1] * point[1];
    if (!(radius > 0.0) || z2 >= radius * radius) {
        throw InvalidArgument("poisson_disk_value: point must lie strictly inside the disk");
    }
    const double dtheta = 2.0 * std::numbers::pi / n_quad;
    KahanSum acc;
    for (int k = 0; k < n_quad; ++k) {
        const double th = k * dtheta;
        const double dx = point[0] - radius * std::cos(th);
        const double dy = point[1] - radius * std::sin(th);
        acc.add(boundary(th) / (dx * dx + dy * dy));
    }
    return (radius * radius - z2) / (2.0 * std::numbers::pi * radius) * acc.value() * radius * dtheta;
}

double orthogonality_defect(const GridFunction& u, const ExtensionResult& ext, const Ball& ball) {
    const GridDomain& g = u.domain();
    if (!(ext.extension.domain() == g)) {
        throw InvalidArgument("orthogonality_defect: extension lives on a different grid");
    }
    g.require(ball, "orthogonality_defect");
    const double self = lattice::integrate_ball_with(g, ball, [&](const MultiIndex& c) {
        const Point a = lattice::cell_gradient(ext.extension, c);
        return a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    });
    const double cross = lattice::integrate_ball_with(g, ball, [&](const MultiIndex& c) {
        const Point a = lattice::cell_gradient(ext.extension, c);
        const Point b = lattice::cell_gradient(u, c);
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    });
    return std::abs(self - cross);
}

}  // namespace fblab::harmonic
