#include "fblab/functional.hpp"

#include <algorithm>
#include <numbers>

namespace fblab::functional {

using lattice::cell_gradient;
using lattice::integrate_ball_with;

namespace {

constexpr Point kCellCentre{0.5, 0.5, 0.5};

double norm2(const Point& a) { return a[0] * a[0] + a[1] * a[1] + a[2] * a[2]; }
double dotp(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

void require_same_grid(const GridDomain& a, const GridDomain& b, const char* what) {
    if (!(a == b)) {
        throw InvalidArgument(std::string(what) + ": functions live on different grids");
    }
}

void require_nonnegative(const GridFunction& q, const char* what) {
    for (double v : q.values()) {
        if (v < 0.0) {
            throw InvalidArgument(std::string(what) + " must be nonnegative");
        }
    }
}

double signed_part(double v, Sign s) {
    if (s == Sign::plus) {
        return v > 0.0 ? v : 0.0;
    }
    return v < 0.0 ? -v : 0.0;
}

bool open_ball_contains(const GridDomain& g, const Point& p, const Ball& ball) {
    return lattice::distance(g.dim(), p, ball.center) < ball.radius;
}

}  // namespace

WeightField::WeightField(GridFunction qp, GridFunction qm, Phase mode)
    : q_plus_(std::move(qp)), q_minus_(std::move(qm)), mode_(mode) {}

WeightField WeightField::one_phase(GridFunction q_plus) {
    require_nonnegative(q_plus, "q_plus");
    GridFunction zero(q_plus.domain(), std::vector<double>(q_plus.size(), 0.0));
    return WeightField(std::move(q_plus), std::move(zero), Phase::one_phase);
}

WeightField WeightField::two_phase(GridFunction q_plus, GridFunction q_minus) {
    require_same_grid(q_plus.domain(), q_minus.domain(), "WeightField");
    require_nonnegative(q_plus, "q_plus");
    require_nonnegative(q_minus, "q_minus");
    return WeightField(std::move(q_plus), std::move(q_minus), Phase::two_phase);
}

WeightField WeightField::constant(const GridDomain& g, double q_plus, double q_minus, Phase mode) {
    if (mode == Phase::one_phase && q_minus != 0.0) {
        throw InvalidArgument("one-phase weights need q_minus = 0");
    }
    GridFunction qp(g, std::vector<double>(g.node_count(), q_plus));
    if (mode == Phase::one_phase) {
        return one_phase(std::move(qp));
    }
    return two_phase(std::move(qp), GridFunction(g, std::vector<double>(g.node_count(), q_minus)));
}

WeightField freeze_weights(const WeightField& w, const Point& point) {
    const double qp = lattice::interpolate(w.q_plus(), point);
    const double qm = lattice::interpolate(w.q_minus(), point);
    return WeightField::constant(w.domain(), qp, w.mode() == Phase::one_phase ? 0.0 : qm, w.mode());
}

AlmostMinParams::AlmostMinParams(double kappa, double alpha) : kappa_(kappa), alpha_(alpha) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw InvalidArgument("kappa must be a finite nonnegative number");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1]");
    }
}

double energy(const GridFunction& u, const Ball& ball) {
    const GridDomain& g = u.domain();
    g.require(ball, "energy");
    return integrate_ball_with(g, ball, [&](const MultiIndex& c) { return norm2(cell_gradient(u, c)); });
}

double cell_sign_fraction(const GridFunction& u, const MultiIndex& c, Sign sign) {
    const GridDomain& g = u.domain();
    const int dim = g.dim();
    bool all_in = true;
    bool all_out = true;
    const std::size_t span2 = dim == 3 ? 2 : 1;
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t d = 0; d < span2; ++d) {
                const double v = u.at({c[0] + a, c[1] + b, c[2] + d});
                const bool in = sign == Sign::plus ? v > 0.0 : v < 0.0;
                all_in = all_in && in;
                all_out = all_out && !in;
            }
        }
    }
    if (all_in) {
        return 1.0;
    }
    if (all_out) {
        // Multilinear interpolation of corner values all <= 0 stays <= 0.
        return 0.0;
    }
    const int count = lattice::subsample_count(dim);
    int hits = 0;
    for (int s = 0; s < count; ++s) {
        const double v = lattice::interpolate_in_cell(u, c, lattice::subsample_local(dim, s));
        if (sign == Sign::plus ? v > 0.0 : v < 0.0) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / count;
}

double measure_term(const GridFunction& u, const WeightField& w, const Ball& ball, Sign sign) {
    const GridDomain& g = u.domain();
    require_same_grid(g, w.domain(), "measure_term");
    g.require(ball, "measure_term");
    const GridFunction& q = w.q(sign);
    return integrate_ball_with(g, ball, [&](const MultiIndex& c) {
        const double frac = cell_sign_fraction(u, c, sign);
        if (frac == 0.0) {
            return 0.0;
        }
        const double qc = lattice::interpolate_in_cell(q, c, kCellCentre);
        return qc * qc * frac;
    });
}

double J(const GridFunction& u, const WeightField& w, const Ball& ball) {
    double total = energy(u, ball) + measure_term(u, w, ball, Sign::plus);
    if (w.mode() == Phase::two_phase) {
        total += measure_term(u, w, ball, Sign::minus);
    }
    return total;
}

double sign_energy(const GridFunction& u, const Ball& ball, Sign sign) {
    const GridFunction part = sign == Sign::plus ? lattice::positive_part(u) : lattice::negative_part(u);
    return energy(part, ball);
}

GridFunction competitor_scale(const GridFunction& u, const Ball& ball, double lambda, const GridFunction& phi,
                              Sign sign) {
    const GridDomain& g = u.domain();
    require_same_grid(g, phi.domain(), "competitor_scale");
    std::vector<double> v = u.to_vector();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = phi[i];
        if (f < 0.0) {
            throw InvalidArgument("competitor_scale: cutoff must be nonnegative");
        }
        if (f != 0.0 && !open_ball_contains(g, g.node_point(i), ball)) {
            throw InvalidArgument("competitor_scale: cutoff must vanish outside the ball");
        }
        if (std::abs(lambda * f) >= 1.0) {
            throw InvalidArgument("competitor_scale: |lambda phi| must stay below 1");
        }
        if (signed_part(u[i], sign) > 0.0) {
            v[i] = (1.0 + lambda * f) * u[i];
        }
    }
    return GridFunction(g, std::move(v));
}

double green_constant(int dim) {
    if (dim == 2) {
        return 1.0 / (2.0 * std::numbers::pi);
    }
    if (dim == 3) {
        return 1.0 / (3.0 * lattice::unit_ball_volume(3));
    }
    throw InvalidArgument("green_constant: dimension must be 2 or 3");
}

GridFunction competitor_green_cutoff(const GridDomain& g, const Ball& ball, double s) {
    const double r = ball.radius;
    if (!(s > 0.0) || !(s < r)) {
        throw InvalidArgument("competitor_green_cutoff: need 0 < s < r");
    }
    const int dim = g.dim();
    const double c = green_constant(dim);
    auto green = [&](double rho) {
        return dim == 3 ? c * (1.0 / rho - 1.0 / r) : c * std::log(r / rho);
    };
    const double plateau = green(s);
    return lattice::sample(
        [&](const Point& y) {
            const double rho = lattice::distance(dim, y, ball.center);
            if (rho >= r) {
                return 0.0;
            }
            return rho <= s ? plateau : green(rho);
        },
        g);
}

GridFunction competitor_tent_cutoff(const GridDomain& g, const Ball& ball) {
    return lattice::sample(
        [&](const Point& y) {
            const double rho = lattice::distance(g.dim(), y, ball.center);
            return rho >= ball.radius ? 0.0 : 1.0 - rho / ball.radius;
        },
        g);
}

GridFunction competitor_bump(const GridFunction& u, const Ball& ball, const Point& c, double rho,
                             double amplitude) {
    const GridDomain& g = u.domain();
    if (!(rho > 0.0) || lattice::distance(g.dim(), c, ball.center) + rho >= ball.radius) {
        throw InvalidArgument("competitor_bump: bump support must lie inside the open ball");
    }
    std::vector<double> v = u.to_vector();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = lattice::distance(g.dim(), g.node_point(i), c);
        if (d < rho) {
            const double t = 1.0 - (d * d) / (rho * rho);
            v[i] += amplitude * t * t * t;
        }
    }
    return GridFunction(g, std::move(v));
}

double defect(const GridFunction& u, const GridFunction& v, const WeightField& w, const AlmostMinParams& params,
              const Ball& ball) {
    const GridDomain& g = u.domain();
    require_same_grid(g, v.domain(), "defect");
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] != v[i] && !open_ball_contains(g, g.node_point(i), ball)) {
            throw InvalidArgument("defect: competitor differs from u outside the ball");
        }
    }
    const double ju = J(u, w, ball);
    const double jv = J(v, w, ball);
    // Grouped so that v == u gives exactly -gauge * J(u).
    return (ju - jv) - params.gauge(ball.radius) * jv;
}

double defect_slack(const GridDomain& g, double j_value) { return 10.0 * g.max_spacing() * (j_value + 1.0); }

double scaling_bracket(const GridFunction& u, const GridFunction& phi, const Ball& ball, Sign sign) {
    const GridDomain& g = u.domain();
    require_same_grid(g, phi.domain(), "scaling_bracket");
    g.require(ball, "scaling_bracket");
    const GridFunction part = sign == Sign::plus ? lattice::positive_part(u) : lattice::negative_part(u);
    std::vector<double> prod(part.size());
    for (std::size_t i = 0; i < prod.size(); ++i) {
        prod[i] = phi[i] * part[i];
    }
    const GridFunction phi_part(g, std::move(prod));
    return 2.0 * integrate_ball_with(g, ball, [&](const MultiIndex& c) {
               return dotp(cell_gradient(part, c), cell_gradient(phi_part, c));
           });
}

double scaling_bracket_product_rule(const GridFunction& u, const GridFunction& phi, const Ball& ball,
                                    Sign sign) {
    const GridDomain& g = u.domain();
    require_same_grid(g, phi.domain(), "scaling_bracket_product_rule");
    g.require(ball, "scaling_bracket_product_rule");
    const GridFunction part = sign == Sign::plus ? lattice::positive_part(u) : lattice::negative_part(u);
    return 2.0 * integrate_ball_with(g, ball, [&](const MultiIndex& c) {
               const Point gu = cell_gradient(part, c);
               const Point gp = cell_gradient(phi, c);
               const double phic = lattice::interpolate_in_cell(phi, c, kCellCentre);
               const double uc = lattice::interpolate_in_cell(part, c, kCellCentre);
               return phic * norm2(gu) + uc * dotp(gu, gp);
           });
}

}  // namespace fblab::functional
