#include "fblab/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace fblab::monotonicity {

namespace {

double kernel_integral(const GridFunction& part, const Ball& ball, double floor) {
    const GridDomain& g = part.domain();
    const int dim = g.dim();
    return lattice::integrate_ball_with(g, ball, [&](const MultiIndex& c) {
        const Point d = lattice::cell_gradient(part, c);
        const double sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if (dim == 2 || sq == 0.0) {
            return sq;
        }
        const double rho = std::max(lattice::distance(dim, g.cell_center(c), ball.center), floor);
        return sq / rho;
    });
}

double resolve_floor(const GridDomain& g, double kernel_floor) {
    return kernel_floor > 0.0 ? kernel_floor : 0.5 * g.max_spacing();
}

}  // namespace

double A_pm(const GridFunction& u, const Ball& ball, Sign sign, double kernel_floor) {
    const GridDomain& g = u.domain();
    g.require(ball, "A_pm");
    const GridFunction part = sign == Sign::plus ? lattice::positive_part(u) : lattice::negative_part(u);
    return kernel_integral(part, ball, resolve_floor(g, kernel_floor));
}

double phi(const GridFunction& u, const Point& center, double r) {
    const Ball ball{center, r};
    const double ap = A_pm(u, ball, Sign::plus);
    if (ap == 0.0) {
        return 0.0;
    }
    return ap * A_pm(u, ball, Sign::minus) / (r * r * r * r);
}

MonotonicityTrace trace(const GridFunction& u, const Point& center, double r_min, double r_max, int count,
                        double delta, double alpha) {
    const GridDomain& g = u.domain();
    const int n = g.dim();
    if (!(r_min > 0.0) || !(r_min < r_max) || count < 2) {
        throw InvalidArgument("trace: need 0 < r_min < r_max and count >= 2");
    }
    if (!(alpha > 0.0 && alpha <= 1.0) || !(delta > 0.0 && delta < alpha / (4.0 * (n + 1)))) {
        throw InvalidArgument("trace: delta must lie in (0, alpha / (4(n+1)))");
    }
    g.require(Ball{center, 2.0 * r_max}, "trace");
    if (r_min < 4.0 * g.max_spacing()) {
        throw InvalidArgument("trace: r_min is below 4h, the kernel is not resolved");
    }
    const GridFunction up = lattice::positive_part(u);
    const GridFunction um = lattice::negative_part(u);
    const double floor = resolve_floor(g, 0.0);

    MonotonicityTrace t;
    t.center = center;
    t.delta_exponent = delta;
    t.center_value = lattice::interpolate(u, center);
    const double ratio = std::log(r_max / r_min) / (count - 1);
    for (int k = 0; k < count; ++k) {
        const double r = k + 1 == count ? r_max : r_min * std::exp(ratio * k);
        const Ball ball{center, r};
        const double ap = kernel_integral(up, ball, floor);
        const double am = kernel_integral(um, ball, floor);
        t.radii.push_back(r);
        t.A_plus.push_back(ap);
        t.A_minus.push_back(am);
        t.phi.push_back(ap * am / (r * r * r * r));
    }
    for (std::size_t j = 1; j < t.radii.size(); ++j) {
        const double scale = std::pow(t.radii[j], delta);
        for (std::size_t i = 0; i < j; ++i) {
            t.violation = std::max(t.violation, std::max(t.phi[i] - t.phi[j], 0.0) / scale);
        }
    }
    return t;
}

double phi_limit_estimate(const MonotonicityTrace& t) {
    if (t.phi.size() < 4) {
        throw InvalidArgument("phi_limit_estimate: trace needs at least four rungs");
    }
    const std::size_t m = (t.phi.size() + 3) / 4;
    // Offsets from the first rung, so a flat trace returns its value exactly.
    KahanSum acc;
    for (std::size_t i = 1; i < m; ++i) {
        acc.add(t.phi[i] - t.phi[0]);
    }
    return t.phi[0] + acc.value() / static_cast<double>(m);
}

void write_trace_csv(std::ostream& os, const MonotonicityTrace& t) {
    std::ostringstream out;
    out.precision(17);
    out << "r,A_plus,A_minus,phi\n";
    for (std::size_t i = 0; i < t.radii.size(); ++i) {
        out << t.radii[i] << ',' << t.A_plus[i] << ',' << t.A_minus[i] << ',' << t.phi[i] << '\n';
    }
    os << out.str();
}

}  // namespace fblab::monotonicity
