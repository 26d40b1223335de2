#include "fblab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace fblab::diagnostics {

using lattice::distance;

namespace {

// Calls fn(linear, point) for every node of the closed ball, in node order.
template <class Fn>
void for_each_node_in_ball(const GridDomain& g, const Ball& ball, Fn&& fn) {
    MultiIndex lo{};
    MultiIndex hi{};
    g.cell_range(ball, lo, hi);
    const int dim = g.dim();
    MultiIndex top = hi;
    for (int a = 0; a < dim; ++a) {
        top[a] = hi[a] + 1;
    }
    for (std::size_t i = lo[0]; i <= top[0]; ++i) {
        for (std::size_t j = lo[1]; j <= top[1]; ++j) {
            for (std::size_t k = lo[2]; k <= top[2]; ++k) {
                const MultiIndex m{i, j, k};
                const Point p = g.node_point(m);
                if (distance(dim, p, ball.center) <= ball.radius) {
                    fn(g.node_index(m), p);
                }
            }
        }
    }
}

Point subsample_point(const GridDomain& g, const MultiIndex& c, const Point& local) {
    Point p{};
    for (int a = 0; a < g.dim(); ++a) {
        p[a] = g.coord(a, c[a]) + local[a] * g.spacing(a);
    }
    return p;
}

// Calls fn(value) for every subsample point of the cells meeting the ball that lies in
// the open ball; stops early when fn returns false. Returns false if stopped.
template <class Fn>
bool for_each_subsample_in_ball(const GridFunction& u, const Ball& ball, Fn&& fn) {
    const GridDomain& g = u.domain();
    MultiIndex lo{};
    MultiIndex hi{};
    g.cell_range(ball, lo, hi);
    const int dim = g.dim();
    const int count = lattice::subsample_count(dim);
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
        for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
            for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
                const MultiIndex c{i, j, k};
                if (lattice::cell_ball_fraction(g, c, ball) == 0.0) {
                    continue;
                }
                for (int s = 0; s < count; ++s) {
                    const Point local = lattice::subsample_local(dim, s);
                    if (distance(dim, subsample_point(g, c, local), ball.center) >= ball.radius) {
                        continue;
                    }
                    if (!fn(lattice::interpolate_in_cell(u, c, local))) {
                        return false;
                    }
                }
            }
        }
    }
    return true;
}

double frac_part(double x) { return x - std::floor(x); }

}  // namespace

void GoodClassParams::validate() const {
    if (!(tau > 0.0 && tau < 1e-2)) {
        throw InvalidArgument("good class: tau must lie in (0, 1e-2)");
    }
    if (!(C0 >= 1.0) || !(C1 >= 3.0)) {
        throw InvalidArgument("good class: need C0 >= 1 and C1 >= 3");
    }
    if (!(r0 > 0.0)) {
        throw InvalidArgument("good class: r0 must be positive");
    }
}

void NondegParams::validate() const {
    if (!(rho0 > 0.0) || !(L >= 1.0) || !(eta0 > 0.0)) {
        throw InvalidArgument("nondegeneracy: need rho0 > 0, L >= 1, eta0 > 0");
    }
}

std::string_view to_string(CaseLabel label) noexcept {
    switch (label) {
        case CaseLabel::case1:
            return "case1";
        case CaseLabel::case2:
            return "case2";
        case CaseLabel::case3:
            return "case3";
    }
    return "case3";
}

double omega(const GridFunction& u, const Ball& ball) {
    const double e = functional::energy(u, ball);
    return std::sqrt(e / lattice::discrete_ball_volume(u.domain(), ball));
}

BPair b_pair(const GridFunction& u, const Ball& ball) {
    u.domain().require(ball, "b_pair");
    const GridFunction mag = lattice::transform(u, [](double v) { return std::abs(v); });
    return {lattice::sphere_average(u, ball), lattice::sphere_average(mag, ball)};
}

bool good_class(const GridFunction& u, const Ball& ball, const GoodClassParams& p, const AlmostMinParams& amp) {
    p.validate();
    u.domain().require(Ball{ball.center, 2.0 * ball.radius}, "good_class");
    if (ball.radius > p.r0) {
        throw InvalidArgument("good_class: radius exceeds r0");
    }
    const double r = ball.radius;
    const int n = u.domain().dim();
    const double w = omega(u, ball);
    const auto [b, b_plus] = b_pair(u, ball);
    const double lhs = std::abs(b) / r;
    const double rhs = p.C0 * std::pow(p.tau, -n) * std::sqrt(1.0 + std::pow(r, amp.alpha()) * w * w);
    return lhs >= rhs && b_plus <= p.C1 * std::abs(b);
}

double log_lip_modulus(const GridFunction& u, const Point& center, double r0, int samples) {
    const GridDomain& g = u.domain();
    g.require(Ball{center, 2.0 * r0}, "log_lip_modulus");
    if (samples <= 0) {
        throw InvalidArgument("log_lip_modulus: samples must be positive");
    }
    std::vector<std::size_t> nodes;
    std::vector<Point> pts;
    for_each_node_in_ball(g, Ball{center, r0}, [&](std::size_t i, const Point& p) {
        nodes.push_back(i);
        pts.push_back(p);
    });
    if (nodes.size() < 2) {
        throw InvalidArgument("log_lip_modulus: ball holds fewer than two nodes");
    }
    // R2 additive recurrence: low-discrepancy over the pair square.
    constexpr double a1 = 0.7548776662466927;
    constexpr double a2 = 0.5698402909980532;
    const auto count = static_cast<double>(nodes.size());
    double best = 0.0;
    for (int k = 1; k <= samples; ++k) {
        const auto i = static_cast<std::size_t>(frac_part(0.5 + k * a1) * count);
        const auto j = static_cast<std::size_t>(frac_part(0.5 + k * a2) * count);
        if (i == j) {
            continue;
        }
        const double d = distance(g.dim(), pts[i], pts[j]);
        const double ratio = std::abs(u[nodes[i]] - u[nodes[j]]) / (d * (1.0 + std::log(2.0 * r0 / d)));
        best = std::max(best, ratio);
    }
    return best;
}

double gradient_bound(const GridFunction& u, const Ball& region) {
    const GridDomain& g = u.domain();
    g.require(region, "gradient_bound");
    MultiIndex lo{};
    MultiIndex hi{};
    g.cell_range(region, lo, hi);
    double best = 0.0;
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
        for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
            for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
                const MultiIndex c{i, j, k};
                if (distance(g.dim(), g.cell_center(c), region.center) > region.radius) {
                    continue;
                }
                const Point d = lattice::cell_gradient(u, c);
                best = std::max(best, std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
            }
        }
    }
    return best;
}

namespace {

CaseLabel split(double w, double b, double r, double K2, double gamma) {
    if (w < K2) {
        return CaseLabel::case3;
    }
    return b >= gamma * r * (1.0 + w) ? CaseLabel::case1 : CaseLabel::case2;
}

}  // namespace

CaseLabel classify_ball(const GridFunction& u, const Ball& ball, double K2, double gamma,
                        const AlmostMinParams& /*amp*/) {
    return split(omega(u, ball), b_pair(u, ball).b, ball.radius, K2, gamma);
}

TwoPhaseCase classify_ball_two_phase(const GridFunction& u, const Ball& ball, double K2, double gamma,
                                     const AlmostMinParams& /*amp*/) {
    TwoPhaseCase out;
    out.label = split(omega(u, ball), std::abs(b_pair(u, ball).b), ball.radius, K2, gamma);
    const ZeroSet zeros(u, 0.0);
    out.zero_nearby = zeros.meets(Ball{ball.center, 2.0 * ball.radius / 3.0});
    return out;
}

double default_zero_tol(const GridDomain& g, double lipschitz) { return 10.0 * g.max_spacing() * lipschitz; }

ZeroSet::ZeroSet(const GridFunction& u, double zero_tol) : u_(u), tol_(zero_tol), domain_(u.domain()) {
    if (!(zero_tol >= 0.0)) {
        throw InvalidArgument("ZeroSet: zero_tol must be nonnegative");
    }
    const GridDomain& g = domain_;
    const int dim = g.dim();
    MultiIndex stride{g.nodes(1) * g.nodes(2), g.nodes(2), 1};
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const MultiIndex k = g.node_multi(i);
        const double a = u[i];
        if (std::abs(a) <= zero_tol) {
            points_.push_back(g.node_point(k));
            continue;
        }
        for (int ax = 0; ax < dim; ++ax) {
            if (k[ax] + 1 >= g.nodes(ax)) {
                continue;
            }
            const double b = u[i + stride[ax]];
            if (std::abs(b) <= zero_tol || (a > 0.0) == (b > 0.0)) {
                continue;
            }
            const double t = a / (a - b);
            Point p = g.node_point(k);
            p[ax] += t * g.spacing(ax);
            points_.push_back(p);
        }
    }
    std::vector<std::size_t> bucket(points_.size());
    bucket_start_.assign(g.cell_count() + 1, 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        bucket[i] = bucket_of(points_[i]);
        ++bucket_start_[bucket[i] + 1];
    }
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        bucket_start_[c + 1] += bucket_start_[c];
    }
    bucket_items_.resize(points_.size());
    std::vector<std::size_t> fill(bucket_start_.begin(), bucket_start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        bucket_items_[fill[bucket[i]]++] = i;
    }
}

std::size_t ZeroSet::bucket_of(const Point& p) const {
    MultiIndex c{};
    for (int a = 0; a < domain_.dim(); ++a) {
        const double t = std::floor((p[a] - domain_.origin()[a]) / domain_.spacing(a));
        c[a] = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(domain_.cells(a) - 1)));
    }
    return domain_.cell_index(c);
}

double ZeroSet::distance(const Point& y) const {
    if (points_.empty()) {
        return kNoZero;
    }
    const GridDomain& g = domain_;
    if (g.contains(y) && std::abs(lattice::interpolate(u_, y)) <= tol_) {
        return 0.0;
    }
    const int dim = g.dim();
    const MultiIndex home = g.cell_multi(bucket_of(y));
    double hmin = g.spacing(0);
    std::size_t max_ring = 0;
    for (int a = 0; a < dim; ++a) {
        hmin = std::min(hmin, g.spacing(a));
        max_ring = std::max(max_ring, g.cells(a));
    }
    double best = kNoZero;
    for (std::size_t ring = 0; ring <= max_ring; ++ring) {
        // Cells at Chebyshev distance `ring` from home.
        MultiIndex lo{};
        MultiIndex hi{};
        for (int a = 0; a < 3; ++a) {
            if (a < dim) {
                lo[a] = home[a] >= ring ? home[a] - ring : 0;
                hi[a] = std::min(home[a] + ring, g.cells(a) - 1);
            }
        }
        for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
            for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
                for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
                    const MultiIndex c{i, j, k};
                    std::size_t cheb = 0;
                    for (int a = 0; a < dim; ++a) {
                        const std::size_t d = c[a] > home[a] ? c[a] - home[a] : home[a] - c[a];
                        cheb = std::max(cheb, d);
                    }
                    if (cheb != ring) {
                        continue;
                    }
                    const std::size_t cell = g.cell_index(c);
                    for (std::size_t s = bucket_start_[cell]; s < bucket_start_[cell + 1]; ++s) {
                        best = std::min(best, lattice::distance(dim, y, points_[bucket_items_[s]]));
                    }
                }
            }
        }
        // Anything beyond this ring is at least ring * hmin away.
        if (best <= static_cast<double>(ring) * hmin) {
            break;
        }
    }
    return best;
}

double zero_distance(const GridFunction& u, const Point& y, double zero_tol) {
    if (!u.domain().contains(y)) {
        throw ContainmentError("zero_distance: point lies outside the grid");
    }
    return ZeroSet(u, zero_tol).distance(y);
}

VanishCheck nondeg_vanish(const GridFunction& u, const Ball& ball, const NondegParams& p, const WeightField& w) {
    p.validate();
    const GridDomain& g = u.domain();
    g.require(ball, "nondeg_vanish");
    for_each_node_in_ball(g, ball, [&](std::size_t i, const Point&) {
        if (w.q_plus()[i] < p.rho0) {
            throw InvalidArgument("nondeg_vanish: q_plus drops below rho0 in the ball");
        }
    });
    VanishCheck out;
    out.sphere_mean = lattice::sphere_average(lattice::positive_part(u), ball);
    out.hypothesis_met = out.sphere_mean <= ball.radius * p.eta0;
    double inner = -std::numeric_limits<double>::infinity();
    for_each_node_in_ball(g, Ball{ball.center, ball.radius / 4.0}, [&](std::size_t i, const Point&) {
        inner = std::max(inner, u[i]);
    });
    out.inner_max = inner;
    out.holds = !out.hypothesis_met || inner <= default_zero_tol(g, p.L);
    return out;
}

double nondeg_linear_growth(const GridFunction& u, const Ball& ball, const NondegParams& p) {
    p.validate();
    const GridDomain& g = u.domain();
    g.require(ball, "nondeg_linear_growth");
    const int dim = g.dim();
    bool pos = false;
    bool nonpos = false;
    Ball near{ball.center, 0.0};
    for (int a = 0; a < dim; ++a) {
        near.radius += g.spacing(a) * g.spacing(a);
    }
    near.radius = std::sqrt(near.radius) * (1.0 + 1e-9);
    for_each_node_in_ball(g, near, [&](std::size_t i, const Point& q) {
        bool touching = true;
        for (int a = 0; a < dim; ++a) {
            touching = touching && std::abs(q[a] - ball.center[a]) <= g.spacing(a) * (1.0 + 1e-9);
        }
        if (touching) {
            pos = pos || u[i] > 0.0;
            nonpos = nonpos || u[i] <= 0.0;
        }
    });
    if (!(pos && nonpos)) {
        throw InvalidArgument("nondeg_linear_growth: centre is not on the discrete free boundary");
    }
    const ZeroSet zeros(u, 0.0);
    const double floor_dist = 2.0 * g.max_spacing();
    double best = std::numeric_limits<double>::infinity();
    for_each_node_in_ball(g, Ball{ball.center, ball.radius / 2.0}, [&](std::size_t i, const Point& y) {
        if (!(u[i] > 0.0)) {
            return;
        }
        const double d = zeros.distance(y);
        if (d > floor_dist && std::isfinite(d)) {
            best = std::min(best, u[i] / d);
        }
    });
    if (!std::isfinite(best)) {
        throw InvalidArgument("nondeg_linear_growth: no sample point lies farther than 2h from the zero set");
    }
    return best;
}

DensityFractions nondeg_density(const GridFunction& u, const Ball& ball, double zero_tol) {
    u.domain().require(ball, "nondeg_density");
    if (!(zero_tol >= 0.0)) {
        throw InvalidArgument("nondeg_density: zero_tol must be nonnegative");
    }
    std::size_t total = 0;
    std::size_t zero = 0;
    std::size_t nonpos = 0;
    for_each_subsample_in_ball(u, ball, [&](double v) {
        ++total;
        zero += std::abs(v) <= zero_tol ? 1 : 0;
        nonpos += v <= zero_tol ? 1 : 0;
        return true;
    });
    if (total == 0) {
        throw InvalidArgument("nondeg_density: ball holds no subsample points");
    }
    const auto t = static_cast<double>(total);
    return {static_cast<double>(zero) / t, static_cast<double>(nonpos) / t};
}

std::optional<Point> clean_ball_search(const GridFunction& u, const Ball& ball, double eta3, double zero_tol) {
    const GridDomain& g = u.domain();
    g.require(ball, "clean_ball_search");
    if (!(eta3 > 0.0 && eta3 < 1.0 / 3.0)) {
        throw InvalidArgument("clean_ball_search: eta3 must lie in (0, 1/3)");
    }
    const double rho = eta3 * ball.radius;
    std::optional<Point> found;
    for_each_node_in_ball(g, Ball{ball.center, ball.radius / 2.0}, [&](std::size_t i, const Point& y) {
        if (found || u[i] > zero_tol) {
            return;
        }
        const Ball small{y, rho};
        bool clean = true;
        for_each_node_in_ball(g, small, [&](std::size_t j, const Point&) { clean = clean && u[j] <= zero_tol; });
        if (clean) {
            clean = for_each_subsample_in_ball(u, small, [&](double v) { return v <= zero_tol; });
        }
        if (clean) {
            found = y;
        }
    });
    return found;
}

std::vector<double> omega_decay_trace(const GridFunction& u, const Point& center, double r, double theta,
                                      int depth) {
    u.domain().require(Ball{center, r}, "omega_decay_trace");
    if (!(theta > 0.0 && theta <= 0.5) || depth < 0) {
        throw InvalidArgument("omega_decay_trace: need theta in (0, 1/2] and depth >= 0");
    }
    std::vector<double> out;
    double s = r;
    for (int k = 0; k <= depth; ++k) {
        out.push_back(omega(u, Ball{center, s}));
        s *= theta;
    }
    return out;
}

DiagnosticsReport diagnose(const GridFunction& u, const WeightField& w, const Ball& ball,
                           const AlmostMinParams& amp, const DiagnoseOptions& opt) {
    const GridDomain& g = u.domain();
    g.require(ball, "diagnose");
    DiagnosticsReport rep;
    rep.omega = omega(u, ball);
    const BPair bp = b_pair(u, ball);
    rep.b = bp.b;
    rep.b_plus = bp.b_plus;
    if (g.contains(Ball{ball.center, 2.0 * ball.radius}) && ball.radius <= opt.good.r0) {
        rep.in_good_class = good_class(u, ball, opt.good, amp);
    }
    rep.case_label = w.mode() == functional::Phase::two_phase
                         ? classify_ball_two_phase(u, ball, opt.K2, opt.gamma, amp).label
                         : classify_ball(u, ball, opt.K2, opt.gamma, amp);
    rep.lipschitz_est = gradient_bound(u, ball);

    // The vanishing check only applies where q_plus stays above rho0.
    bool weights_ok = true;
    for_each_node_in_ball(g, ball, [&](std::size_t i, const Point&) { weights_ok = weights_ok && w.q_plus()[i] >= opt.nondeg.rho0; });
    if (weights_ok) {
        const VanishCheck v = nondeg_vanish(u, ball, opt.nondeg, w);
        rep.nondeg.vanish_hypothesis_met = v.hypothesis_met;
        rep.nondeg.vanish_holds = v.holds;
    }
    try {
        rep.nondeg.linear_growth = nondeg_linear_growth(u, ball, opt.nondeg);
    } catch (const InvalidArgument&) {
        rep.nondeg.linear_growth.reset();
    }
    const DensityFractions d = nondeg_density(u, ball, default_zero_tol(g, opt.nondeg.L));
    rep.nondeg.zero_frac = d.zero_frac;
    rep.nondeg.nonpos_frac = d.nonpos_frac;
    rep.nondeg.clean_ball_center = clean_ball_search(u, ball, opt.eta3);
    return rep;
}

std::string to_json(const DiagnosticsReport& r) {
    nlohmann::ordered_json j;
    j["omega"] = r.omega;
    j["b"] = r.b;
    j["b_plus"] = r.b_plus;
    j["in_good_class"] = r.in_good_class;
    j["case_label"] = std::string(to_string(r.case_label));
    j["lipschitz_est"] = r.lipschitz_est;
    j["nondeg_vanish_hypothesis_met"] = r.nondeg.vanish_hypothesis_met;
    j["nondeg_vanish_holds"] = r.nondeg.vanish_holds;
    j["nondeg_linear_growth"] =
        r.nondeg.linear_growth ? nlohmann::ordered_json(*r.nondeg.linear_growth) : nlohmann::ordered_json();
    j["nondeg_zero_frac"] = r.nondeg.zero_frac;
    j["nondeg_nonpos_frac"] = r.nondeg.nonpos_frac;
    if (r.nondeg.clean_ball_center) {
        const Point& c = *r.nondeg.clean_ball_center;
        j["nondeg_clean_ball_center"] = {c[0], c[1], c[2]};
    } else {
        j["nondeg_clean_ball_center"] = nullptr;
    }
    return j.dump(2);
}

}  // namespace fblab::diagnostics
