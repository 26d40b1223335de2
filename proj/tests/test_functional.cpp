#include <numbers>
#include <random>

#include "doctest.h"
#include "fblab/functional.hpp"

using namespace fblab;
using namespace fblab::lattice;
using namespace fblab::functional;

namespace {

constexpr double kPi = std::numbers::pi;

GridDomain unit_square(std::size_t n) { return make_cube_grid(2, -1.0, 1.0, n); }

}  // namespace

TEST_CASE("Dirichlet energy on the unit disk") {
    const GridDomain g = unit_square(129);
    const double h = g.spacing(0);
    const Ball ball{{0.0, 0.0, 0.0}, 1.0};
    CHECK(energy(sample([](const Point&) { return 2.0; }, g), ball) == 0.0);
    const double e1 = energy(sample([](const Point& p) { return p[1]; }, g), ball);
    CHECK(std::abs(e1 - kPi) <= 2.0 * h * kPi);
    const double e2 = energy(sample([](const Point& p) { return std::max(p[1], 0.0); }, g), ball);
    CHECK(std::abs(e2 - kPi / 2) <= 3.0 * h * kPi / 2);
    CHECK_THROWS_AS(energy(sample([](const Point&) { return 0.0; }, g), Ball{{0.5, 0.0, 0.0}, 0.6}),
                    ContainmentError);
}

TEST_CASE("measure terms count the positivity and negativity sets") {
    const GridDomain g = unit_square(129);
    const double h = g.spacing(0);
    const Ball ball{{0.0, 0.0, 0.0}, 1.0};
    const WeightField w = WeightField::constant(g, 1.0, 1.0, Phase::two_phase);
    CHECK(measure_term(sample([](const Point&) { return -1.0; }, g), w, ball, Sign::plus) == 0.0);
    const double full = measure_term(sample([](const Point&) { return 1.0; }, g), w, ball, Sign::plus);
    CHECK(std::abs(full - kPi) <= 2.0 * h * kPi);
    const GridFunction y = sample([](const Point& p) { return p[1]; }, g);
    CHECK(std::abs(measure_term(y, w, ball, Sign::plus) - kPi / 2) <= 3.0 * h * kPi / 2);
    CHECK(std::abs(measure_term(y, w, ball, Sign::minus) - kPi / 2) <= 3.0 * h * kPi / 2);
}

TEST_CASE("J adds energy and weighted measure terms") {
    const GridDomain g = unit_square(129);
    const double h = g.spacing(0);
    const Ball ball{{0.0, 0.0, 0.0}, 1.0};
    const WeightField one = WeightField::constant(g, 1.0, 0.0, Phase::one_phase);
    const WeightField both = WeightField::constant(g, 1.0, 1.0, Phase::two_phase);
    CHECK(J(sample([](const Point&) { return 0.0; }, g), both, ball) == 0.0);

    const GridFunction ramp = sample([](const Point& p) { return std::max(p[1], 0.0); }, g);
    CHECK(std::abs(J(ramp, one, ball) - kPi) <= 3.0 * h * kPi);

    const GridFunction y = sample([](const Point& p) { return p[1]; }, g);
    CHECK(std::abs(J(y, both, ball) - 2.0 * kPi) <= 3.0 * h * 2.0 * kPi);

    // Additivity, exactly as summed floats.
    const double sum = energy(y, ball) + measure_term(y, both, ball, Sign::plus) +
                       measure_term(y, both, ball, Sign::minus);
    CHECK(J(y, both, ball) == sum);
    // One-phase mode ignores the negative set.
    CHECK(J(y, one, ball) == energy(y, ball) + measure_term(y, one, ball, Sign::plus));
    CHECK_THROWS_AS(WeightField::constant(g, 1.0, 0.5, Phase::one_phase), InvalidArgument);
}

TEST_CASE("measure term is monotone in the weight") {
    const GridDomain g = unit_square(33);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    const GridFunction u = sample([](const Point& p) { return p[0] * p[0] - 0.3 + 0.2 * p[1]; }, g);
    const Ball ball{{0.1, 0.0, 0.0}, 0.8};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> q(g.node_count());
        std::vector<double> q2(g.node_count());
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] = dist(rng);
            q2[i] = q[i] + dist(rng);
        }
        const WeightField a = WeightField::one_phase(GridFunction(g, q));
        const WeightField b = WeightField::one_phase(GridFunction(g, q2));
        CHECK(measure_term(u, a, ball, Sign::plus) <= measure_term(u, b, ball, Sign::plus));
    }
}

TEST_CASE("competitor_scale rescales only the chosen sign set") {
    const GridDomain g = unit_square(65);
    const Ball ball{{0.0, 0.0, 0.0}, 0.5};
    const GridFunction u = sample([](const Point& p) { return p[1] + 0.2 * p[0] * p[0] - 0.05; }, g);
    const GridFunction inside = sample(
        [&](const Point& p) { return distance(2, p, ball.center) < ball.radius ? 1.0 : 0.0; }, g);

    const GridFunction same = competitor_scale(u, ball, 0.0, inside, Sign::plus);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(same[i] == u[i]);

    const GridFunction half = competitor_scale(u, ball, -0.5, inside, Sign::plus);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const bool in = inside[i] == 1.0;
        if (in && u[i] > 0.0) {
            CHECK(half[i] == 0.5 * u[i]);
        } else {
            CHECK(half[i] == u[i]);
        }
    }

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lam(-0.95, 0.95);
    const GridFunction tent = competitor_tent_cutoff(g, ball);
    for (int trial = 0; trial < 20; ++trial) {
        const double l = lam(rng);
        for (Sign s : {Sign::plus, Sign::minus}) {
            const GridFunction v = competitor_scale(u, ball, l, tent, s);
            for (std::size_t i = 0; i < u.size(); ++i) {
                CHECK((v[i] > 0.0) == (u[i] > 0.0));
                CHECK((v[i] < 0.0) == (u[i] < 0.0));
            }
        }
    }
    CHECK_THROWS_AS(competitor_scale(u, ball, 1.0, inside, Sign::plus), InvalidArgument);
    const GridFunction everywhere = sample([](const Point&) { return 0.5; }, g);
    CHECK_THROWS_AS(competitor_scale(u, ball, 0.1, everywhere, Sign::plus), InvalidArgument);
}

TEST_CASE("Green cutoff: zero outside, plateau inside, monotone along rays") {
    const GridDomain g3 = make_cube_grid(3, -1.0, 1.0, 33);  // h = 1/16
    const Ball ball{{0.0, 0.0, 0.0}, 0.75};
    const double s = 0.25;
    const GridFunction phi = competitor_green_cutoff(g3, ball, s);
    const double c3 = 1.0 / (4.0 * kPi);
    CHECK(green_constant(3) == doctest::Approx(c3).epsilon(1e-15));
    for (std::size_t i = 0; i < g3.node_count(); ++i) {
        const double rho = distance(3, g3.node_point(i), ball.center);
        if (rho >= ball.radius) {
            CHECK(phi[i] == 0.0);
        }
    }
    // Node (0,0,s) sits exactly at |y - x| = s.
    const double at_s = phi.at({16, 16, 20});
    CHECK(at_s == doctest::Approx(c3 * (1.0 / s - 1.0 / ball.radius)).epsilon(1e-14));

    const GridDomain g2 = unit_square(65);
    const GridFunction phi2 = competitor_green_cutoff(g2, ball, s);
    for (std::size_t j = 32; j + 1 < 65; ++j) {
        CHECK(phi2.at({32, j + 1, 0}) <= phi2.at({32, j, 0}));
    }
    CHECK(phi2.at({32, 32, 0}) == doctest::Approx(std::log(ball.radius / s) / (2.0 * kPi)).epsilon(1e-14));
    CHECK_THROWS_AS(competitor_green_cutoff(g2, ball, 0.75), InvalidArgument);
}

TEST_CASE("defect of the identity competitor is exactly -kappa r^alpha J") {
    const GridDomain g = unit_square(65);
    const WeightField w = WeightField::constant(g, 1.3, 0.7, Phase::two_phase);
    const AlmostMinParams params(0.8, 0.5);
    const Ball ball{{0.1, 0.1, 0.0}, 0.4};
    const GridFunction u = sample([](const Point& p) { return p[1] - 0.1 * p[0]; }, g);
    CHECK(defect(u, u, w, params, ball) == -params.gauge(0.4) * J(u, w, ball));

    const GridFunction zero = sample([](const Point&) { return 0.0; }, g);
    const GridFunction bumped = competitor_bump(zero, ball, ball.center, 0.3, 0.2);
    CHECK(defect(zero, bumped, w, params, ball) < 0.0);

    const GridFunction far = sample([](const Point& p) { return p[0] > 0.9 ? 1.0 : 0.0; }, g);
    CHECK_THROWS_AS(defect(zero, far, w, params, ball), InvalidArgument);
    CHECK(defect_slack(g, 2.0) == doctest::Approx(10.0 * g.spacing(0) * 3.0));
}

TEST_CASE("AlmostMinParams validates and derives beta") {
    const AlmostMinParams p(1.0, 0.5);
    CHECK(p.beta(2) == doctest::Approx(0.5 / 4.5));
    CHECK(p.beta(3) == doctest::Approx(0.5 / 5.5));
    CHECK(p.gauge(0.25) == doctest::Approx(0.5));
    CHECK_THROWS_AS(AlmostMinParams(-1.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(AlmostMinParams(1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(AlmostMinParams(1.0, 1.5), InvalidArgument);
}

TEST_CASE("scaling bracket: central difference in lambda matches the linear coefficient") {
    const GridDomain g = unit_square(97);
    const Ball ball{{0.0, 0.0, 0.0}, 0.6};
    const GridFunction u = sample(
        [](const Point& p) { return p[1] >= 0 ? 1.4 * p[1] + 0.1 * p[0] * p[0] : p[1] - 0.05 * p[0]; }, g);
    for (const GridFunction& phi : {competitor_tent_cutoff(g, ball), competitor_green_cutoff(g, ball, 0.1)}) {
        double pmax = 0.0;
        for (double v : phi.values()) pmax = std::max(pmax, v);
        const double lambda = 0.5 / pmax;
        for (Sign s : {Sign::plus, Sign::minus}) {
            const double ep = sign_energy(competitor_scale(u, ball, lambda, phi, s), ball, s);
            const double em = sign_energy(competitor_scale(u, ball, -lambda, phi, s), ball, s);
            const double central = (ep - em) / (2.0 * lambda);
            const double bracket = scaling_bracket(u, phi, ball, s);
            CHECK(central == doctest::Approx(bracket).epsilon(1e-9));
            const double product = scaling_bracket_product_rule(u, phi, ball, s);
            CHECK(std::abs(product - bracket) <= 10.0 * g.spacing(0) * (std::abs(bracket) + 1.0));
        }
    }
}

TEST_CASE("freezing constant weights changes nothing") {
    const GridDomain g = unit_square(33);
    const WeightField w = WeightField::constant(g, 1.5, 0.5, Phase::two_phase);
    const WeightField f = freeze_weights(w, Point{0.2, -0.1, 0.0});
    const GridFunction u = sample([](const Point& p) { return p[1]; }, g);
    const Ball ball{{0.0, 0.0, 0.0}, 0.5};
    CHECK(J(u, f, ball) == J(u, w, ball));
}
