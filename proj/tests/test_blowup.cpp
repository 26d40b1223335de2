#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "fblab/blowup.hpp"
#include "fblab/diagnostics.hpp"
#include "fblab/monotonicity.hpp"

using namespace fblab;
using namespace fblab::lattice;
using namespace fblab::functional;
using namespace fblab::blowup;

namespace {

GridDomain square(std::size_t n) { return make_cube_grid(2, -1.0, 1.0, n); }

GridFunction cone(const GridDomain& g, double lambda) {
    return sample([=](const Point& p) { return lambda * std::max(p[1], 0.0); }, g);
}

}  // namespace

TEST_CASE("cone members are bitwise identical when nodes align") {
    const GridDomain g = square(129);
    const GridFunction u = cone(g, 1.5);
    const BlowupSequence seq = build_sequence(u, {0.0, 0.0, 0.0}, {1.0, 0.5, 0.25}, 1.0, 33);
    REQUIRE(seq.members.size() == 3);
    for (const GridFunction& m : seq.members) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            REQUIRE(m[i] == seq.members.front()[i]);
        }
    }
    const GridFunction expect = cone(seq.grid, 1.5);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(seq.members.back()[i] == expect[i]);
    }
    const ConvergenceReport rep = convergence_report(seq, WeightField::constant(seq.grid, 1.0, 0.0, Phase::one_phase));
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(rep.sup_dist[k] == 0.0);
        CHECK(rep.grad_l2_dist[k] == 0.0);
        CHECK(rep.energy_gap[k] == 0.0);
    }
}

TEST_CASE("affine data and the identity rescaling") {
    const GridDomain g = square(65);
    const Point x{0.25, 0.125, 0.0};
    const GridFunction u = sample([&](const Point& p) { return 2.0 * (p[0] - x[0]) - 3.0 * (p[1] - x[1]); }, g);
    const GridDomain ref = reference_grid(2, 1.0, 21);
    for (double r : {0.5, 0.3, 0.1}) {
        const GridFunction v = rescale(u, x, r, ref);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point y = ref.node_point(i);
            CHECK(std::abs(v[i] - (2.0 * y[0] - 3.0 * y[1])) <= 1e-12);
        }
    }
    const GridFunction same = rescale(u, {0.0, 0.0, 0.0}, 1.0, g);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(same[i] == u[i]);
    }
    CHECK_THROWS_AS(rescale(u, x, 1.0, ref), ContainmentError);
    CHECK_THROWS_AS(rescale(u, x, 0.0, ref), InvalidArgument);
}

TEST_CASE("weights are resampled without scaling") {
    const GridDomain g = square(129);
    const double h = g.spacing(0);
    const GridDomain ref = reference_grid(2, 1.0, 41);
    const WeightField c = WeightField::constant(g, 1.3, 0.7, Phase::two_phase);
    const WeightField rc = rescale_weights(c, {0.1, 0.0, 0.0}, 0.5, ref);
    CHECK(rc.mode() == Phase::two_phase);
    for (std::size_t i = 0; i < ref.node_count(); ++i) {
        CHECK(rc.q_plus()[i] == doctest::Approx(1.3).epsilon(1e-14));
        CHECK(rc.q_minus()[i] == doctest::Approx(0.7).epsilon(1e-14));
    }
    const WeightField radial = WeightField::one_phase(sample([](const Point& p) { return 1.0 + std::hypot(p[0], p[1]); }, g));
    const WeightField rr = rescale_weights(radial, {0.0, 0.0, 0.0}, 0.5, ref);
    for (std::size_t i = 0; i < ref.node_count(); ++i) {
        const Point y = ref.node_point(i);
        CHECK(std::abs(rr.q_plus()[i] - (1.0 + std::hypot(y[0], y[1]) / 2.0)) <= 2.0 * h);
    }
    // continuity at x: the resampled weight flattens towards q(x)
    const Point x{0.2, -0.1, 0.0};
    const double qx = interpolate(radial.q_plus(), x);
    double prev = 1e300;
    for (double r : {0.4, 0.2, 0.1, 0.05}) {
        const WeightField s = rescale_weights(radial, x, r, ref);
        double sup = 0.0;
        for (double v : s.q_plus().values()) {
            sup = std::max(sup, std::abs(v - qx));
        }
        CHECK(sup < prev);
        prev = sup;
    }
}

TEST_CASE("perturbed cone converges linearly in r") {
    const GridDomain g = square(257);
    const double c = 0.8;
    const GridFunction u = sample([&](const Point& p) { return std::max(p[1], 0.0) + c * (p[0] * p[0] + p[1] * p[1]); }, g);
    const std::vector<double> radii = dyadic_radii(0.5, 4);
    CHECK(radii.back() == 0.0625);
    const BlowupSequence seq = build_sequence(u, {0.0, 0.0, 0.0}, radii, 1.0, 33);
    const ConvergenceReport rep = convergence_report(seq, WeightField::constant(seq.grid, 1.0, 0.0, Phase::one_phase));
    const double R = 0.9 * seq.R;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double expect = c * (radii[k] - radii.back()) * R * R;
        CHECK(std::abs(rep.sup_dist[k] - expect) <= 0.05 * expect + 1e-3);
        if (k > 0) {
            CHECK(rep.sup_dist[k] < rep.sup_dist[k - 1]);
            CHECK(rep.grad_l2_dist[k] < rep.grad_l2_dist[k - 1]);
        }
    }
    CHECK(rep.sup_dist.back() == 0.0);
}

TEST_CASE("sequence preconditions") {
    const GridDomain g = square(65);
    const GridFunction u = cone(g, 1.0);
    CHECK_THROWS_AS(build_sequence(u, {0.0, 0.5, 0.0}, {0.25, 0.125}, 1.0, 17), InvalidArgument);
    CHECK_THROWS_AS(build_sequence(u, {0.0, 0.0, 0.0}, {0.25, 0.25}, 1.0, 17), InvalidArgument);
    CHECK_THROWS_AS(build_sequence(u, {0.0, 0.0, 0.0}, {}, 1.0, 17), InvalidArgument);
    CHECK_THROWS_AS(build_sequence(u, {0.5, 0.0, 0.0}, {0.75, 0.5}, 1.0, 17), ContainmentError);
    const BlowupSequence one = build_sequence(u, {0.0, 0.0, 0.0}, {0.5}, 1.0, 17);
    CHECK_THROWS_AS(convergence_report(one, WeightField::constant(one.grid, 1.0, 0.0, Phase::one_phase)),
                    InvalidArgument);
    const BlowupSequence two = build_sequence(u, {0.0, 0.0, 0.0}, {0.5, 0.25}, 1.0, 17);
    CHECK_THROWS_AS(convergence_report(two, WeightField::constant(g, 1.0, 0.0, Phase::one_phase)), InvalidArgument);
}

TEST_CASE("rescaling identity for the functional") {
    const GridDomain g = square(129);  // h = 1/64
    const WeightField w = WeightField::constant(g, 1.0, 0.0, Phase::one_phase);
    const GridFunction u = cone(g, 1.0);
    for (double r : {0.5, 0.25}) {
        const EnergyIdentity e = rescaling_energy_identity(u, w, {0.0, 0.0, 0.0}, r, Ball{{0.0, 0.0, 0.0}, 1.0});
        // continuum value on the unit ball: pi/2 (energy) + pi/2 (positivity set)
        CHECK(std::abs(e.lhs - e.rhs) / (e.rhs + 1.0) <= 0.05);
        CHECK(std::abs(e.rhs - std::numbers::pi) <= 0.05 * std::numbers::pi);
    }
    const EnergyIdentity id = rescaling_energy_identity(u, w, {0.0, 0.0, 0.0}, 1.0, Ball{{0.1, 0.0, 0.0}, 0.5}, g);
    CHECK(id.lhs == id.rhs);
    const GridFunction zero = sample([](const Point&) { return 0.0; }, g);
    const WeightField none = WeightField::constant(g, 0.0, 0.0, Phase::two_phase);
    const EnergyIdentity z = rescaling_energy_identity(zero, none, {0.2, 0.1, 0.0}, 0.3, Ball{{0, 0, 0}, 1.0});
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK_THROWS_AS(rescaling_energy_identity(u, w, {0.0, 0.0, 0.0}, 1.5, Ball{{0, 0, 0}, 1.0}), ContainmentError);
}

TEST_CASE("phi is carried along the rescaling") {
    const GridDomain g = square(257);
    const GridFunction u = sample([](const Point& p) { return p[1] > 0.0 ? std::sqrt(2.0) * p[1] : p[1]; }, g);
    const BlowupSequence seq = build_sequence(u, {0.0, 0.0, 0.0}, {0.5, 0.25}, 1.0, 129);
    for (std::size_t k = 0; k < seq.radii.size(); ++k) {
        for (double s : {0.3, 0.6}) {
            const double a = monotonicity::phi(seq.members[k], {0.0, 0.0, 0.0}, s);
            const double b = monotonicity::phi(u, {0.0, 0.0, 0.0}, seq.radii[k] * s);
            CHECK(std::abs(a - b) <= 0.05 * b);
        }
    }
}

TEST_CASE("case labels survive rescaling") {
    const GridDomain g = square(257);
    const GridFunction u = sample([](const Point& p) { return 3.0 * p[1] + 0.5 * p[0] * p[1] + 0.2; }, g);
    const AlmostMinParams amp(0.0, 1.0);
    const Point x{0.1, -0.05, 0.0};
    const double r = 0.25;
    const GridDomain ref = reference_grid(2, 1.0, 129);
    const GridFunction v = rescale(u, x, r, ref);
    for (double s : {0.5, 0.8}) {
        for (double K2 : {1.0, 5.0}) {
            for (double gamma : {0.05, 0.5, 2.0}) {
                const auto a = diagnostics::classify_ball(u, Ball{x, r * s}, K2, gamma, amp);
                const auto b = diagnostics::classify_ball(v, Ball{{0, 0, 0}, s}, K2, gamma, amp);
                CHECK(a == b);
            }
        }
        CHECK(diagnostics::omega(v, Ball{{0, 0, 0}, s}) ==
              doctest::Approx(diagnostics::omega(u, Ball{x, r * s})).epsilon(0.02));
    }
}

TEST_CASE("manifest and member files") {
    const GridDomain g = square(65);
    const BlowupSequence seq = build_sequence(cone(g, 1.0), {0.0, 0.0, 0.0}, {0.5, 0.25}, 1.0, 17);
    const auto dir = std::filesystem::temp_directory_path() / "fblab_test_blowup_manifest";
    std::filesystem::remove_all(dir);
    const auto names = save_sequence(seq, dir.string());
    REQUIRE(names.size() == 2);
    std::ifstream in(dir / "manifest.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["R"] == 1.0);
    CHECK(j["res"] == 17);
    CHECK(j["radii"].size() == 2);
    CHECK(j["base_point"].size() == 2);
    CHECK(j["members"][1] == names[1]);
    const GridFunction back = load_fbgf((dir / names[1]).string());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i] == seq.members[1][i]);
    }
    std::filesystem::remove_all(dir);
}
