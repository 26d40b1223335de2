#pragma once

/// @file diagnostics.hpp
/// @brief Regularity and nondegeneracy quantities evaluated on nodal functions:
/// normalized energy, sphere averages, good-class membership, Lipschitz moduli,
/// the three-case split, and checks that u leaves its zero set at linear rate.

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fblab/functional.hpp"
#include "fblab/lattice.hpp"

namespace fblab::diagnostics {

using functional::AlmostMinParams;
using functional::WeightField;
using lattice::GridDomain;
using lattice::GridFunction;

struct GoodClassParams {
    double tau = 5e-3;
    double C0 = 1.0;
    double C1 = 3.0;
    double r0 = 1.0;

    /// tau in (0, 1e-2), C0 >= 1, C1 >= 3, r0 > 0; InvalidArgument otherwise.
    void validate() const;
};

struct NondegParams {
    double rho0 = 1.0;  ///< lower bound for q_plus on the ball
    double L = 1.0;     ///< Lipschitz bound, sets the default zero tolerance
    double eta0 = 0.1;

    void validate() const;
};

enum class CaseLabel { case1, case2, case3 };

[[nodiscard]] std::string_view to_string(CaseLabel label) noexcept;

/// Normalized Dirichlet energy: sqrt(energy / ball volume).
double omega(const GridFunction& u, const Ball& ball);

struct BPair {
    double b = 0.0;       ///< sphere average of u
    double b_plus = 0.0;  ///< sphere average of |u|
};

BPair b_pair(const GridFunction& u, const Ball& ball);

/// Both inequalities r^-1 |b| >= C0 tau^-n (1 + r^alpha omega^2)^(1/2) and
/// b+ <= C1 |b|. Requires B(x, 2r) in the grid and r <= r0.
bool good_class(const GridFunction& u, const Ball& ball, const GoodClassParams& p, const AlmostMinParams& amp);

/// Empirical constant C of |u(x) - u(y)| <= C|x - y|(1 + log(2 r0 / |x - y|)) over
/// `samples` node pairs of B(center, r0) drawn from an additive recurrence.
double log_lip_modulus(const GridFunction& u, const Point& center, double r0, int samples);

/// Largest cell-gradient magnitude over cells whose centre lies in the region.
double gradient_bound(const GridFunction& u, const Ball& region);

/// One-phase split on signed b. amp is accepted for symmetry with the good-class test.
CaseLabel classify_ball(const GridFunction& u, const Ball& ball, double K2, double gamma,
                        const AlmostMinParams& amp);

struct TwoPhaseCase {
    CaseLabel label = CaseLabel::case3;
    bool zero_nearby = false;  ///< u has a zero in B(x, 2r/3)
};

/// Same split on |b|, plus whether u vanishes somewhere in B(x, 2r/3).
TwoPhaseCase classify_ball_two_phase(const GridFunction& u, const Ball& ball, double K2, double gamma,
                                     const AlmostMinParams& amp);

/// 10 h L: nodal values of an L-Lipschitz function cannot certify a zero finer than O(h).
double default_zero_tol(const GridDomain& g, double lipschitz);

/// The discrete zero set: nodes with |u| <= zero_tol and, on every lattice edge whose
/// end values have strictly opposite signs (both beyond the tolerance), the linearly
/// interpolated crossing. Nearest-point queries use a cell bucket grid; a query point
/// where the multilinear interpolant itself is within zero_tol of 0 has distance 0.
class ZeroSet {
public:
    ZeroSet(const GridFunction& u, double zero_tol);

    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const std::vector<Point>& points() const noexcept { return points_; }

    /// Distance from y to the nearest zero; +infinity when the set is empty.
    [[nodiscard]] double distance(const Point& y) const;

    /// Whether some zero lies in the closed ball.
    [[nodiscard]] bool meets(const Ball& ball) const { return distance(ball.center) <= ball.radius; }

private:
    [[nodiscard]] std::size_t bucket_of(const Point& p) const;

    GridFunction u_;
    double tol_;
    GridDomain domain_;
    std::vector<Point> points_;
    std::vector<std::size_t> bucket_start_;  // CSR offsets, one per cell plus one
    std::vector<std::size_t> bucket_items_;
};

inline constexpr double kNoZero = std::numeric_limits<double>::infinity();

/// Distance to the zero set; kNoZero if u has no zeros. Throws if y leaves the grid.
double zero_distance(const GridFunction& u, const Point& y, double zero_tol);

struct VanishCheck {
    bool holds = true;            ///< the conclusion, or vacuously true
    bool hypothesis_met = false;  ///< sphere average of u+ <= r eta0
    double sphere_mean = 0.0;     ///< sphere average of u+
    double inner_max = 0.0;       ///< max of u over B(x, r/4)
};

/// If the sphere average of u+ is at most r eta0, checks u <= 10 h L on B(x, r/4).
/// Requires q_plus >= rho0 at every node of the ball.
VanishCheck nondeg_vanish(const GridFunction& u, const Ball& ball, const NondegParams& p, const WeightField& w);

/// min over nodes y of B(x, r/2) with u(y) > 0 and delta(y) > 2h of u(y) / delta(y), where delta is
/// the distance to the exact-zero set (zero_tol = 0 with interpolated sign changes).
/// The centre must sit on the discrete free boundary: among the nodes of the cells
/// touching it are both u > 0 and u <= 0.
double nondeg_linear_growth(const GridFunction& u, const Ball& ball, const NondegParams& p);

struct DensityFractions {
    double zero_frac = 0.0;    ///< share of the ball where |u| <= zero_tol
    double nonpos_frac = 0.0;  ///< share where u <= zero_tol
};

/// Fractions over the 4^dim subsample points of the cells meeting the ball.
DensityFractions nondeg_density(const GridFunction& u, const Ball& ball, double zero_tol = 0.0);

/// First node y of B(x, r/2), in node order, with u <= zero_tol at every node and
/// subsample point of B(y, eta3 r). eta3 in (0, 1/3).
std::optional<Point> clean_ball_search(const GridFunction& u, const Ball& ball, double eta3,
                                       double zero_tol = 0.0);

/// omega(x, theta^k r) for k = 0..depth.
std::vector<double> omega_decay_trace(const GridFunction& u, const Point& center, double r, double theta,
                                      int depth);

struct NondegSummary {
    bool vanish_hypothesis_met = false;
    bool vanish_holds = true;
    std::optional<double> linear_growth;  ///< empty when the centre is not on the free boundary
    double zero_frac = 0.0;
    double nonpos_frac = 0.0;
    std::optional<Point> clean_ball_center;
};

struct DiagnosticsReport {
    double omega = 0.0;
    double b = 0.0;
    double b_plus = 0.0;
    bool in_good_class = false;
    CaseLabel case_label = CaseLabel::case3;
    double lipschitz_est = 0.0;
    NondegSummary nondeg;
};

struct DiagnoseOptions {
    GoodClassParams good;
    NondegParams nondeg;
    double K2 = 1.0;
    double gamma = 0.1;
    double eta3 = 0.1;
};

/// Runs every check on one ball. The vanishing check is skipped (hypothesis unmet) where
/// q_plus < rho0 somewhere in the ball. Good-class membership is false whenever B(x, 2r)
/// leaves the grid or r > r0.
DiagnosticsReport diagnose(const GridFunction& u, const WeightField& w, const Ball& ball,
                           const AlmostMinParams& amp, const DiagnoseOptions& opt);

/// Flat JSON object with snake_case keys, keys in declaration order.
std::string to_json(const DiagnosticsReport& report);

}  // namespace fblab::diagnostics
