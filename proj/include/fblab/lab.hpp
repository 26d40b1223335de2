#pragma once

/// @file lab.hpp
/// @brief Experiment configs (one JSON document per experiment), the built-in scenario
/// registry and the pipelines behind the fblab command line.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fblab/diagnostics.hpp"
#include "fblab/expression.hpp"
#include "fblab/functional.hpp"
#include "fblab/lattice.hpp"
#include "fblab/solver.hpp"

namespace fblab::lab {

enum class Kind { minimize, diagnose, monotonicity, blowup, verify };

[[nodiscard]] std::string_view to_string(Kind kind) noexcept;
/// Throws InvalidArgument on an unknown name.
Kind parse_kind(std::string_view name);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  ///< verify breach, seed-check mismatch, I/O trouble
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitDivergence = 3;

struct GridSpec {
    int dim = 2;
    std::array<double, 3> lo{-1.0, -1.0, -1.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};
    std::array<std::size_t, 3> nodes{129, 129, 129};

    [[nodiscard]] lattice::GridDomain build() const;
};

/// A scalar field: a constant, a radial profile base + amp |x - center|^power, or an expression.
struct ScalarSpec {
    enum class Type { constant, radial, expression };
    Type type = Type::constant;
    double value = 0.0;
    Point center{};
    double base = 0.0;
    double amp = 0.0;
    double power = 1.0;
    std::optional<Expression> expr;

    [[nodiscard]] double operator()(const Point& p) const;
    [[nodiscard]] lattice::ScalarFunction function(int dim) const;
};

struct WeightSpec {
    functional::Phase mode = functional::Phase::one_phase;
    ScalarSpec q_plus;
    ScalarSpec q_minus;

    [[nodiscard]] functional::WeightField build(const lattice::GridDomain& g) const;
};

struct SolverSpec {
    std::vector<double> epsilons;  ///< empty selects the default schedule
    double final_width = 0.0;
    int max_outer = 200;
    double grad_tol = 1e-8;
    solver::StepRule step_rule = solver::StepRule::backtracking;

    [[nodiscard]] solver::SolveConfig build(const lattice::GridDomain& g) const;
};

struct MonotonicitySpec {
    bool enabled = false;
    Point center{};
    double r_min = 0.1;
    double r_max = 0.4;
    int count = 8;
    double delta = 0.05;
    std::optional<double> expected_limit;   ///< verify: Phi limit and flatness within 5%
    std::optional<double> violation_limit;  ///< verify: bound on the trace violation
};

struct BlowupSpec {
    bool enabled = false;
    Point base_point{};
    std::vector<double> radii;
    double R = 1.0;
    std::size_t res = 65;
    bool from_exact = false;      ///< rescale the sampled exact solution instead of the computed one
    bool expect_identical = false;  ///< verify: members must agree bitwise
};

struct ExperimentConfig {
    std::string name;
    Kind kind = Kind::verify;
    GridSpec grid;
    WeightSpec weights;
    ScalarSpec boundary;
    std::optional<ScalarSpec> exact;
    double exact_tol = 0.05;  ///< relative sup-norm tolerance on the inner half-domain
    SolverSpec solver;
    std::vector<Ball> targets;
    diagnostics::DiagnoseOptions diagnostics;
    double kappa = 0.0;
    double alpha = 1.0;
    MonotonicitySpec monotonicity;
    BlowupSpec blowup;
    std::string output;  ///< output directory; empty defers to the command line
};

/// Throws InvalidArgument (or FormatError for malformed JSON) on anything it cannot use.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);

/// Round-trips through parse_config.
std::string to_json(const ExperimentConfig& cfg);

[[nodiscard]] std::vector<std::string> scenario_names();
/// Throws InvalidArgument listing the registry when the name is unknown.
ExperimentConfig scenario(std::string_view name);

/// Runs the pipeline for cfg.kind, writing artifacts into out_dir. Messages go to err.
/// Returns one of the kExit codes.
int run(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& err);

/// Runs twice, the second time into a scratch directory, and compares every file byte for
/// byte. A mismatch returns kExitFailure.
int run_with_seed_check(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& err);

}  // namespace fblab::lab
