#include <string>
#include <utility>

#include "fblab/errors.hpp"
#include "fblab/lab.hpp"

namespace fblab::lab {

namespace {

// Configs are kept as JSON text so every scenario goes through the same validation as a file.
const std::pair<const char*, const char*> kScenarios[] = {
    {"plane-one-phase", R"cfg({
  "name": "plane-one-phase",
  "kind": "verify",
  "grid": {"dim": 2, "lo": -1, "hi": 1, "nodes": 129},
  "weights": {"mode": "one_phase", "q_plus": 1, "q_minus": 0},
  "boundary": "max(x2, 0)",
  "exact": "max(x2, 0)",
  "exact_tol": 0.05,
  "targets": [{"center": [0, 0], "radius": 0.25}, {"center": [0.3, 0.2], "radius": 0.2}]
})cfg"},
    {"two-plane-acf", R"cfg({
  "name": "two-plane-acf",
  "kind": "verify",
  "grid": {"dim": 2, "lo": -1, "hi": 1, "nodes": 257},
  "weights": {"mode": "two_phase", "q_plus": "sqrt(2)", "q_minus": 1},
  "boundary": "sqrt(2)*max(x2, 0) + min(x2, 0)",
  "exact": "sqrt(2)*max(x2, 0) + min(x2, 0)",
  "exact_tol": 0.05,
  "targets": [{"center": [0, 0], "radius": 0.25}],
  "monotonicity": {"center": [0, 0], "r_min": 0.1, "r_max": 0.4, "count": 8, "delta": 0.05,
                   "expected_limit": 4.934802200544679}
})cfg"},
    {"harmonic-only", R"cfg({
  "name": "harmonic-only",
  "kind": "verify",
  "grid": {"dim": 2, "lo": -1, "hi": 1, "nodes": 65},
  "weights": {"mode": "two_phase", "q_plus": 0, "q_minus": 0},
  "boundary": "x1*x1 - x2*x2 + x1",
  "exact": "x1*x1 - x2*x2 + x1",
  "exact_tol": 1e-6,
  "targets": [{"center": [0.1, 0.1], "radius": 0.3}]
})cfg"},
    {"holder-weights", R"cfg({
  "name": "holder-weights",
  "kind": "verify",
  "grid": {"dim": 2, "lo": -1, "hi": 1, "nodes": 129},
  "weights": {"mode": "one_phase", "q_plus": {"radial": {"center": [0, 0], "base": 1, "amp": 0.3, "power": 0.5}}},
  "boundary": "max(x2, 0)",
  "almost_min": {"kappa": 1.5, "alpha": 0.5},
  "targets": [{"center": [0, 0], "radius": 0.25}, {"center": [0.3, 0], "radius": 0.2}]
})cfg"},
    {"blowup-cone", R"cfg({
  "name": "blowup-cone",
  "kind": "verify",
  "grid": {"dim": 2, "lo": -1, "hi": 1, "nodes": 129},
  "weights": {"mode": "one_phase", "q_plus": 1.5},
  "boundary": "1.5*max(x2, 0)",
  "exact": "1.5*max(x2, 0)",
  "exact_tol": 0.05,
  "targets": [{"center": [0, 0], "radius": 0.25}],
  "blowup": {"base_point": [0, 0], "radii": {"dyadic_from": 1, "count": 3}, "R": 1, "res": 33,
             "source": "exact", "expect_identical": true}
})cfg"},
};

}  // namespace

std::vector<std::string> scenario_names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : kScenarios) {
        out.emplace_back(name);
    }
    return out;
}

ExperimentConfig scenario(std::string_view name) {
    for (const auto& [n, text] : kScenarios) {
        if (name == n) {
            return parse_config(text);
        }
    }
    std::string known;
    for (const auto& [n, text] : kScenarios) {
        known += known.empty() ? "" : ", ";
        known += n;
    }
    throw InvalidArgument("unknown scenario '" + std::string(name) + "'; available: " + known);
}

}  // namespace fblab::lab
