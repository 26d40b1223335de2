#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fblab/blowup.hpp"
#include "fblab/errors.hpp"
#include "fblab/lab.hpp"

namespace fblab::lab {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw InvalidArgument("config: " + what); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) {
        bad(where + " must be an object");
    }
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
            bad("unknown key '" + k + "' in " + where);
        }
    }
}

double num(const json& j, const std::string& what) {
    if (!j.is_number()) {
        bad(what + " must be a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        bad(what + " must be finite");
    }
    return v;
}

double num_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? num(j.at(key), where + "." + key) : fallback;
}

int int_or(const json& j, const char* key, int fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_number_integer()) {
        bad(where + "." + key + " must be an integer");
    }
    return j.at(key).get<int>();
}

Point point(const json& j, int dim, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim) {
        bad(what + " must be an array of " + std::to_string(dim) + " numbers");
    }
    Point p{};
    for (int a = 0; a < dim; ++a) {
        p[a] = num(j[a], what);
    }
    return p;
}

json point_json(const Point& p, int dim) { return std::vector<double>(p.begin(), p.begin() + dim); }

ScalarSpec scalar(const json& j, int dim, const std::string& what) {
    ScalarSpec s;
    if (j.is_number()) {
        s.type = ScalarSpec::Type::constant;
        s.value = num(j, what);
    } else if (j.is_string()) {
        s.type = ScalarSpec::Type::expression;
        s.expr = Expression::parse(j.get<std::string>());
        if (s.expr->max_axis() > dim) {
            bad(what + ": x" + std::to_string(s.expr->max_axis()) + " does not exist in " + std::to_string(dim) + "D");
        }
    } else if (j.is_object() && j.contains("radial")) {
        only_keys(j, what, {"radial"});
        const json& r = j.at("radial");
        only_keys(r, what + ".radial", {"center", "base", "amp", "power"});
        s.type = ScalarSpec::Type::radial;
        s.center = r.contains("center") ? point(r.at("center"), dim, what + ".radial.center") : Point{};
        s.base = num_or(r, "base", 0.0, what + ".radial");
        s.amp = num_or(r, "amp", 0.0, what + ".radial");
        s.power = num_or(r, "power", 1.0, what + ".radial");
        if (!(s.power > 0.0)) {
            bad(what + ".radial.power must be positive");
        }
    } else {
        bad(what + " must be a number, an expression string or {\"radial\": {...}}");
    }
    return s;
}

json scalar_json(const ScalarSpec& s, int dim) {
    switch (s.type) {
        case ScalarSpec::Type::constant:
            return s.value;
        case ScalarSpec::Type::expression:
            return s.expr->text();
        case ScalarSpec::Type::radial: {
            json r;
            r["center"] = point_json(s.center, dim);
            r["base"] = s.base;
            r["amp"] = s.amp;
            r["power"] = s.power;
            json out;
            out["radial"] = r;
            return out;
        }
    }
    return nullptr;
}

std::string step_rule_name(solver::StepRule r) { return r == solver::StepRule::fixed ? "fixed" : "backtracking"; }

std::vector<double> radii_list(const json& j, const std::string& what) {
    if (j.is_array()) {
        std::vector<double> out;
        for (const json& v : j) {
            out.push_back(num(v, what));
        }
        return out;
    }
    if (j.is_object()) {
        only_keys(j, what, {"dyadic_from", "count"});
        if (!j.contains("dyadic_from") || !j.contains("count")) {
            bad(what + " needs dyadic_from and count");
        }
        return blowup::dyadic_radii(num(j.at("dyadic_from"), what + ".dyadic_from"), int_or(j, "count", 0, what));
    }
    bad(what + " must be an array or {\"dyadic_from\", \"count\"}");
}

}  // namespace

std::string_view to_string(Kind kind) noexcept {
    switch (kind) {
        case Kind::minimize:
            return "minimize";
        case Kind::diagnose:
            return "diagnose";
        case Kind::monotonicity:
            return "monotonicity";
        case Kind::blowup:
            return "blowup";
        case Kind::verify:
            return "verify";
    }
    return "verify";
}

Kind parse_kind(std::string_view name) {
    for (Kind k : {Kind::minimize, Kind::diagnose, Kind::monotonicity, Kind::blowup, Kind::verify}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidArgument("unknown kind '" + std::string(name) +
                          "' (expected minimize, diagnose, monotonicity, blowup or verify)");
}

lattice::GridDomain GridSpec::build() const {
    if (dim != 2 && dim != 3) {
        bad("grid.dim must be 2 or 3");
    }
    std::array<double, 3> extent{};
    for (int a = 0; a < dim; ++a) {
        extent[a] = hi[a] - lo[a];
        if (!(extent[a] > 0.0)) {
            bad("grid.hi must exceed grid.lo on every axis");
        }
        if (nodes[a] < 3) {
            bad("grid.nodes must be at least 3 per axis");
        }
    }
    return lattice::make_grid(std::span<const double>(lo.data(), dim), std::span<const double>(extent.data(), dim),
                              std::span<const std::size_t>(nodes.data(), dim));
}

double ScalarSpec::operator()(const Point& p) const {
    switch (type) {
        case Type::constant:
            return value;
        case Type::expression:
            return (*expr)(p);
        case Type::radial: {
            double r2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                r2 += (p[a] - center[a]) * (p[a] - center[a]);
            }
            return base + amp * std::pow(std::sqrt(r2), power);
        }
    }
    return 0.0;
}

lattice::ScalarFunction ScalarSpec::function(int dim) const {
    return [field = *this, dim](const Point& p) {
        Point q{};
        std::copy(p.begin(), p.begin() + dim, q.begin());
        return field(q);
    };
}

functional::WeightField WeightSpec::build(const lattice::GridDomain& g) const {
    lattice::GridFunction qp = lattice::sample(q_plus.function(g.dim()), g);
    if (mode == functional::Phase::one_phase) {
        return functional::WeightField::one_phase(std::move(qp));
    }
    return functional::WeightField::two_phase(std::move(qp), lattice::sample(q_minus.function(g.dim()), g));
}

solver::SolveConfig SolverSpec::build(const lattice::GridDomain& g) const {
    solver::SolveConfig cfg = epsilons.empty() ? solver::SolveConfig::defaults_for(g, final_width) : solver::SolveConfig{};
    if (!epsilons.empty()) {
        cfg.epsilons = epsilons;
    }
    cfg.max_outer = max_outer;
    cfg.grad_tol = grad_tol;
    cfg.step_rule = step_rule;
    cfg.validate(g);
    return cfg;
}

ExperimentConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("config: malformed JSON: ") + e.what());
    }
    only_keys(j, "config",
              {"name", "kind", "grid", "weights", "boundary", "exact", "exact_tol", "solver", "targets", "diagnostics",
               "almost_min", "monotonicity", "blowup", "output"});
    ExperimentConfig c;
    c.name = j.value("name", std::string("experiment"));
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) {
            bad("kind must be a string");
        }
        c.kind = parse_kind(j.at("kind").get<std::string>());
    }

    if (!j.contains("grid")) {
        bad("missing grid");
    }
    const json& gj = j.at("grid");
    only_keys(gj, "grid", {"dim", "lo", "hi", "nodes"});
    c.grid.dim = int_or(gj, "dim", 2, "grid");
    if (c.grid.dim != 2 && c.grid.dim != 3) {
        bad("grid.dim must be 2 or 3");
    }
    const int dim = c.grid.dim;
    auto axis_values = [&](const char* key, auto fill) {
        if (!gj.contains(key)) {
            return;
        }
        const json& v = gj.at(key);
        if (v.is_array()) {
            if (static_cast<int>(v.size()) != dim) {
                bad(std::string("grid.") + key + " must have " + std::to_string(dim) + " entries");
            }
            for (int a = 0; a < dim; ++a) {
                fill(a, v[a]);
            }
        } else {
            for (int a = 0; a < dim; ++a) {
                fill(a, v);
            }
        }
    };
    axis_values("lo", [&](int a, const json& v) { c.grid.lo[a] = num(v, "grid.lo"); });
    axis_values("hi", [&](int a, const json& v) { c.grid.hi[a] = num(v, "grid.hi"); });
    axis_values("nodes", [&](int a, const json& v) {
        if (!v.is_number_integer() || v.get<long long>() < 3) {
            bad("grid.nodes must be integers >= 3");
        }
        c.grid.nodes[a] = v.get<std::size_t>();
    });
    const lattice::GridDomain g = c.grid.build();

    if (!j.contains("weights")) {
        bad("missing weights");
    }
    const json& wj = j.at("weights");
    only_keys(wj, "weights", {"mode", "q_plus", "q_minus"});
    const std::string mode = wj.value("mode", std::string("one_phase"));
    if (mode == "one_phase") {
        c.weights.mode = functional::Phase::one_phase;
    } else if (mode == "two_phase") {
        c.weights.mode = functional::Phase::two_phase;
    } else {
        bad("weights.mode must be one_phase or two_phase");
    }
    if (!wj.contains("q_plus")) {
        bad("missing weights.q_plus");
    }
    c.weights.q_plus = scalar(wj.at("q_plus"), dim, "weights.q_plus");
    if (wj.contains("q_minus")) {
        c.weights.q_minus = scalar(wj.at("q_minus"), dim, "weights.q_minus");
    }
    const functional::WeightField w = c.weights.build(g);
    for (const lattice::GridFunction* q : {&w.q_plus(), &w.q_minus()}) {
        for (double v : q->values()) {
            if (!std::isfinite(v) || v < 0.0) {
                bad("weights must be finite and nonnegative on the grid");
            }
        }
    }

    if (!j.contains("boundary")) {
        bad("missing boundary");
    }
    c.boundary = scalar(j.at("boundary"), dim, "boundary");
    if (j.contains("exact")) {
        c.exact = scalar(j.at("exact"), dim, "exact");
    }
    c.exact_tol = num_or(j, "exact_tol", c.exact_tol, "config");
    if (!(c.exact_tol > 0.0)) {
        bad("exact_tol must be positive");
    }

    if (j.contains("solver")) {
        const json& sj = j.at("solver");
        only_keys(sj, "solver", {"epsilons", "final_width", "max_outer", "grad_tol", "step_rule"});
        if (sj.contains("epsilons")) {
            if (!sj.at("epsilons").is_array()) {
                bad("solver.epsilons must be an array");
            }
            for (const json& v : sj.at("epsilons")) {
                c.solver.epsilons.push_back(num(v, "solver.epsilons"));
            }
        }
        c.solver.final_width = num_or(sj, "final_width", 0.0, "solver");
        c.solver.max_outer = int_or(sj, "max_outer", c.solver.max_outer, "solver");
        c.solver.grad_tol = num_or(sj, "grad_tol", c.solver.grad_tol, "solver");
        const std::string rule = sj.value("step_rule", std::string("backtracking"));
        if (rule == "fixed") {
            c.solver.step_rule = solver::StepRule::fixed;
        } else if (rule != "backtracking") {
            bad("solver.step_rule must be fixed or backtracking");
        }
    }
    (void)c.solver.build(g);

    if (j.contains("targets")) {
        if (!j.at("targets").is_array()) {
            bad("targets must be an array");
        }
        for (const json& t : j.at("targets")) {
            only_keys(t, "targets[]", {"center", "radius"});
            if (!t.contains("center") || !t.contains("radius")) {
                bad("each target needs center and radius");
            }
            const Ball b{point(t.at("center"), dim, "targets[].center"), num(t.at("radius"), "targets[].radius")};
            if (!(b.radius > 0.0)) {
                bad("target radius must be positive");
            }
            g.require(b, "config target");
            c.targets.push_back(b);
        }
    }

    if (j.contains("diagnostics")) {
        const json& dj = j.at("diagnostics");
        only_keys(dj, "diagnostics", {"tau", "C0", "C1", "r0", "rho0", "L", "eta0", "K2", "gamma", "eta3"});
        auto& o = c.diagnostics;
        o.good.tau = num_or(dj, "tau", o.good.tau, "diagnostics");
        o.good.C0 = num_or(dj, "C0", o.good.C0, "diagnostics");
        o.good.C1 = num_or(dj, "C1", o.good.C1, "diagnostics");
        o.good.r0 = num_or(dj, "r0", o.good.r0, "diagnostics");
        o.nondeg.rho0 = num_or(dj, "rho0", o.nondeg.rho0, "diagnostics");
        o.nondeg.L = num_or(dj, "L", o.nondeg.L, "diagnostics");
        o.nondeg.eta0 = num_or(dj, "eta0", o.nondeg.eta0, "diagnostics");
        o.K2 = num_or(dj, "K2", o.K2, "diagnostics");
        o.gamma = num_or(dj, "gamma", o.gamma, "diagnostics");
        o.eta3 = num_or(dj, "eta3", o.eta3, "diagnostics");
    }
    c.diagnostics.good.validate();
    c.diagnostics.nondeg.validate();

    if (j.contains("almost_min")) {
        const json& aj = j.at("almost_min");
        only_keys(aj, "almost_min", {"kappa", "alpha"});
        c.kappa = num_or(aj, "kappa", c.kappa, "almost_min");
        c.alpha = num_or(aj, "alpha", c.alpha, "almost_min");
    }
    (void)functional::AlmostMinParams(c.kappa, c.alpha);

    if (j.contains("monotonicity")) {
        const json& mj = j.at("monotonicity");
        only_keys(mj, "monotonicity",
                  {"center", "r_min", "r_max", "count", "delta", "expected_limit", "violation_limit"});
        auto& m = c.monotonicity;
        m.enabled = true;
        if (mj.contains("center")) {
            m.center = point(mj.at("center"), dim, "monotonicity.center");
        }
        m.r_min = num_or(mj, "r_min", m.r_min, "monotonicity");
        m.r_max = num_or(mj, "r_max", m.r_max, "monotonicity");
        m.count = int_or(mj, "count", m.count, "monotonicity");
        m.delta = num_or(mj, "delta", m.delta, "monotonicity");
        if (mj.contains("expected_limit")) {
            m.expected_limit = num(mj.at("expected_limit"), "monotonicity.expected_limit");
        }
        if (mj.contains("violation_limit")) {
            m.violation_limit = num(mj.at("violation_limit"), "monotonicity.violation_limit");
        }
        if (!(m.r_min > 0.0) || !(m.r_max > m.r_min) || m.count < 2) {
            bad("monotonicity needs 0 < r_min < r_max and count >= 2");
        }
        g.require(Ball{m.center, 2.0 * m.r_max}, "monotonicity ball");
    }

    if (j.contains("blowup")) {
        const json& bj = j.at("blowup");
        only_keys(bj, "blowup", {"base_point", "radii", "R", "res", "source", "expect_identical"});
        auto& b = c.blowup;
        b.enabled = true;
        if (bj.contains("base_point")) {
            b.base_point = point(bj.at("base_point"), dim, "blowup.base_point");
        }
        if (!bj.contains("radii")) {
            bad("blowup needs radii");
        }
        b.radii = radii_list(bj.at("radii"), "blowup.radii");
        b.R = num_or(bj, "R", b.R, "blowup");
        b.res = static_cast<std::size_t>(int_or(bj, "res", static_cast<int>(b.res), "blowup"));
        const std::string source = bj.value("source", std::string("solve"));
        if (source != "solve" && source != "exact") {
            bad("blowup.source must be solve or exact");
        }
        b.from_exact = source == "exact";
        if (b.from_exact && !c.exact) {
            bad("blowup.source = exact needs an exact solution");
        }
        b.expect_identical = bj.value("expect_identical", false);
        if (!(b.R > 0.0) || b.res < 3) {
            bad("blowup needs R > 0 and res >= 3");
        }
        for (std::size_t k = 0; k < b.radii.size(); ++k) {
            if (!(b.radii[k] > 0.0) || (k > 0 && !(b.radii[k] < b.radii[k - 1]))) {
                bad("blowup radii must be positive and strictly decreasing");
            }
        }
    }

    if (j.contains("output")) {
        if (!j.at("output").is_string()) {
            bad("output must be a string");
        }
        c.output = j.at("output").get<std::string>();
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw InvalidArgument("cannot open config " + path);
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
    const int dim = c.grid.dim;
    json j;
    j["name"] = c.name;
    j["kind"] = std::string(to_string(c.kind));
    json g;
    g["dim"] = dim;
    g["lo"] = std::vector<double>(c.grid.lo.begin(), c.grid.lo.begin() + dim);
    g["hi"] = std::vector<double>(c.grid.hi.begin(), c.grid.hi.begin() + dim);
    g["nodes"] = std::vector<std::size_t>(c.grid.nodes.begin(), c.grid.nodes.begin() + dim);
    j["grid"] = g;
    json w;
    w["mode"] = c.weights.mode == functional::Phase::one_phase ? "one_phase" : "two_phase";
    w["q_plus"] = scalar_json(c.weights.q_plus, dim);
    w["q_minus"] = scalar_json(c.weights.q_minus, dim);
    j["weights"] = w;
    j["boundary"] = scalar_json(c.boundary, dim);
    if (c.exact) {
        j["exact"] = scalar_json(*c.exact, dim);
    }
    j["exact_tol"] = c.exact_tol;
    json s;
    s["epsilons"] = c.solver.epsilons;
    s["final_width"] = c.solver.final_width;
    s["max_outer"] = c.solver.max_outer;
    s["grad_tol"] = c.solver.grad_tol;
    s["step_rule"] = step_rule_name(c.solver.step_rule);
    j["solver"] = s;
    json targets = json::array();
    for (const Ball& b : c.targets) {
        json t;
        t["center"] = point_json(b.center, dim);
        t["radius"] = b.radius;
        targets.push_back(t);
    }
    j["targets"] = targets;
    const auto& o = c.diagnostics;
    j["diagnostics"] = {{"tau", o.good.tau},   {"C0", o.good.C0},     {"C1", o.good.C1},
                        {"r0", o.good.r0},     {"rho0", o.nondeg.rho0}, {"L", o.nondeg.L},
                        {"eta0", o.nondeg.eta0}, {"K2", o.K2},         {"gamma", o.gamma},
                        {"eta3", o.eta3}};
    j["almost_min"] = {{"kappa", c.kappa}, {"alpha", c.alpha}};
    if (c.monotonicity.enabled) {
        const auto& m = c.monotonicity;
        json mj;
        mj["center"] = point_json(m.center, dim);
        mj["r_min"] = m.r_min;
        mj["r_max"] = m.r_max;
        mj["count"] = m.count;
        mj["delta"] = m.delta;
        if (m.expected_limit) {
            mj["expected_limit"] = *m.expected_limit;
        }
        if (m.violation_limit) {
            mj["violation_limit"] = *m.violation_limit;
        }
        j["monotonicity"] = mj;
    }
    if (c.blowup.enabled) {
        const auto& b = c.blowup;
        json bj;
        bj["base_point"] = point_json(b.base_point, dim);
        bj["radii"] = b.radii;
        bj["R"] = b.R;
        bj["res"] = b.res;
        bj["source"] = b.from_exact ? "exact" : "solve";
        bj["expect_identical"] = b.expect_identical;
        j["blowup"] = bj;
    }
    j["output"] = c.output;
    return j.dump(2);
}

}  // namespace fblab::lab
