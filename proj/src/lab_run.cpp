#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fblab/blowup.hpp"
#include "fblab/diagnostics.hpp"
#include "fblab/errors.hpp"
#include "fblab/harmonic.hpp"
#include "fblab/lab.hpp"
#include "fblab/monotonicity.hpp"

namespace fblab::lab {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error("cannot write " + path.string());
    }
    os << text;
    if (text.empty() || text.back() != '\n') {
        os << '\n';
    }
}

json point_json(const Point& p, int dim) { return std::vector<double>(p.begin(), p.begin() + dim); }

struct Check {
    std::string name;
    double value;
    std::string relation;  // "<=" or ">"
    double limit;

    [[nodiscard]] bool pass() const {
        if (!std::isfinite(value)) {
            return false;
        }
        return relation == "<=" ? value <= limit : value > limit;
    }
};

class Pipeline {
public:
    Pipeline(const ExperimentConfig& cfg, const fs::path& out)
        : cfg_(cfg), out_(out), grid_(cfg.grid.build()), w_(cfg.weights.build(grid_)),
          amp_(cfg.kappa, cfg.alpha) {}

    int run(std::ostream& err) {
        fs::create_directories(out_);
        switch (cfg_.kind) {
            case Kind::minimize:
                solve();
                write_file(out_ / "minimize.json", summary().dump(2));
                return kExitOk;
            case Kind::diagnose:
                solve();
                write_file(out_ / "diagnostics.json", diagnose().dump(2));
                return kExitOk;
            case Kind::monotonicity:
                solve();
                write_file(out_ / "monotonicity.json", monotonicity().dump(2));
                return kExitOk;
            case Kind::blowup:
                if (!cfg_.blowup.from_exact) {
                    solve();
                }
                write_file(out_ / "blowup.json", blowup().dump(2));
                return kExitOk;
            case Kind::verify:
                return verify(err);
        }
        return kExitFailure;
    }

private:
    void solve() {
        const solver::SolveConfig sc = cfg_.solver.build(grid_);
        result_ = solver::minimize(grid_, w_, cfg_.boundary.function(grid_.dim()), sc,
                                   cfg_.weights.mode == functional::Phase::one_phase);
        lattice::save_fbgf((out_ / "solution.fbgf").string(), result_.u);
        std::ostringstream csv;
        solver::write_convergence_csv(csv, result_);
        write_file(out_ / "convergence.csv", csv.str());
    }

    [[nodiscard]] const lattice::GridFunction& u() const { return result_.u; }

    // Inner half-domain: the middle half of every axis.
    [[nodiscard]] bool inner(const Point& p) const {
        for (int a = 0; a < grid_.dim(); ++a) {
            const double mid = grid_.origin()[a] + 0.5 * grid_.extent()[a];
            if (std::abs(p[a] - mid) > 0.25 * grid_.extent()[a] + 1e-12) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] std::optional<double> exact_error() const {
        if (!cfg_.exact) {
            return std::nullopt;
        }
        const lattice::ScalarFunction f = cfg_.exact->function(grid_.dim());
        double err = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < grid_.node_count(); ++i) {
            const Point p = grid_.node_point(i);
            if (inner(p)) {
                const double e = f(p);
                err = std::max(err, std::abs(u()[i] - e));
                scale = std::max(scale, std::abs(e));
            }
        }
        return scale > 0.0 ? err / scale : err;
    }

    [[nodiscard]] double energy_rise() const {
        double rise = 0.0;
        for (const solver::StageLog& s : result_.stages) {
            for (std::size_t k = 1; k < s.j_eps.size(); ++k) {
                const double d = (s.j_eps[k] - s.j_eps[k - 1]) / std::max(1.0, std::abs(s.j_eps[k - 1]));
                rise = std::max(rise, d);
            }
        }
        return rise;
    }

    json summary() const {
        json j;
        j["name"] = cfg_.name;
        j["kind"] = std::string(to_string(cfg_.kind));
        j["node_count"] = grid_.node_count();
        j["spacing"] = grid_.max_spacing();
        j["stage_count"] = result_.stage_count;
        j["epsilon_final"] = result_.stages.empty() ? 0.0 : result_.stages.back().epsilon;
        j["J_eps_final"] = result_.stages.empty() ? 0.0 : result_.stages.back().j_eps.back();
        j["grad_norm_final"] = result_.grad_norm_final;
        if (const auto e = exact_error()) {
            j["exact_rel_error"] = *e;
        }
        return j;
    }

    json diagnose() {
        json targets = json::array();
        reports_.clear();
        for (const Ball& b : cfg_.targets) {
            reports_.push_back(diagnostics::diagnose(u(), w_, b, amp_, cfg_.diagnostics));
            json t;
            t["center"] = point_json(b.center, grid_.dim());
            t["radius"] = b.radius;
            t["report"] = json::parse(diagnostics::to_json(reports_.back()));
            targets.push_back(t);
        }
        json j;
        j["name"] = cfg_.name;
        j["targets"] = targets;
        return j;
    }

    json monotonicity() {
        const MonotonicitySpec& m = cfg_.monotonicity;
        if (!m.enabled) {
            throw InvalidArgument("config has no monotonicity section");
        }
        trace_ = monotonicity::trace(u(), m.center, m.r_min, m.r_max, m.count, m.delta, cfg_.alpha);
        std::ostringstream csv;
        monotonicity::write_trace_csv(csv, *trace_);
        write_file(out_ / "trace.csv", csv.str());
        double mean = 0.0;
        for (double v : trace_->phi) {
            mean += v;
        }
        mean /= static_cast<double>(trace_->phi.size());
        double dev = 0.0;
        for (double v : trace_->phi) {
            dev = std::max(dev, std::abs(v - mean));
        }
        phi_mean_ = mean;
        phi_dev_ = mean > 0.0 ? dev / mean : dev;
        json j;
        j["center"] = point_json(m.center, grid_.dim());
        j["delta"] = m.delta;
        j["violation"] = trace_->violation;
        j["center_value"] = trace_->center_value;
        j["phi_mean"] = mean;
        j["phi_rel_deviation"] = phi_dev_;
        if (trace_->radii.size() >= 4) {
            phi_limit_ = monotonicity::phi_limit_estimate(*trace_);
            j["phi_limit"] = *phi_limit_;
        }
        return j;
    }

    json blowup() {
        const BlowupSpec& b = cfg_.blowup;
        if (!b.enabled) {
            throw InvalidArgument("config has no blowup section");
        }
        const lattice::GridFunction source =
            b.from_exact ? lattice::sample(cfg_.exact->function(grid_.dim()), grid_) : u();
        seq_ = blowup::build_sequence(source, b.base_point, b.radii, b.R, b.res);
        blowup::save_sequence(*seq_, (out_ / "blowup").string());
        json j;
        j["source"] = b.from_exact ? "exact" : "solve";
        j["center_value"] = seq_->center_value;
        if (seq_->members.size() >= 2) {
            const functional::WeightField frozen = functional::WeightField::constant(
                seq_->grid, lattice::interpolate(w_.q_plus(), b.base_point),
                lattice::interpolate(w_.q_minus(), b.base_point), w_.mode());
            report_ = blowup::convergence_report(*seq_, frozen);
            j["convergence"] = json::parse(blowup::to_json(*report_));
        }
        return j;
    }

    int verify(std::ostream& err) {
        solve();
        std::vector<Check> checks;
        write_file(out_ / "minimize.json", summary().dump(2));

        bool finite = true;
        for (double v : u().values()) {
            finite = finite && std::isfinite(v);
        }
        checks.push_back({"solution_finite", finite ? 0.0 : 1.0, "<=", 0.0});
        checks.push_back({"smoothed_energy_rise", energy_rise(), "<=", 1e-12});

        // Truncating at the extreme boundary values never raises the functional.
        double bmin = INFINITY;
        double bmax = -INFINITY;
        double umin = INFINITY;
        double umax = -INFINITY;
        for (std::size_t i = 0; i < grid_.node_count(); ++i) {
            if (grid_.on_boundary(grid_.node_multi(i))) {
                bmin = std::min(bmin, u()[i]);
                bmax = std::max(bmax, u()[i]);
            }
            umin = std::min(umin, u()[i]);
            umax = std::max(umax, u()[i]);
        }
        const double spread = std::max(1.0, bmax - bmin);
        checks.push_back({"max_principle", std::max({0.0, umax - bmax, bmin - umin}) / spread, "<=", 1e-9});

        if (const auto e = exact_error()) {
            checks.push_back({"exact_rel_error", *e, "<=", cfg_.exact_tol});
        }

        write_file(out_ / "diagnostics.json", diagnose().dump(2));
        for (std::size_t t = 0; t < cfg_.targets.size(); ++t) {
            const Ball& ball = cfg_.targets[t];
            const diagnostics::DiagnosticsReport& r = reports_[t];
            const std::string tag = "target" + std::to_string(t) + "_";
            const bool report_finite = std::isfinite(r.omega) && std::isfinite(r.b) && std::isfinite(r.b_plus) &&
                                       std::isfinite(r.lipschitz_est) &&
                                       (!r.nondeg.linear_growth || std::isfinite(*r.nondeg.linear_growth));
            checks.push_back({tag + "report_finite", report_finite ? 0.0 : 1.0, "<=", 0.0});
            checks.push_back({tag + "b_plus_dominates", std::abs(r.b) - r.b_plus, "<=", 1e-12});
            checks.push_back({tag + "vanish_conclusion", r.nondeg.vanish_holds ? 0.0 : 1.0, "<=", 0.0});
            if (cfg_.weights.mode == functional::Phase::one_phase && r.nondeg.linear_growth) {
                checks.push_back({tag + "linear_growth", *r.nondeg.linear_growth, ">", 0.0});
            }
            const lattice::GridFunction v = harmonic::harmonic_extension(u(), ball, 1e-10).extension;
            const double jb = functional::J(u(), w_, ball);
            checks.push_back(
                {tag + "harmonic_defect", functional::defect(u(), v, w_, amp_, ball), "<=",
                 functional::defect_slack(grid_, jb)});
        }

        if (cfg_.monotonicity.enabled) {
            write_file(out_ / "monotonicity.json", monotonicity().dump(2));
            double drop = 0.0;
            for (std::size_t k = 1; k < trace_->radii.size(); ++k) {
                for (const std::vector<double>* a : {&trace_->A_plus, &trace_->A_minus}) {
                    drop = std::max(drop, ((*a)[k - 1] - (*a)[k]) / std::max(1.0, std::abs((*a)[k - 1])));
                }
            }
            checks.push_back({"A_pm_nondecreasing", drop, "<=", 1e-12});
            if (const auto& ex = cfg_.monotonicity.expected_limit) {
                checks.push_back({"phi_flatness", phi_dev_, "<=", 0.05});
                if (phi_limit_) {
                    checks.push_back({"phi_limit_rel_error", std::abs(*phi_limit_ - *ex) / std::abs(*ex), "<=", 0.05});
                }
            }
            if (const auto& lim = cfg_.monotonicity.violation_limit) {
                checks.push_back({"acf_violation", trace_->violation, "<=", *lim});
            }
        }

        if (cfg_.blowup.enabled) {
            write_file(out_ / "blowup.json", blowup().dump(2));
            bool members_finite = true;
            double differing = 0.0;
            for (const lattice::GridFunction& m : seq_->members) {
                bool same = true;
                for (std::size_t i = 0; i < m.size(); ++i) {
                    members_finite = members_finite && std::isfinite(m[i]);
                    same = same && m[i] == seq_->members.front()[i];
                }
                differing += same ? 0.0 : 1.0;
            }
            checks.push_back({"blowup_members_finite", members_finite ? 0.0 : 1.0, "<=", 0.0});
            if (cfg_.blowup.expect_identical) {
                checks.push_back({"blowup_bitwise_members", differing, "<=", 0.0});
            }
        }

        json list = json::array();
        bool all = true;
        for (const Check& c : checks) {
            json e;
            e["name"] = c.name;
            e["value"] = c.value;
            e["relation"] = c.relation;
            e["limit"] = c.limit;
            e["pass"] = c.pass();
            list.push_back(e);
            if (!c.pass()) {
                all = false;
                err << "fblab: " << cfg_.name << ": check " << c.name << " failed: " << c.value << " " << c.relation
                    << " " << c.limit << " does not hold\n";
            }
        }
        json j;
        j["name"] = cfg_.name;
        j["pass"] = all;
        j["checks"] = list;
        write_file(out_ / "verify.json", j.dump(2));
        return all ? kExitOk : kExitFailure;
    }

    const ExperimentConfig& cfg_;
    fs::path out_;
    lattice::GridDomain grid_;
    functional::WeightField w_;
    functional::AlmostMinParams amp_;
    solver::SolveResult result_;
    std::vector<diagnostics::DiagnosticsReport> reports_;
    std::optional<monotonicity::MonotonicityTrace> trace_;
    std::optional<double> phi_limit_;
    double phi_mean_ = 0.0;
    double phi_dev_ = 0.0;
    std::optional<blowup::BlowupSequence> seq_;
    std::optional<blowup::ConvergenceReport> report_;
};

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            std::ifstream is(e.path(), std::ios::binary);
            std::ostringstream ss;
            ss << is.rdbuf();
            files[fs::relative(e.path(), root).generic_string()] = ss.str();
        }
    }
    return files;
}

}  // namespace

int run(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& err) {
    const std::string who = "fblab: " + cfg.name + ": ";
    try {
        Pipeline p(cfg, out_dir);
        return p.run(err);
    } catch (const DivergenceError& e) {
        err << who << "solver diverged: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const InvalidArgument& e) {
        err << who << e.what() << '\n';
        return kExitInvalid;
    } catch (const ContainmentError& e) {
        err << who << e.what() << '\n';
        return kExitInvalid;
    } catch (const NonFiniteError& e) {
        err << who << e.what() << '\n';
        return kExitInvalid;
    } catch (const FormatError& e) {
        err << who << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << who << e.what() << '\n';
        return kExitFailure;
    }
}

int run_with_seed_check(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& err) {
    const int first = run(cfg, out_dir, err);
    if (first != kExitOk && first != kExitFailure) {
        return first;
    }
    const fs::path scratch = fs::path(out_dir).string() + ".seed-check";
    std::error_code ec;
    fs::remove_all(scratch, ec);
    std::ostringstream quiet;
    const int second = run(cfg, scratch.string(), quiet);
    const auto a = snapshot(out_dir);
    const auto b = snapshot(scratch);
    fs::remove_all(scratch, ec);
    if (second != first) {
        err << "fblab: " << cfg.name << ": seed check: exit codes differ (" << first << " vs " << second << ")\n";
        return kExitFailure;
    }
    bool same = a.size() == b.size();
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        if (it == b.end() || it->second != bytes) {
            err << "fblab: " << cfg.name << ": seed check: " << name << " differs between runs\n";
            same = false;
        }
    }
    if (!same) {
        return kExitFailure;
    }
    return first;
}

}  // namespace fblab::lab
