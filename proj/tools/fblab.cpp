// fblab: run experiment configs and built-in scenarios from the command line.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fblab/errors.hpp"
#include "fblab/lab.hpp"

namespace fs = std::filesystem;
using namespace fblab;

namespace {

struct Job {
    std::string stem;
    lab::ExperimentConfig cfg;
    std::string out;
    std::ostringstream log;
    int code = 0;
};

std::string output_root(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("FBLAB_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "fblab_out";
}

int run_jobs(lab::Kind kind, const std::vector<std::string>& configs, const std::vector<std::string>& scenarios,
             const std::string& out_flag, int jobs, bool seed_check) {
    if (configs.empty() && scenarios.empty()) {
        std::cerr << "fblab: give at least one --config or --scenario\n";
        return lab::kExitInvalid;
    }
    std::vector<std::unique_ptr<Job>> list;
    try {
        for (const std::string& path : configs) {
            auto j = std::make_unique<Job>();
            j->stem = fs::path(path).stem().string();
            j->cfg = lab::load_config(path);
            list.push_back(std::move(j));
        }
        for (const std::string& name : scenarios) {
            auto j = std::make_unique<Job>();
            j->stem = name;
            j->cfg = lab::scenario(name);
            list.push_back(std::move(j));
        }
    } catch (const std::exception& e) {
        std::cerr << "fblab: " << e.what() << '\n';
        return lab::kExitInvalid;
    }
    const std::string root = output_root(out_flag);
    for (auto& j : list) {
        j->cfg.kind = kind;
        j->out = (out_flag.empty() && !j->cfg.output.empty()) ? j->cfg.output : (fs::path(root) / j->stem).string();
    }
    for (std::size_t a = 0; a < list.size(); ++a) {
        for (std::size_t b = a + 1; b < list.size(); ++b) {
            if (fs::path(list[a]->out).lexically_normal() == fs::path(list[b]->out).lexically_normal()) {
                std::cerr << "fblab: two experiments would write to " << list[a]->out << '\n';
                return lab::kExitInvalid;
            }
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < list.size(); i = next++) {
            Job& j = *list[i];
            j.code = seed_check ? lab::run_with_seed_check(j.cfg, j.out, j.log) : lab::run(j.cfg, j.out, j.log);
        }
    };
    const int n = std::clamp(jobs, 1, static_cast<int>(list.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }

    int code = lab::kExitOk;
    for (const auto& j : list) {
        std::cerr << j->log.str();
        if (code == lab::kExitOk && j->code != lab::kExitOk) {
            code = j->code;
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fblab: free-boundary numerical laboratory"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::vector<std::string> scenarios;
    std::string out;
    int jobs = 1;
    bool seed_check = false;
    lab::Kind kind = lab::Kind::verify;

    for (lab::Kind k : {lab::Kind::minimize, lab::Kind::diagnose, lab::Kind::monotonicity, lab::Kind::blowup,
                        lab::Kind::verify}) {
        CLI::App* sub = app.add_subcommand(std::string(lab::to_string(k)), "run the " +
                                                                                std::string(lab::to_string(k)) +
                                                                                " pipeline");
        sub->add_option("--config", configs, "experiment JSON (repeatable)");
        sub->add_option("--scenario", scenarios, "built-in scenario (repeatable)");
        sub->add_option("--out", out, "output root; each experiment writes to <out>/<name>");
        sub->add_option("--jobs", jobs, "experiments to run concurrently")->check(CLI::PositiveNumber);
        sub->add_flag("--seed-check", seed_check, "run twice and require byte-identical outputs");
        sub->callback([&kind, k] { kind = k; });
    }

    std::string scenario_name;
    bool print = false;
    bool list = false;
    CLI::App* sc = app.add_subcommand("scenario", "inspect the built-in scenarios");
    sc->add_option("name", scenario_name, "scenario name");
    sc->add_flag("--print", print, "dump the scenario config as JSON");
    sc->add_flag("--list", list, "list scenario names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : lab::kExitInvalid;
    }

    if (sc->parsed()) {
        if (list || scenario_name.empty()) {
            for (const std::string& n : lab::scenario_names()) {
                std::cout << n << '\n';
            }
            return lab::kExitOk;
        }
        try {
            const lab::ExperimentConfig cfg = lab::scenario(scenario_name);
            if (print) {
                std::cout << lab::to_json(cfg) << '\n';
            }
            return lab::kExitOk;
        } catch (const std::exception& e) {
            std::cerr << "fblab: " << e.what() << '\n';
            return lab::kExitInvalid;
        }
    }
    return run_jobs(kind, configs, scenarios, out, jobs, seed_check);
}
