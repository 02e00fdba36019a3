#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rbsde/par.hpp"
#include "rbsde/scenario.hpp"

namespace {

using rbsde::json;

int log_level() {
    const char* env = std::getenv("RBSDE_LOG");
    return env ? std::atoi(env) : 0;
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buffer;
}

// Run metadata lives outside the report body so reports stay byte-identical
// across reruns of the same scenario and seed.
void write_report(const json& report, const std::string& out_path) {
    json envelope{{"schema", "rbsde.report/1"},
                  {"meta", json{{"generated_at", timestamp()}, {"tool", "rbsde_cli"}}},
                  {"report", report}};
    const std::string text = envelope.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    const std::string tmp = out_path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw rbsde::Error(rbsde::ErrorKind::io, "cannot write " + out_path);
        out << text;
    }
    if (std::rename(tmp.c_str(), out_path.c_str()) != 0)
        throw rbsde::Error(rbsde::ErrorKind::io, "cannot move report into place: " + out_path);
}

struct CommonFlags {
    std::string scenario_path;
    std::string scenario_prime_path;
    std::string out_path;
    std::string csv_path;
    double tol = -1.0;
    int max_iter = -1;
    bool force_gate = false;
    long long seed = -1;
    bool parallel = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_prime) {
    cmd->add_option("--scenario", flags.scenario_path, "scenario JSON file")->required();
    if (with_prime)
        cmd->add_option("--scenario-prime", flags.scenario_prime_path, "second scenario JSON file")
            ->required();
    cmd->add_option("--out", flags.out_path, "report JSON path (stdout if omitted)");
    cmd->add_option("--csv", flags.csv_path, "per-node CSV table path");
    cmd->add_option("--tol", flags.tol, "solver tolerance override");
    cmd->add_option("--max-iter", flags.max_iter, "Picard iteration cap override");
    cmd->add_flag("--force-gate", flags.force_gate, "iterate past a failed smallness gate");
    cmd->add_option("--seed", flags.seed, "seed override recorded in the report");
    cmd->add_flag("--parallel", flags.parallel, "enable the OpenMP kernels");
}

rbsde::Scenario load(const CommonFlags& flags, const std::string& path) {
    rbsde::Scenario s = rbsde::load_scenario_file(path);
    if (flags.tol > 0.0) s.options.tol = flags.tol;
    if (flags.max_iter > 0) s.options.max_iter = flags.max_iter;
    if (flags.force_gate) s.options.force_gate = true;
    if (flags.seed >= 0) s.options.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.parallel) s.options.parallel = true;
    rbsde::par::enable(s.options.parallel);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reflected quadratic BSDE laboratory on finite trees"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string scheme;
    CLI::App* solve = app.add_subcommand("solve", "solve a scenario (picard/full/gauge/auto)");
    add_common(solve, flags, false);
    solve->add_option("--scheme", scheme, "auto | picard | full | gauge | superlinear | monotone");

    CLI::App* oracle = app.add_subcommand("oracle", "cross-check against stopping-rule enumeration");
    add_common(oracle, flags, false);

    CLI::App* compare = app.add_subcommand("compare", "comparison theorem on ordered data");
    add_common(compare, flags, true);

    CLI::App* compare_k =
        app.add_subcommand("compare-k", "special comparison of the increasing processes");
    add_common(compare_k, flags, true);

    CLI::App* perturb = app.add_subcommand("perturb", "staged trace of the split-and-perturb solve");
    add_common(perturb, flags, false);

    CLI::App* stability = app.add_subcommand("stability", "local Lipschitz stability experiment");
    add_common(stability, flags, false);

    CLI::App* bounds = app.add_subcommand("bounds", "a priori BMO bound report");
    add_common(bounds, flags, false);

    CLI::App* validate = app.add_subcommand("validate", "sample the declared assumptions");
    add_common(validate, flags, false);

    CLI11_PARSE(app, argc, argv);

    try {
        rbsde::RunResult result;
        std::string csv;
        if (solve->parsed()) {
            rbsde::Scenario s = load(flags, flags.scenario_path);
            if (!scheme.empty()) s.options.scheme = scheme;
            if (log_level() > 0)
                std::cerr << "solving " << flags.scenario_path << " with scheme " << s.options.scheme
                          << "\n";
            result = rbsde::run_solve(s);
            if (!flags.csv_path.empty() && result.solution)
                csv = rbsde::solution_csv(*result.solution, s.model);
        } else if (oracle->parsed()) {
            result = rbsde::run_oracle(load(flags, flags.scenario_path));
        } else if (compare->parsed()) {
            rbsde::Scenario a = load(flags, flags.scenario_path);
            rbsde::Scenario b = load(flags, flags.scenario_prime_path);
            result = rbsde::run_compare(a, b);
            if (!flags.csv_path.empty() && result.solution && result.solution_prime)
                csv = rbsde::comparison_csv(*result.solution, *result.solution_prime, a.model);
        } else if (compare_k->parsed()) {
            rbsde::Scenario a = load(flags, flags.scenario_path);
            rbsde::Scenario b = load(flags, flags.scenario_prime_path);
            result = rbsde::run_compare_k(a, b);
        } else if (perturb->parsed()) {
            result = rbsde::run_perturb(load(flags, flags.scenario_path));
        } else if (stability->parsed()) {
            result = rbsde::run_stability(load(flags, flags.scenario_path));
        } else if (bounds->parsed()) {
            result = rbsde::run_bounds(load(flags, flags.scenario_path));
        } else if (validate->parsed()) {
            result = rbsde::run_validate(load(flags, flags.scenario_path));
        }

        if (!csv.empty()) {
            std::ofstream out(flags.csv_path);
            if (!out) throw rbsde::Error(rbsde::ErrorKind::io, "cannot write " + flags.csv_path);
            out << csv;
        }
        write_report(result.report, flags.out_path);
        return result.exit_code;
    } catch (const rbsde::Error& e) {
        std::cerr << "error (" << rbsde::to_string(e.kind()) << "): " << e.what() << "\n";
        switch (e.kind()) {
            case rbsde::ErrorKind::convergence:
            case rbsde::ErrorKind::gate:
                return 1;
            default:
                return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
