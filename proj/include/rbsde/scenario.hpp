#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rbsde/analysis.hpp"

namespace rbsde {

using json = nlohmann::ordered_json;

struct RunOptions {
    std::string scheme = "auto";  // auto | picard | full | gauge | superlinear | monotone
    double tol = 1e-10;
    int max_iter = 200;
    bool force_gate = false;
    std::uint64_t seed = 1;
    bool parallel = false;
};

// A validated problem instance: parsing fails loudly, so anything that
// reaches the solver is well formed.
struct Scenario {
    TreeModel model;
    Measure measure;
    RBSDEData data;
    RunOptions options;
    std::vector<StabilityDelta> stability_deltas;
};

Scenario parse_scenario(const json& j);
Scenario load_scenario_file(const std::string& path);

// Node-bound process from a scalar, an expression in (t, m, w) or explicit
// per-level values.
AdaptedProcess node_process_from_json(const json& spec, const TreeModel& model, int last_level);
std::vector<double> leaf_values_from_json(const json& spec, const TreeModel& model);

json budget_to_json(const SmallnessBudget& b);
json trace_to_json(const PicardTrace& t);
json stages_to_json(const std::vector<StageRecord>& stages);
json bound_to_json(const BoundReport& r);
json norms_to_json(const Solution& sol, const TreeModel& model, const Measure& measure);

struct RunResult {
    int exit_code = 0;
    json report;
    std::optional<Solution> solution;        // filled by solve-like runs
    std::optional<Solution> solution_prime;  // filled by the comparisons
};

RunResult run_solve(const Scenario& s);
RunResult run_oracle(const Scenario& s);
RunResult run_compare(const Scenario& s, const Scenario& prime);
RunResult run_compare_k(const Scenario& s, const Scenario& prime);
RunResult run_perturb(const Scenario& s);
RunResult run_stability(const Scenario& s);
RunResult run_bounds(const Scenario& s);
RunResult run_validate(const Scenario& s);

// Per-node CSV table for a solution or a comparison.
std::string solution_csv(const Solution& sol, const TreeModel& model);
std::string comparison_csv(const Solution& sol, const Solution& sol_prime, const TreeModel& model);

}  // namespace rbsde
