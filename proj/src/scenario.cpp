#include "rbsde/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rbsde {

namespace {

GrowthFn growth_from_json(const json& j, const char* name) {
    if (j.is_number()) return GrowthFn::constant(j.get<double>());
    if (!j.is_object() || !j.contains("kind"))
        throw Error(ErrorKind::parse, std::string("scenario: bad growth function for ") + name);
    const std::string kind = j.at("kind").get<std::string>();
    const double c = j.value("c", 1.0);
    if (kind == "constant") return GrowthFn::constant(c);
    if (kind == "affine") return GrowthFn::affine(c);
    if (kind == "exp") return GrowthFn::exponential(c, j.value("a", 1.0));
    if (kind == "log_affine") return GrowthFn::log_affine(c);
    throw Error(ErrorKind::parse, std::string("scenario: unknown growth kind '") + kind + "' for " + name);
}

json growth_to_json(const GrowthFn& g) {
    json j;
    switch (g.kind()) {
        case GrowthFn::Kind::constant: j["kind"] = "constant"; break;
        case GrowthFn::Kind::affine: j["kind"] = "affine"; break;
        case GrowthFn::Kind::exponential: j["kind"] = "exp"; j["a"] = g.a(); break;
        case GrowthFn::Kind::log_affine: j["kind"] = "log_affine"; break;
    }
    j["c"] = g.c();
    return j;
}

double eval_node_expr(const ExprPtr& expr, const TreeModel& model, NodeId v) {
    return eval_expr(expr, [&](const std::string& name) -> double {
        if (name == "t") return model.time_of(v.level);
        if (name == "m") return model.m_at(v);
        if (name == "w") return model.w_at(v);
        throw Error(ErrorKind::parse, "scenario: unknown name '" + name + "' in node expression");
    });
}

}  // namespace

AdaptedProcess node_process_from_json(const json& spec, const TreeModel& model, int last_level) {
    AdaptedProcess out(model, last_level);
    if (spec.is_number()) {
        for (int t = 0; t <= last_level; ++t)
            for (double& v : out.level(t)) v = spec.get<double>();
        return out;
    }
    if (spec.is_string()) {
        const ExprPtr expr = parse_expr(spec.get<std::string>());
        for (int t = 0; t <= last_level; ++t)
            for (std::size_t i = 0; i < model.nodes_at(t); ++i)
                out.at(NodeId{t, i}) = eval_node_expr(expr, model, NodeId{t, i});
        return out;
    }
    if (spec.is_object() && spec.contains("levels")) {
        const auto& levels = spec.at("levels");
        if (!levels.is_array() || static_cast<int>(levels.size()) != last_level + 1)
            throw Error(ErrorKind::parse, "scenario: explicit process needs one array per level");
        for (int t = 0; t <= last_level; ++t) {
            const auto& row = levels[static_cast<std::size_t>(t)];
            if (row.size() != model.nodes_at(t))
                throw Error(ErrorKind::parse, "scenario: level " + std::to_string(t) +
                                                  " has wrong node count");
            for (std::size_t i = 0; i < row.size(); ++i)
                out.level(t)[i] = row[i].get<double>();
        }
        return out;
    }
    throw Error(ErrorKind::parse, "scenario: process must be a number, an expression or {levels: ...}");
}

std::vector<double> leaf_values_from_json(const json& spec, const TreeModel& model) {
    const std::size_t n = model.nodes_at(model.depth());
    std::vector<double> out(n);
    if (spec.is_number()) {
        for (double& v : out) v = spec.get<double>();
        return out;
    }
    if (spec.is_string()) {
        const ExprPtr expr = parse_expr(spec.get<std::string>());
        for (std::size_t i = 0; i < n; ++i)
            out[i] = eval_node_expr(expr, model, NodeId{model.depth(), i});
        return out;
    }
    if (spec.is_object() && spec.contains("leaves")) {
        const auto& leaves = spec.at("leaves");
        if (leaves.size() != n)
            throw Error(ErrorKind::parse, "scenario: terminal leaf list has wrong size");
        for (std::size_t i = 0; i < n; ++i) out[i] = leaves[i].get<double>();
        return out;
    }
    if (spec.is_object() && spec.contains("expr")) {
        const ExprPtr expr = parse_expr(spec.at("expr").get<std::string>());
        for (std::size_t i = 0; i < n; ++i)
            out[i] = eval_node_expr(expr, model, NodeId{model.depth(), i});
        return out;
    }
    throw Error(ErrorKind::parse, "scenario: terminal must be a number, an expression or {leaves: ...}");
}

Scenario parse_scenario(const json& j) {
    if (j.contains("schema") && j.at("schema").get<std::string>() != "rbsde.scenario/1")
        throw Error(ErrorKind::parse, "scenario: unsupported schema id '" +
                                          j.at("schema").get<std::string>() +
                                          "' (expected rbsde.scenario/1)");
    if (!j.contains("tree") || !j.contains("driver") || !j.contains("terminal") ||
        !j.contains("obstacle"))
        throw Error(ErrorKind::parse, "scenario: tree, driver, terminal and obstacle are required");

    const auto& jt = j.at("tree");
    TreeModel model(jt.at("depth").get<int>(), jt.at("branching").get<int>(),
                    jt.at("dt").get<double>(), jt.at("sigma").get<double>());

    const auto& jd = j.at("driver");
    std::map<std::string, AdaptedProcess> coefficients;
    if (jd.contains("coefficients"))
        for (const auto& [name, spec] : jd.at("coefficients").items())
            coefficients.emplace(name, node_process_from_json(spec, model, model.depth() - 1));

    DriverSpec driver;
    driver.f = std::make_shared<ExprDriver>(parse_expr(jd.at("f").get<std::string>()),
                                            std::move(coefficients));
    driver.g = node_process_from_json(jd.value("g", json(0.0)), model, model.depth() - 1);
    driver.nu_integrand =
        node_process_from_json(jd.value("nu", json(0.0)), model, model.depth() - 1);
    driver.r = node_process_from_json(jd.value("r", json(1.0)), model, model.depth() - 1);
    driver.h = node_process_from_json(jd.value("h", json(1.0)), model, model.depth() - 1);
    if (jd.contains("constants")) {
        const auto& jc = jd.at("constants");
        if (jc.contains("lambda")) driver.lambda = growth_from_json(jc.at("lambda"), "lambda");
        if (jc.contains("rho")) driver.rho = growth_from_json(jc.at("rho"), "rho");
        if (jc.contains("rho_prime")) driver.rho_prime = growth_from_json(jc.at("rho_prime"), "rho_prime");
    }
    if (jd.contains("family")) {
        const auto& jf = jd.at("family");
        const std::string kind = jf.is_string() ? jf.get<std::string>() : jf.at("kind").get<std::string>();
        if (kind == "lipschitz_y") driver.family = Family::lipschitz_y;
        else if (kind == "superlinear_y") driver.family = Family::superlinear_y;
        else if (kind == "monotone_y") driver.family = Family::monotone_y;
        else throw Error(ErrorKind::parse, "scenario: unknown family '" + kind + "'");
        if (jf.is_object() && jf.contains("phi")) driver.phi = growth_from_json(jf.at("phi"), "phi");
        if (jf.is_object() && jf.contains("mu")) driver.mu = jf.at("mu").get<double>();
    }

    // nu only acts through the orthogonal coordinate, which binary mode
    // does not have.
    if (model.branching() == 2)
        for (int t = 0; t < model.depth(); ++t)
            for (double v : driver.nu_integrand.level(t))
                if (v != 0.0)
                    throw Error(ErrorKind::data,
                                "scenario: nonzero nu requires branching 4 (orthogonal coordinate)");

    // ||g|| <= lambda(0), the floor of the growth function.
    double g_sup = 0.0;
    for (int t = 0; t < model.depth(); ++t)
        for (double v : driver.g.level(t)) g_sup = std::max(g_sup, std::abs(v));
    if (g_sup > driver.lambda(0.0) + 1e-12)
        throw Error(ErrorKind::data, "scenario: ||g|| exceeds the declared lambda");

    Scenario s{std::move(model), Measure(), RBSDEData{}, RunOptions{}, {}};
    s.measure = Measure::base(s.model);
    s.data.driver = std::move(driver);
    s.data.xi = leaf_values_from_json(j.at("terminal"), s.model);
    if (j.at("obstacle").is_object() && j.at("obstacle").contains("constant"))
        s.data.obstacle =
            node_process_from_json(j.at("obstacle").at("constant"), s.model, s.model.depth());
    else
        s.data.obstacle = node_process_from_json(j.at("obstacle"), s.model, s.model.depth());

    const auto& lt = s.data.obstacle.level(s.model.depth());
    for (std::size_t i = 0; i < s.data.xi.size(); ++i)
        if (s.data.xi[i] < lt[i])
            throw Error(ErrorKind::data,
                        "scenario: infeasible, xi < L_T at leaf " + std::to_string(i));

    if (j.contains("options")) {
        const auto& jo = j.at("options");
        s.options.scheme = jo.value("scheme", s.options.scheme);
        s.options.tol = jo.value("tol", s.options.tol);
        s.options.max_iter = jo.value("max_iter", s.options.max_iter);
        s.options.force_gate = jo.value("force_gate", s.options.force_gate);
        s.options.seed = jo.value("seed", s.options.seed);
        s.options.parallel = jo.value("parallel", s.options.parallel);
    }
    if (j.contains("stability"))
        for (const auto& jp : j.at("stability").at("pairs"))
            s.stability_deltas.push_back(StabilityDelta{
                jp.value("dxi_first", 0.0), jp.value("dalpha_first", 0.0),
                jp.value("dxi_second", 0.0), jp.value("dalpha_second", 0.0)});
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::parse, "scenario JSON error in " + path + ": " + e.what());
    }
    return parse_scenario(j);
}

json budget_to_json(const SmallnessBudget& b) {
    return json{{"lambda", b.lambda},       {"r_linf2_sq", b.r_linf2_sq},
                {"beta_linf1", b.beta_linf1}, {"epsilon0", b.epsilon0},
                {"r0", b.r0},               {"data_size", b.data_size},
                {"n_split", b.n_split}};
}

json trace_to_json(const PicardTrace& t) {
    json iterates = json::array();
    for (const auto& it : t.iterates)
        iterates.push_back(json{{"y_sinf", it.y_sinf}, {"n_bmo_sq", it.n_bmo_sq}, {"ds", it.ds_norm}});
    return json{{"iterations", t.iterations},
                {"converged", t.converged},
                {"gate_passed", t.gate_passed},
                {"final_norm", t.final_norm},
                {"r0", t.r0},
                {"contraction_ratios", t.contraction_ratios},
                {"iterates", iterates}};
}

json stages_to_json(const std::vector<StageRecord>& stages) {
    json out = json::array();
    for (const auto& s : stages)
        out.push_back(json{{"index", s.index},
                           {"delta_d", s.delta_d},
                           {"epsilon0", s.epsilon0},
                           {"iterations", s.iterations},
                           {"y_hat_sinf", s.y_hat_sinf},
                           {"rho_max", s.rho_max}});
    return out;
}

json bound_to_json(const BoundReport& r) {
    return json{{"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}, {"slack_ratio", r.slack_ratio}};
}

json norms_to_json(const Solution& sol, const TreeModel& model, const Measure& measure) {
    const NormReport report = solution_norms(sol, model, measure);
    const auto node = [](NodeId v) { return json{{"level", v.level}, {"index", v.index}}; };
    return json{{"s_inf", report.s_inf},
                {"bmo_sq", report.bmo_sq},
                {"k_abmo", report.k_abmo},
                {"solution_norm_sq", report.solution_norm_sq},
                {"argmax_s_inf", node(report.argmax_s_inf)},
                {"argmax_bmo", node(report.argmax_bmo)},
                {"argmax_k", node(report.argmax_k)}};
}

namespace {

json solution_summary(const Solution& sol, const Scenario& s) {
    const AdaptedProcess dv =
        drift_process(s.data, sol.y, sol.parts, s.model, s.measure);
    const SolutionCheck check = verify_solution(sol, dv, s.data.xi, s.data.obstacle, s.model, s.measure);
    return json{{"y_root", sol.y.level(0)[0]},
                {"norms", norms_to_json(sol, s.model, s.measure)},
                {"invariants",
                 json{{"max_dynamics_residual", check.max_dynamics_residual},
                      {"max_barrier_violation", check.max_barrier_violation},
                      {"max_terminal_error", check.max_terminal_error},
                      {"max_skorohod_product", check.max_skorohod_product},
                      {"min_dk", check.min_dk},
                      {"pass", check.pass()}}}};
}

}  // namespace

RunResult run_solve(const Scenario& s) {
    RunResult out;
    json r{{"subcommand", "solve"}, {"seed", s.options.seed}, {"scheme", s.options.scheme}};
    const auto& o = s.options;
    if (o.scheme == "picard") {
        const SmallnessBudget budget = single_shot_budget(s.data, s.model);
        PicardResult res = picard_solve(s.data, s.model, s.measure, budget, o.tol, o.max_iter,
                                        o.force_gate);
        r["budget"] = budget_to_json(budget);
        r["trace"] = trace_to_json(res.trace);
        r.update(solution_summary(res.solution, s));
        out.solution = std::move(res.solution);
    } else if (o.scheme == "full") {
        FullSolveResult res = solve_full(s.data, s.model, s.measure, o.tol, o.max_iter);
        r["budget"] = budget_to_json(res.budget);
        r["stages"] = stages_to_json(res.stages);
        r["obstacle_shift"] = res.obstacle_shift;
        r.update(solution_summary(res.solution, s));
        out.solution = std::move(res.solution);
    } else if (o.scheme == "gauge") {
        const GaugeTransform gauge = transform_out(s.data, s.model, s.measure);
        const SmallnessBudget budget = single_shot_budget(gauge.hat_data, s.model);
        PicardResult hat = picard_solve(gauge.hat_data, s.model, gauge.q, budget, o.tol, o.max_iter,
                                        o.force_gate);
        Solution sol = transform_back(hat.solution, gauge, s.model, s.measure);
        r["budget"] = budget_to_json(budget);
        r["trace"] = trace_to_json(hat.trace);
        r.update(solution_summary(sol, s));
        out.solution = std::move(sol);
    } else if (o.scheme == "superlinear") {
        FullSolveResult res = solve_superlinear(s.data, s.model, s.measure, o.tol, o.max_iter);
        r["budget"] = budget_to_json(res.budget);
        r["stages"] = stages_to_json(res.stages);
        r.update(solution_summary(res.solution, s));
        out.solution = std::move(res.solution);
    } else if (o.scheme == "monotone") {
        FullSolveResult res = solve_monotone(s.data, s.model, s.measure, o.tol, o.max_iter);
        r["budget"] = budget_to_json(res.budget);
        r["stages"] = stages_to_json(res.stages);
        if (res.monotone_bound)
            r["monotone_bound"] = json{{"lhs", res.monotone_bound->first},
                                       {"rhs", res.monotone_bound->second},
                                       {"pass", res.monotone_bound->first <= res.monotone_bound->second}};
        r.update(solution_summary(res.solution, s));
        out.solution = std::move(res.solution);
    } else if (o.scheme == "auto") {
        AutoSolveResult res = solve_auto(s.data, s.model, s.measure, o.tol, o.max_iter);
        r["route"] = res.route == SolveRoute::picard_gated    ? "picard_gated"
                     : res.route == SolveRoute::picard_forced ? "picard_forced"
                                                              : "staged";
        r["budget"] = budget_to_json(res.budget);
        if (res.trace) r["trace"] = trace_to_json(*res.trace);
        if (!res.stages.empty()) r["stages"] = stages_to_json(res.stages);
        r.update(solution_summary(res.solution, s));
        out.solution = std::move(res.solution);
    } else {
        throw Error(ErrorKind::parse, "unknown scheme '" + o.scheme + "'");
    }
    out.exit_code = r["invariants"]["pass"].get<bool>() ? 0 : 1;
    out.report = std::move(r);
    return out;
}

RunResult run_oracle(const Scenario& s) {
    // Fixed drift at the origin: the oracle checks the underlying problem.
    const AdaptedProcess dv = drift_process(s.data, AdaptedProcess(s.model, s.model.depth()),
                                            MartingaleParts::zeros(s.model), s.model, s.measure);
    const Solution sol = solve_underlying(dv, s.data.xi, s.data.obstacle, s.model, s.measure);
    const AdaptedProcess oracle = snell_oracle(dv, s.data.xi, s.data.obstacle, s.model, s.measure);
    double max_diff = 0.0;
    for (int t = 0; t <= s.model.depth(); ++t)
        for (std::size_t i = 0; i < s.model.nodes_at(t); ++i)
            max_diff = std::max(max_diff,
                                std::abs(sol.y.level(t)[i] - oracle.level(t)[i]));
    const bool pass = max_diff <= 1e-12;
    json r{{"subcommand", "oracle"},
           {"seed", s.options.seed},
           {"budget", budget_to_json(single_shot_budget(s.data, s.model))},
           {"y_root_recursion", sol.y.level(0)[0]},
           {"y_root_enumeration", oracle.level(0)[0]},
           {"max_abs_difference", max_diff},
           {"stopping_rules", stopping_rule_count(s.model.depth(), s.model.branching())},
           {"pass", pass}};
    return RunResult{pass ? 0 : 1, std::move(r)};
}

RunResult run_compare(const Scenario& s, const Scenario& prime) {
    if (s.model.depth() != prime.model.depth() || s.model.branching() != prime.model.branching() ||
        s.model.dt() != prime.model.dt() || s.model.sigma() != prime.model.sigma())
        throw Error(ErrorKind::data, "compare: the two scenarios must share the tree");
    ComparisonReport rep =
        check_comparison(s.data, prime.data, s.model, s.measure, 1e-9, s.options.tol, s.options.max_iter);
    json r{{"subcommand", "compare"},
           {"seed", s.options.seed},
           {"budget", budget_to_json(single_shot_budget(s.data, s.model))},
           {"budget_prime", budget_to_json(single_shot_budget(prime.data, prime.model))},
           {"worst_violation", rep.worst_violation},
           {"worst_node", json{{"level", rep.worst_node.level}, {"index", rep.worst_node.index}}},
           {"kernel_sup", rep.kernel_sup},
           {"y_root", rep.sol.y.level(0)[0]},
           {"y_prime_root", rep.sol_prime.y.level(0)[0]},
           {"pass", rep.pass}};
    RunResult out{rep.pass ? 0 : 1, std::move(r), std::move(rep.sol), std::move(rep.sol_prime)};
    return out;
}

RunResult run_compare_k(const Scenario& s, const Scenario& prime) {
    if (s.model.depth() != prime.model.depth() || s.model.branching() != prime.model.branching())
        throw Error(ErrorKind::data, "compare-k: the two scenarios must share the tree");
    validate_ordering(s.data, prime.data, s.model);
    const Solution sol = solve_auto(s.data, s.model, s.measure, s.options.tol, s.options.max_iter).solution;
    const Solution sol_prime =
        solve_auto(prime.data, prime.model, prime.measure, s.options.tol, s.options.max_iter).solution;
    ComparisonReport rep = check_special_comparison(sol, sol_prime, s.data, prime.data, s.model, 1e-9);
    json r{{"subcommand", "compare-k"},
           {"seed", s.options.seed},
           {"budget", budget_to_json(single_shot_budget(s.data, s.model))},
           {"budget_prime", budget_to_json(single_shot_budget(prime.data, prime.model))},
           {"worst_violation", rep.worst_violation},
           {"worst_node", json{{"level", rep.worst_node.level}, {"index", rep.worst_node.index}}},
           {"pass", rep.pass}};
    return RunResult{rep.pass ? 0 : 1, std::move(r)};
}

RunResult run_perturb(const Scenario& s) {
    FullSolveResult res = solve_full(s.data, s.model, s.measure, s.options.tol, s.options.max_iter);
    json r{{"subcommand", "perturb"},
           {"seed", s.options.seed},
           {"budget", budget_to_json(res.budget)},
           {"obstacle_shift", res.obstacle_shift},
           {"stages", stages_to_json(res.stages)}};
    r.update(solution_summary(res.solution, s));
    return RunResult{r["invariants"]["pass"].get<bool>() ? 0 : 1, std::move(r)};
}

RunResult run_stability(const Scenario& s) {
    if (s.stability_deltas.empty())
        throw Error(ErrorKind::data, "stability: the scenario declares no perturbation pairs");
    StabilityReport rep = stability_experiment(s.data, s.stability_deltas, s.model, s.measure,
                                               s.options.tol, s.options.max_iter);
    json pairs = json::array();
    for (const auto& p : rep.pairs)
        pairs.push_back(json{{"gated", p.gated},
                             {"skip_reason", p.skip_reason},
                             {"delta_d", p.delta_d},
                             {"bound", p.bound},
                             {"dy_sinf", p.dy_sinf},
                             {"dn_bmo_q", p.dn_bmo_q},
                             {"dn_bmo_p", p.dn_bmo_p},
                             {"ratio_p_q", p.ratio_p_q},
                             {"pass_sinf", p.pass_sinf},
                             {"pass_bmo", p.pass_bmo}});
    json r{{"subcommand", "stability"},
           {"seed", s.options.seed},
           {"budget", budget_to_json(single_shot_budget(s.data, s.model))},
           {"beta_bar_linf1", rep.beta_bar_linf1},
           {"gate", rep.gate},
           {"pairs", pairs},
           {"pass", rep.pass}};
    return RunResult{rep.pass ? 0 : 1, std::move(r)};
}

RunResult run_bounds(const Scenario& s) {
    AutoSolveResult res = solve_auto(s.data, s.model, s.measure, s.options.tol, s.options.max_iter);
    const BoundReport bound = apriori_bmo_bound(res.solution, s.data, s.model, s.measure);
    json r{{"subcommand", "bounds"},
           {"seed", s.options.seed},
           {"budget", budget_to_json(res.budget)},
           {"apriori_bmo", bound_to_json(bound)}};
    r.update(solution_summary(res.solution, s));
    return RunResult{bound.pass ? 0 : 1, std::move(r)};
}

RunResult run_validate(const Scenario& s) {
    const ValidationReport qg = validate_qg(s.data, s.model);
    const ValidationReport der = validate_der(s.data, s.model);
    const auto sample = [](const ValidationReport& rep) {
        json j{{"pass", rep.pass}, {"samples", rep.samples}};
        if (!rep.pass)
            j["worst"] = json{{"check", rep.worst.check}, {"y", rep.worst.y},     {"z", rep.worst.z},
                              {"lhs", rep.worst.lhs},     {"rhs", rep.worst.rhs}};
        return j;
    };
    json r{{"subcommand", "validate"},
           {"seed", s.options.seed},
           {"constants", json{{"lambda", growth_to_json(s.data.driver.lambda)},
                              {"rho", growth_to_json(s.data.driver.rho)},
                              {"rho_prime", growth_to_json(s.data.driver.rho_prime)}}},
           {"qg", sample(qg)},
           {"der", sample(der)}};
    bool pass = qg.pass && der.pass;
    if (s.data.driver.family == Family::monotone_y) {
        const ValidationReport mono = validate_monotone(s.data, s.model);
        r["monotone"] = sample(mono);
        pass = pass && mono.pass;
    }
    r["pass"] = pass;
    return RunResult{pass ? 0 : 1, std::move(r)};
}

std::string solution_csv(const Solution& sol, const TreeModel& model) {
    std::ostringstream out;
    out.precision(17);
    out << "level,index,y,z,k\n";
    for (int t = 0; t <= model.depth(); ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            out << t << ',' << i << ',' << sol.y.level(t)[i] << ',';
            if (t < model.depth()) out << sol.parts.z.level(t)[i];
            out << ',' << sol.k.level(t)[i] << '\n';
        }
    return out.str();
}

std::string comparison_csv(const Solution& sol, const Solution& sol_prime, const TreeModel& model) {
    std::ostringstream out;
    out.precision(17);
    out << "level,index,y,y_prime,diff\n";
    for (int t = 0; t <= model.depth(); ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const double y = sol.y.level(t)[i];
            const double yp = sol_prime.y.level(t)[i];
            out << t << ',' << i << ',' << y << ',' << yp << ',' << (yp - y) << '\n';
        }
    return out.str();
}

}  // namespace rbsde
