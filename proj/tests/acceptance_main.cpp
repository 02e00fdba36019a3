// Acceptance suite: one line per criterion, exit 0 only if every criterion
// holds at its stated tolerance. The whole randomized suite runs twice with
// the same seeds; the final criterion compares the two reports byte for
// byte.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "rbsde/analysis.hpp"
#include "rbsde/scenario.hpp"
#include "support/gen.hpp"

using namespace rbsde;
using testgen::GenConfig;
using testgen::Instance;

namespace {

constexpr std::uint64_t kBaseSeed = 20250801;

double contraction_slack() {
    // engineering margin on the proof's 1/sqrt(2) rate; overridable so
    // borderline instances can be studied without editing the suite
    const char* env = std::getenv("RBSDE_CONTRACTION_SLACK");
    return env ? std::atof(env) : 0.05;
}

struct PoolEntry {
    TreeModel model;
    Measure measure;
    RBSDEData data;
    Solution sol;
};

double max_node_diff(const AdaptedProcess& a, const AdaptedProcess& b) {
    double best = 0.0;
    for (int t = 0; t <= a.last_level(); ++t)
        for (std::size_t i = 0; i < a.level(t).size(); ++i)
            best = std::max(best, std::abs(a.level(t)[i] - b.level(t)[i]));
    return best;
}

// ---------------------------------------------------------------- C1
json criterion_snell_oracle(std::mt19937_64& rng, std::vector<PoolEntry>& pool, bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 1;
    cfg.max_depth = 4;
    double worst = 0.0;
    int binary = 0, quaternary = 0;
    for (int rep = 0; rep < 200; ++rep) {
        cfg.binding_obstacle = rep % 3 != 0;
        Instance inst = testgen::make_instance(rng, cfg);
        (inst.model.branching() == 2 ? binary : quaternary) += 1;

        // fixed drift from the driver frozen at random node values
        AdaptedProcess dv(inst.model, inst.model.depth() - 1);
        for (int t = 0; t < inst.model.depth(); ++t)
            for (std::size_t i = 0; i < inst.model.nodes_at(t); ++i) {
                const NodeId v{t, i};
                const double y = testgen::uniform(rng, -0.5, 0.5);
                const double z = testgen::uniform(rng, -0.5, 0.5);
                dv.at(v) = (*inst.data.driver.f)(v, inst.model.time_of(t), y,
                                                 z * inst.model.sigma()) *
                           inst.model.dt();
            }

        const Solution sol =
            solve_underlying(dv, inst.data.xi, inst.data.obstacle, inst.model, inst.measure);
        const AdaptedProcess oracle =
            snell_oracle(dv, inst.data.xi, inst.data.obstacle, inst.model, inst.measure);
        worst = std::max(worst, max_node_diff(sol.y, oracle));

        // effective data of the underlying problem, for the criterion-8 pool
        RBSDEData effective = inst.data;
        effective.driver.f =
            std::make_shared<testgen::FnDriver>([](double, double, double) { return 0.0; });
        effective.driver.lambda = GrowthFn::constant(1.0);
        effective.driver.g = AdaptedProcess(inst.model, inst.model.depth() - 1, 0.0);
        effective.driver.nu_integrand = AdaptedProcess(inst.model, inst.model.depth() - 1, 0.0);
        AdaptedProcess h(inst.model, inst.model.depth() - 1);
        for (int t = 0; t < inst.model.depth(); ++t)
            for (std::size_t i = 0; i < inst.model.nodes_at(t); ++i)
                h.level(t)[i] = std::sqrt(std::abs(dv.level(t)[i]) / inst.model.dt());
        effective.driver.h = h;
        pool.push_back(PoolEntry{inst.model, inst.measure, std::move(effective), sol});
    }
    pass = worst <= 1e-12;
    return json{{"instances", 200}, {"binary", binary},   {"quaternary", quaternary},
                {"max_diff", worst}, {"tolerance", 1e-12}, {"pass", pass}};
}

// ---------------------------------------------------------------- C2
json criterion_solution_invariants(std::mt19937_64& rng, std::vector<PoolEntry>& pool, bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 4;
    cfg.xi_scale = 0.35;
    cfg.coeff_scale = 0.35;
    double worst_dyn = 0.0, worst_barrier = 0.0, worst_sk = 0.0, worst_dk = 0.0;
    int reflecting = 0, forced = 0, staged = 0;
    for (int rep = 0; rep < 200; ++rep) {
        cfg.binding_obstacle = rep % 2 == 0;
        Instance inst = testgen::make_instance(rng, cfg);
        const AutoSolveResult res = solve_auto(inst.data, inst.model, inst.measure, 1e-12, 300);
        const Solution& sol = res.solution;
        if (res.route == SolveRoute::picard_forced) ++forced;
        if (res.route == SolveRoute::staged) ++staged;
        if (sup_norm(sol.k) > 1e-12) ++reflecting;
        const AdaptedProcess dv =
            drift_process(inst.data, sol.y, sol.parts, inst.model, inst.measure);
        const SolutionCheck check =
            verify_solution(sol, dv, inst.data.xi, inst.data.obstacle, inst.model, inst.measure);
        worst_dyn = std::max(worst_dyn, check.max_dynamics_residual);
        worst_barrier = std::max(worst_barrier, check.max_barrier_violation);
        worst_sk = std::max(worst_sk, check.max_skorohod_product);
        worst_dk = std::min(worst_dk, check.min_dk);
        pool.push_back(PoolEntry{inst.model, inst.measure, inst.data, sol});
    }
    pass = worst_dyn <= 1e-10 && worst_barrier <= 1e-10 && worst_sk <= 1e-10 && worst_dk >= -1e-10 &&
           reflecting > 0;
    return json{{"instances", 200},
                {"reflecting_instances", reflecting},
                {"picard_forced", forced},
                {"staged", staged},
                {"max_dynamics_residual", worst_dyn},
                {"max_barrier_violation", worst_barrier},
                {"max_skorohod_product", worst_sk},
                {"min_dk", worst_dk},
                {"tolerance", 1e-10},
                {"pass", pass}};
}

// ---------------------------------------------------------------- C3
json criterion_gated_contraction(std::mt19937_64& rng, std::vector<PoolEntry>& pool, bool& pass) {
    const double slack = contraction_slack();
    double worst_ratio = 0.0, worst_ball = 0.0;
    int checked_ratios = 0;
    pass = true;
    for (int rep = 0; rep < 50; ++rep) {
        // T = 1 trees, lambda = 1, beta = 0: epsilon0 = 1/3072, R0 = 1/96
        const bool quaternary = rep % 2 == 1;
        TreeModel model = quaternary ? TreeModel(3, 4, 1.0 / 3.0, 1.0) : TreeModel(4, 2, 0.25, 1.0);
        Measure measure = Measure::base(model);

        DriverSpec d;
        std::map<std::string, AdaptedProcess> coeffs;
        coeffs.emplace("qa",
                       AdaptedProcess(model, model.depth() - 1, testgen::uniform(rng, 0.2, 0.5)));
        d.f = std::make_shared<ExprDriver>(parse_expr("qa*sq(z)"), std::move(coeffs));
        d.lambda = GrowthFn::constant(1.0);
        d.rho = GrowthFn::constant(0.05);
        d.rho_prime = GrowthFn::constant(1.0);
        d.g = AdaptedProcess(model, model.depth() - 1,
                             quaternary ? testgen::uniform(rng, 0.0, 0.4) : 0.0);
        d.nu_integrand = AdaptedProcess(model, model.depth() - 1, 0.0);
        d.r = AdaptedProcess(model, model.depth() - 1, 1.0);
        d.h = AdaptedProcess(model, model.depth() - 1, 1.0);

        RBSDEData data;
        data.driver = std::move(d);
        data.xi.resize(model.nodes_at(model.depth()));
        const double eps0 = 1.0 / 3072.0;
        for (double& v : data.xi) v = testgen::uniform(rng, -eps0 * 0.9, eps0 * 0.9);
        data.obstacle = AdaptedProcess(model, model.depth(), -0.01);
        for (std::size_t i = 0; i < data.xi.size(); ++i)
            data.obstacle.level(model.depth())[i] = std::min(-0.01, data.xi[i]);

        const SmallnessBudget budget = single_shot_budget(data, model);
        if (std::abs(budget.epsilon0 - eps0) > 1e-12 || budget.data_size > budget.epsilon0) {
            pass = false;
            continue;
        }
        PicardResult res = picard_solve(data, model, measure, budget, 1e-12, 200);
        for (double ratio : res.trace.contraction_ratios) {
            worst_ratio = std::max(worst_ratio, ratio);
            ++checked_ratios;
        }
        worst_ball = std::max(worst_ball, res.trace.final_norm / budget.r0);
        pool.push_back(PoolEntry{model, measure, data, res.solution});
    }
    const double ratio_bound = 1.0 / std::sqrt(2.0) + slack;
    pass = pass && worst_ratio <= ratio_bound && worst_ball <= 1.0 + slack;
    return json{{"instances", 50},
                {"epsilon0", 1.0 / 3072.0},
                {"r0", 1.0 / 96.0},
                {"ratios_checked", checked_ratios},
                {"max_ratio", worst_ratio},
                {"ratio_bound", ratio_bound},
                {"max_norm_over_r0", worst_ball},
                {"pass", pass}};
}

// ---------------------------------------------------------------- C4
json criterion_splitting_consistency(std::mt19937_64& rng, std::vector<PoolEntry>& pool,
                                     bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 3;
    cfg.allow_quaternary = false;
    double worst_split = 0.0, worst_direct = 0.0;
    int gated_count = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Instance inst = testgen::make_instance(rng, cfg);
        // scale xi and the residual drift so the stage count is small but
        // nontrivial; for half of the instances the single-shot gate passes
        const SmallnessBudget single = single_shot_budget(inst.data, inst.model);
        const double r2 = linf_norms(inst.data.driver.r, inst.model).linf2_sq;
        const double eps_pert = epsilon0(2.0 * inst.data.driver.lambda.constant_value(), r2,
                                         inst.data.driver.rho.constant_value() * r2);
        const AdaptedProcess alpha = residual_drift(inst.data.driver, inst.model);
        const double alpha_norm = linf_norms(alpha, inst.model).linf1;
        const bool want_gated = rep < 10;
        const double target =
            want_gated ? single.epsilon0 * 0.85 : eps_pert * testgen::uniform(rng, 3.0, 9.0);
        const double alpha_scale =
            alpha_norm > target / 2.0 ? (target / 2.0) / alpha_norm : 1.0;
        if (alpha_scale < 1.0)
            inst.data.driver.f = shift_driver(inst.data.driver.f, alpha, alpha_scale - 1.0);
        double xi_max = 1e-30;
        for (double v : inst.data.xi) xi_max = std::max(xi_max, std::abs(v));
        const double scale = std::max(0.0, target - alpha_scale * alpha_norm) / xi_max;
        for (double& v : inst.data.xi) v *= scale;
        for (int t = 0; t <= inst.model.depth(); ++t)
            for (std::size_t i = 0; i < inst.model.nodes_at(t); ++i)
                inst.data.obstacle.level(t)[i] =
                    std::min(t == inst.model.depth() ? inst.data.xi[i] : -0.05, -0.05);

        FullSolveResult a = solve_full(inst.data, inst.model, inst.measure, 1e-12, 300);
        FullSolveResult b =
            solve_full(inst.data, inst.model, inst.measure, 1e-12, 300, 2 * a.budget.n_split);
        worst_split = std::max(worst_split, max_node_diff(a.solution.y, b.solution.y));

        const SmallnessBudget gate = single_shot_budget(inst.data, inst.model);
        if (gate.data_size <= gate.epsilon0) {
            ++gated_count;
            PicardResult direct =
                picard_solve(inst.data, inst.model, inst.measure, gate, 1e-12, 300);
            worst_direct = std::max(worst_direct, max_node_diff(a.solution.y, direct.solution.y));
        }
        pool.push_back(PoolEntry{inst.model, inst.measure, inst.data, a.solution});
    }
    pass = worst_split <= 1e-8 && worst_direct <= 1e-8 && gated_count >= 10;
    return json{{"instances", 20},
                {"max_n_vs_2n_diff", worst_split},
                {"gated_instances", gated_count},
                {"max_vs_direct_diff", worst_direct},
                {"tolerance", 1e-8},
                {"pass", pass}};
}

// ---------------------------------------------------------------- C5
json criterion_gauge_round_trip(std::mt19937_64& rng, std::vector<PoolEntry>& pool, bool& pass) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        TreeModel model(3, 4, testgen::uniform(rng, 0.08, 0.15), 1.0);
        Measure measure = Measure::base(model);

        DriverSpec d;
        std::map<std::string, AdaptedProcess> coeffs;
        const double a = testgen::uniform(rng, 0.15, 0.4);
        const double b = testgen::uniform(rng, 0.1, 0.5) * (rep % 2 == 0 ? 1.0 : -1.0);
        const double dz = testgen::uniform(rng, 0.1, 0.4) * (rep % 3 == 0 ? -1.0 : 1.0);
        coeffs.emplace("qa", AdaptedProcess(model, 2, a));
        coeffs.emplace("qb", AdaptedProcess(model, 2, b));
        coeffs.emplace("qd", AdaptedProcess(model, 2, dz));
        d.f = std::make_shared<ExprDriver>(parse_expr("qa*sq(z) + qb*y + qd*z"), std::move(coeffs));
        d.lambda = GrowthFn::constant(std::max(2.0 * a, 0.25));
        d.rho = GrowthFn::constant(std::abs(b) + 0.05);
        d.rho_prime = GrowthFn::constant(2.0 * a + std::abs(dz));
        d.g = AdaptedProcess(model, 2, 0.0);
        d.nu_integrand = AdaptedProcess(model, 2, testgen::uniform(rng, 0.15, 0.5));
        d.r = AdaptedProcess(model, 2, 1.0);
        d.h = AdaptedProcess(model, 2, 1.0);

        RBSDEData data;
        data.driver = std::move(d);
        data.xi.resize(model.nodes_at(3));
        const double c1 = testgen::uniform(rng, -0.15, 0.15);
        for (std::size_t i = 0; i < data.xi.size(); ++i)
            data.xi[i] =
                c1 * model.m_at(NodeId{3, i}) + 0.04 * std::tanh(model.m_at(NodeId{3, i}));
        data.obstacle = AdaptedProcess(model, 3, -0.03);
        for (std::size_t i = 0; i < data.xi.size(); ++i)
            data.obstacle.level(3)[i] = std::min(-0.03, data.xi[i]);

        AutoSolveResult direct = solve_auto(data, model, measure, 1e-13, 400);
        GaugeTransform gauge = transform_out(data, model, measure);
        PicardResult hat = picard_solve(gauge.hat_data, model, gauge.q,
                                        single_shot_budget(gauge.hat_data, model), 1e-13, 400, true);
        Solution back = transform_back(hat.solution, gauge, model, measure);
        worst = std::max(worst, max_node_diff(back.y, direct.solution.y));
        pool.push_back(PoolEntry{model, measure, data, direct.solution});
    }
    pass = worst <= 1e-9;
    return json{
        {"instances", 20}, {"max_round_trip_diff", worst}, {"tolerance", 1e-9}, {"pass", pass}};
}

// ---------------------------------------------------------------- C6
json criterion_comparison(std::mt19937_64& rng, std::vector<PoolEntry>& pool, bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 3;
    cfg.xi_scale = 0.3;
    cfg.coeff_scale = 0.3;
    double worst = -1e300;
    for (int rep = 0; rep < 100; ++rep) {
        cfg.binding_obstacle = rep % 2 == 0;
        testgen::OrderedPair pair = testgen::make_ordered_pair(rng, cfg, false);
        ComparisonReport rep_c = check_comparison(pair.base.data, pair.lower, pair.base.model,
                                                  pair.base.measure, 1e-9, 1e-12, 400);
        worst = std::max(worst, rep_c.worst_violation);
        pool.push_back(PoolEntry{pair.base.model, pair.base.measure, pair.base.data, rep_c.sol});
        pool.push_back(PoolEntry{pair.base.model, pair.base.measure, pair.lower, rep_c.sol_prime});
    }
    pass = worst <= 1e-9;
    return json{{"pairs", 100}, {"max_violation", worst}, {"tolerance", 1e-9}, {"pass", pass}};
}

// ---------------------------------------------------------------- C7
json criterion_special_comparison(std::mt19937_64& rng, std::vector<PoolEntry>& pool, bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 3;
    cfg.xi_scale = 0.3;
    cfg.coeff_scale = 0.3;
    cfg.binding_obstacle = true;
    double worst = -1e300;
    int binding = 0, produced = 0;
    while (binding < 50 && produced < 200) {
        ++produced;
        testgen::OrderedPair pair = testgen::make_ordered_pair(rng, cfg, true);
        const TreeModel& model = pair.base.model;
        const Solution sol =
            solve_auto(pair.base.data, model, pair.base.measure, 1e-12, 400).solution;
        const Solution sol_prime =
            solve_auto(pair.lower, model, pair.base.measure, 1e-12, 400).solution;
        if (sup_norm(sol_prime.k) <= 1e-12) continue;  // obstacle never binds: skip
        ++binding;
        ComparisonReport rep =
            check_special_comparison(sol, sol_prime, pair.base.data, pair.lower, model, 1e-9);
        worst = std::max(worst, rep.worst_violation);
        pool.push_back(PoolEntry{model, pair.base.measure, pair.base.data, sol});
        pool.push_back(PoolEntry{model, pair.base.measure, pair.lower, sol_prime});
    }
    pass = binding == 50 && worst <= 1e-9;
    return json{{"pairs", binding},
                {"generated", produced},
                {"max_violation", worst},
                {"tolerance", 1e-9},
                {"pass", pass}};
}

// ---------------------------------------------------------------- C8
json criterion_apriori_bound(const std::vector<PoolEntry>& pool, bool& pass) {
    double worst_slack = 0.0;
    int failures = 0;
    for (const PoolEntry& entry : pool) {
        const BoundReport rep = apriori_bmo_bound(entry.sol, entry.data, entry.model, entry.measure);
        worst_slack = std::max(worst_slack, rep.slack_ratio);
        if (!rep.pass) ++failures;
    }
    pass = failures == 0 && !pool.empty();
    return json{{"solutions_checked", pool.size()},
                {"failures", failures},
                {"max_lhs_over_rhs", worst_slack},
                {"pass", pass}};
}

// ---------------------------------------------------------------- C9
json criterion_stability(std::mt19937_64& rng, bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 3;
    cfg.xi_scale = 0.15;
    cfg.coeff_scale = 0.3;
    cfg.allow_quaternary = false;
    int pairs_done = 0;
    double worst_sinf_margin = 0.0, worst_bmo_margin = 0.0;
    json ratios = json::array();
    pass = true;
    while (pairs_done < 30) {
        Instance inst = testgen::make_instance(rng, cfg);
        // pre-compute the gate from the base solution
        const Solution base = solve_auto(inst.data, inst.model, inst.measure, 1e-13, 400).solution;
        const AdaptedProcess beta_bar = beta_at_solution(inst.data.driver, base, inst.model);
        const double beta1 = linf_norms(beta_bar, inst.model).linf1;
        const double r2 = linf_norms(inst.data.driver.r, inst.model).linf2_sq;
        const double gate =
            epsilon0(2.0 * inst.data.driver.lambda.constant_value(), r2, beta1) / std::sqrt(2.0);

        std::vector<StabilityDelta> deltas;
        const int batch = std::min(3, 30 - pairs_done);
        for (int k = 0; k < batch; ++k) {
            StabilityDelta delta;
            delta.dxi_first = gate * testgen::uniform(rng, -0.4, 0.4);
            delta.dxi_second = gate * testgen::uniform(rng, -0.4, 0.4);
            const double horizon = inst.model.horizon();
            delta.dalpha_first = gate * testgen::uniform(rng, -0.3, 0.3) / horizon;
            delta.dalpha_second = gate * testgen::uniform(rng, -0.3, 0.3) / horizon;
            deltas.push_back(delta);
        }
        const StabilityReport rep =
            stability_experiment(inst.data, deltas, inst.model, inst.measure, 1e-13, 400);
        for (const auto& pair : rep.pairs) {
            if (!pair.gated) {
                pass = false;
                continue;
            }
            ++pairs_done;
            pass = pass && pair.pass_sinf && pair.pass_bmo;
            if (pair.bound > 0.0) {
                worst_sinf_margin = std::max(worst_sinf_margin, pair.dy_sinf / pair.bound);
                worst_bmo_margin = std::max(worst_bmo_margin, pair.dn_bmo_q / pair.bound);
            }
            ratios.push_back(pair.ratio_p_q);
        }
    }
    return json{{"pairs", pairs_done},
                {"max_sinf_over_bound", worst_sinf_margin},
                {"max_bmoq_over_bound", worst_bmo_margin},
                {"empirical_p_over_q_ratios", ratios},
                {"pass", pass}};
}

// ---------------------------------------------------------------- C10
json criterion_monotone_bound(std::mt19937_64& rng, bool& pass) {
    GenConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 3;
    cfg.allow_quaternary = false;
    cfg.monotone = true;
    cfg.xi_scale = 0.04;
    double worst = 0.0;
    pass = true;
    for (int rep = 0; rep < 20; ++rep) {
        Instance inst = testgen::make_instance(rng, cfg);
        FullSolveResult res = solve_monotone(inst.data, inst.model, inst.measure, 1e-12, 300);
        if (!res.monotone_bound) {
            pass = false;
            continue;
        }
        pass = pass && res.monotone_bound->first <= res.monotone_bound->second;
        if (res.monotone_bound->second > 0.0)
            worst = std::max(worst, res.monotone_bound->first / res.monotone_bound->second);
    }
    return json{{"instances", 20}, {"max_lhs_over_rhs", worst}, {"pass", pass}};
}

struct SuiteOutcome {
    json results = json::array();
    std::vector<bool> passes;
    std::vector<double> seconds;
};

SuiteOutcome run_suite() {
    SuiteOutcome out;
    std::vector<PoolEntry> pool;
    const auto timed = [&](const char* name, auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        bool pass = false;
        json j = fn(pass);
        j["criterion"] = name;
        out.results.push_back(std::move(j));
        out.passes.push_back(pass);
        out.seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    };

    std::mt19937_64 rng1(kBaseSeed + 1);
    timed("snell_oracle_equivalence", [&](bool& p) { return criterion_snell_oracle(rng1, pool, p); });
    std::mt19937_64 rng2(kBaseSeed + 2);
    timed("solution_invariants",
          [&](bool& p) { return criterion_solution_invariants(rng2, pool, p); });
    std::mt19937_64 rng3(kBaseSeed + 3);
    timed("gated_contraction", [&](bool& p) { return criterion_gated_contraction(rng3, pool, p); });
    std::mt19937_64 rng4(kBaseSeed + 4);
    timed("splitting_consistency",
          [&](bool& p) { return criterion_splitting_consistency(rng4, pool, p); });
    std::mt19937_64 rng5(kBaseSeed + 5);
    timed("gauge_round_trip", [&](bool& p) { return criterion_gauge_round_trip(rng5, pool, p); });
    std::mt19937_64 rng6(kBaseSeed + 6);
    timed("comparison_theorem", [&](bool& p) { return criterion_comparison(rng6, pool, p); });
    std::mt19937_64 rng7(kBaseSeed + 7);
    timed("special_comparison",
          [&](bool& p) { return criterion_special_comparison(rng7, pool, p); });
    timed("apriori_bmo_bound", [&](bool& p) { return criterion_apriori_bound(pool, p); });
    std::mt19937_64 rng9(kBaseSeed + 9);
    timed("stability_estimate", [&](bool& p) { return criterion_stability(rng9, p); });
    std::mt19937_64 rng10(kBaseSeed + 10);
    timed("monotone_apriori_bound", [&](bool& p) { return criterion_monotone_bound(rng10, p); });
    return out;
}

}  // namespace

int main() {
    const auto suite_start = std::chrono::steady_clock::now();
    SuiteOutcome first = run_suite();

    // Criterion 11: the whole randomized suite again, same seeds, byte-equal
    // reports. Timing lives outside the compared payload.
    const auto second_start = std::chrono::steady_clock::now();
    SuiteOutcome second = run_suite();
    const bool deterministic = first.results.dump() == second.results.dump();
    const double c11_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - second_start).count();

    const char* names[] = {
        "snell oracle equivalence", "solution invariants", "gated contraction",
        "splitting consistency",    "gauge round trip",    "comparison theorem",
        "special comparison",       "a priori BMO bound",  "stability estimate",
        "monotone a priori bound",
    };
    bool all = true;
    for (std::size_t i = 0; i < first.passes.size(); ++i) {
        // stated runtime limits: criterion 1 under 30 s, criterion 3 under 60 s
        bool pass = first.passes[i];
        if (i == 0) pass = pass && first.seconds[i] < 30.0;
        if (i == 2) pass = pass && first.seconds[i] < 60.0;
        std::printf("[%s] criterion %2zu: %-26s (%.1f s)\n", pass ? "PASS" : "FAIL", i + 1, names[i],
                    first.seconds[i]);
        all = all && pass;
    }
    std::printf("[%s] criterion 11: determinism                (%.1f s)\n",
                deterministic ? "PASS" : "FAIL", c11_seconds);
    all = all && deterministic;

    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start).count();
    std::printf("%s in %.1f s\n", all ? "ALL CRITERIA PASS" : "CRITERIA FAILED", total);

    // full numeric detail for auditing
    if (const char* out = std::getenv("RBSDE_ACCEPTANCE_REPORT")) {
        FILE* f = std::fopen(out, "w");
        if (f) {
            const std::string text = first.results.dump(2);
            std::fwrite(text.data(), 1, text.size(), f);
            std::fclose(f);
        }
    }
    return all ? 0 : 1;
}
