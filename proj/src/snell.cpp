#include "rbsde/snell.hpp"

#include <cmath>

#include "rbsde/par.hpp"

namespace rbsde {

Solution solve_underlying(const AdaptedProcess& dv, const std::vector<double>& xi,
                          const AdaptedProcess& obstacle, const TreeModel& model,
                          const Measure& measure) {
    const int n = model.depth();
    const std::size_t b = static_cast<std::size_t>(model.branching());
    if (xi.size() != model.nodes_at(n))
        throw Error(ErrorKind::parameter, "solve_underlying: xi size does not match leaf count");
    const auto& l_term = obstacle.level(n);
    for (std::size_t i = 0; i < xi.size(); ++i)
        if (xi[i] < l_term[i])
            throw Error(ErrorKind::data, "solve_underlying: infeasible data, xi < L_T at leaf " +
                                             std::to_string(i));

    Solution sol;
    sol.y = AdaptedProcess(model, n);
    sol.k = AdaptedProcess(model, n);
    sol.parts = MartingaleParts::zeros(model);
    sol.y.level(n) = xi;

    AdaptedProcess dk(model, n - 1);
    for (int t = n - 1; t >= 0; --t) {
        const auto& next = sol.y.level(t + 1);
        auto& cur = sol.y.level(t);
        const auto& lt = obstacle.level(t);
        const auto& dvt = dv.level(t);
        auto& zt = sol.parts.z.level(t);
        auto& bn = sol.parts.br_n.level(t);
        auto& bo = sol.parts.br_orth.level(t);
        auto& bzm = sol.parts.br_zm.level(t);
        auto& orth = sol.parts.orth[static_cast<std::size_t>(t)];
        auto& dkt = dk.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) {
            const NodeId v{t, i};
            const DecompositionSlice s =
                martingale_decompose(std::span<const double>(&next[i * b], b), v, model, measure);
            zt[i] = s.z;
            bn[i] = s.br_n;
            bo[i] = s.br_orth;
            bzm[i] = s.br_zm;
            for (std::size_t k = 0; k < b; ++k) orth[i * b + k] = s.orth[k];
            const double ytilde = s.mean + dvt[i];
            const double y = std::max(ytilde, lt[i]);
            cur[i] = y;
            dkt[i] = y - ytilde;
        });
    }

    // Cumulate the reflection increments, root at zero.
    sol.k.level(0)[0] = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto& cur = sol.k.level(t);
        auto& next = sol.k.level(t + 1);
        const auto& dkt = dk.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) {
            for (std::size_t k = 0; k < b; ++k) next[i * b + k] = cur[i] + dkt[i];
        });
    }
    return sol;
}

double stopping_rule_count(int levels, int branching) {
    double count = 1.0;
    for (int t = 0; t < levels; ++t) {
        double product = 1.0;
        for (int k = 0; k < branching; ++k) {
            product *= count;
            if (product > 1e30) return product;  // saturate, only compared against the cap
        }
        count = 1.0 + product;
    }
    return count;
}

namespace {

// All rule values on the subtree of v: stop now, or pay this step's drift
// and combine one rule per child. The max is deliberately taken only at the
// very end, over the literal list, so this stays an enumeration and not a
// dynamic program.
std::vector<double> enumerate_rule_values(const AdaptedProcess& dv, const std::vector<double>& xi,
                                          const AdaptedProcess& obstacle, const TreeModel& model,
                                          const Measure& measure, NodeId v) {
    if (model.is_terminal(v)) return {xi[v.index]};
    const int b = model.branching();
    std::vector<std::vector<double>> child_values(static_cast<std::size_t>(b));
    for (int k = 0; k < b; ++k)
        child_values[static_cast<std::size_t>(k)] =
            enumerate_rule_values(dv, xi, obstacle, model, measure, model.child(v, k));

    std::vector<double> values;
    std::size_t combos = 1;
    for (const auto& cv : child_values) combos *= cv.size();
    values.reserve(1 + combos);
    values.push_back(obstacle.at(v));  // stop here

    std::vector<std::size_t> pick(static_cast<std::size_t>(b), 0);
    for (std::size_t c = 0; c < combos; ++c) {
        double acc = dv.at(v);
        for (int k = 0; k < b; ++k)
            acc += measure.prob(v, k) * child_values[static_cast<std::size_t>(k)][pick[static_cast<std::size_t>(k)]];
        values.push_back(acc);
        for (int k = b - 1; k >= 0; --k) {
            if (++pick[static_cast<std::size_t>(k)] < child_values[static_cast<std::size_t>(k)].size()) break;
            pick[static_cast<std::size_t>(k)] = 0;
        }
    }
    return values;
}

}  // namespace

AdaptedProcess snell_oracle(const AdaptedProcess& dv, const std::vector<double>& xi,
                            const AdaptedProcess& obstacle, const TreeModel& model,
                            const Measure& measure, const OracleOptions& options) {
    if (model.depth() > options.max_depth)
        throw Error(ErrorKind::domain,
                    "snell_oracle: depth " + std::to_string(model.depth()) +
                        " exceeds the enumeration limit (" + std::to_string(options.max_depth) +
                        "); use solve_underlying for larger instances");
    const double rules = stopping_rule_count(model.depth(), model.branching());
    if (rules > options.max_rules)
        throw Error(ErrorKind::domain,
                    "snell_oracle: " + std::to_string(rules) +
                        " stopping rules exceed the enumeration cap; use solve_underlying");

    AdaptedProcess out(model, model.depth());
    for (int t = 0; t <= model.depth(); ++t) {
        auto& row = out.level(t);
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto values = enumerate_rule_values(dv, xi, obstacle, model, measure, NodeId{t, i});
            double best = values.front();
            for (double v : values) best = std::max(best, v);
            row[i] = best;
        }
    }
    return out;
}

SkorohodReport check_skorohod(const Solution& sol, const AdaptedProcess& obstacle,
                              const TreeModel& model, double tol) {
    SkorohodReport report;
    for (int t = 0; t < model.depth(); ++t) {
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double dk = sol.dk(model, v);
            const double product = dk * (sol.y.at(v) - obstacle.at(v));
            if (product > report.max_product) {
                report.max_product = product;
                report.worst_node = v;
            }
            report.min_increment = std::min(report.min_increment, dk);
        }
    }
    report.pass = report.max_product <= tol && report.min_increment >= -tol;
    return report;
}

SolutionCheck verify_solution(const Solution& sol, const AdaptedProcess& dv,
                              const std::vector<double>& xi, const AdaptedProcess& obstacle,
                              const TreeModel& model, const Measure& measure) {
    SolutionCheck check;
    const int n = model.depth();
    const std::size_t b = static_cast<std::size_t>(model.branching());
    for (std::size_t i = 0; i < model.nodes_at(n); ++i)
        check.max_terminal_error =
            std::max(check.max_terminal_error, std::abs(sol.y.level(n)[i] - xi[i]));
    for (int t = 0; t <= n; ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i)
            check.max_barrier_violation =
                std::max(check.max_barrier_violation, obstacle.level(t)[i] - sol.y.level(t)[i]);
    for (int t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double dk = sol.dk(model, v);
            check.min_dk = std::min(check.min_dk, dk);
            check.max_skorohod_product =
                std::max(check.max_skorohod_product, dk * (sol.y.at(v) - obstacle.at(v)));
            const double comp = ref_compensator(model, measure, v);
            for (std::size_t k = 0; k < b; ++k) {
                const double dn = sol.parts.increment(model, v, static_cast<int>(k), comp);
                const double residual =
                    sol.y.at(v) - (sol.y.level(t + 1)[i * b + k] + dv.at(v) + dk - dn);
                check.max_dynamics_residual =
                    std::max(check.max_dynamics_residual, std::abs(residual));
            }
        }
    }
    return check;
}

}  // namespace rbsde
