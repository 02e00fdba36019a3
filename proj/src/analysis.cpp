#include "rbsde/analysis.hpp"

#include <cmath>

namespace rbsde {

namespace {

double sup_g(const AdaptedProcess& g) {
    double best = 0.0;
    for (int t = 0; t <= g.last_level(); ++t)
        for (double v : g.level(t)) best = std::max(best, std::abs(v));
    return best;
}

}  // namespace

AdaptedProcess beta_at_solution(const DriverSpec& driver, const Solution& sol, const TreeModel& model) {
    AdaptedProcess out(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const double time = model.time_of(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            out.at(v) = driver_fy(*driver.f, v, time, sol.y.at(v), sol.parts.z.at(v) * model.sigma());
        }
    }
    return out;
}

AdaptedProcess gamma_at_solution(const DriverSpec& driver, const Solution& sol, const TreeModel& model) {
    AdaptedProcess out(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const double time = model.time_of(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            out.at(v) = driver_fz(*driver.f, v, time, sol.y.at(v), sol.parts.z.at(v) * model.sigma());
        }
    }
    return out;
}

double nu_bmo_norm_sq(const DriverSpec& driver, const TreeModel& model, const Measure& measure) {
    AdaptedProcess inc(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const auto& src = driver.nu_integrand.level(t);
        auto& dst = inc.level(t);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] * src[i] * model.dt();
    }
    AdaptedProcess remaining = remaining_bracket(inc, model, measure);
    double best = 0.0;
    for (int t = 0; t <= remaining.last_level(); ++t)
        for (double v : remaining.level(t)) best = std::max(best, v);
    return best;
}

BoundReport apriori_bmo_bound(const Solution& sol, const RBSDEData& data, const TreeModel& model,
                              const Measure& measure) {
    const double y_sinf = sup_norm(sol.y);
    const double big_lambda = data.driver.lambda(y_sinf);
    const double b = big_lambda + 1.0 + sup_g(data.driver.g);
    const double h_sq = l2bmo_norm_sq(data.driver.h, model, measure);
    const double nu_sq = nu_bmo_norm_sq(data.driver, model, measure);

    BoundReport report;
    report.lhs = k_abmo_norm(sol.k, model, measure) + bmo_norm_sq(sol.parts, model, measure);
    report.rhs = std::exp(8.0 * b * y_sinf) / (2.0 * b) *
                 (1.0 + 4.0 * b * (big_lambda * h_sq + nu_sq));
    report.pass = report.lhs <= report.rhs;
    report.slack_ratio = report.rhs > 0.0 ? report.lhs / report.rhs : 0.0;
    return report;
}

void validate_ordering(const RBSDEData& data, const RBSDEData& data_prime, const TreeModel& model,
                       const SampleGrid& grid) {
    for (std::size_t i = 0; i < data.xi.size(); ++i)
        if (data_prime.xi[i] > data.xi[i] + 1e-14)
            throw Error(ErrorKind::data, "ordering violation: xi' > xi at leaf " + std::to_string(i));
    for (int t = 0; t <= model.depth(); ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i)
            if (data_prime.obstacle.level(t)[i] > data.obstacle.level(t)[i] + 1e-14)
                throw Error(ErrorKind::data, "ordering violation: L' > L at level " + std::to_string(t));
    for (int t = 0; t < model.depth(); ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i)
            if (data_prime.driver.g.level(t)[i] > data.driver.g.level(t)[i] + 1e-14)
                throw Error(ErrorKind::data, "ordering violation: g' > g at level " + std::to_string(t));

    const std::size_t stride = 8;
    for (int t = 0; t < model.depth(); ++t) {
        const double time = model.time_of(t);
        const std::size_t n = model.nodes_at(t);
        for (std::size_t i = 0; i < n; i += (n > stride ? n / stride : 1)) {
            const NodeId v{t, i};
            for (double y : grid.ys)
                for (double z : grid.zs)
                    if ((*data_prime.driver.f)(v, time, y, z) > (*data.driver.f)(v, time, y, z) + 1e-12)
                        throw Error(ErrorKind::data,
                                    "ordering violation: f' > f sampled at (y=" + std::to_string(y) +
                                        ", z=" + std::to_string(z) + ")");
        }
    }
}

ComparisonReport check_comparison(const RBSDEData& data, const RBSDEData& data_prime,
                                  const TreeModel& model, const Measure& measure, double tol,
                                  double solver_tol, int max_iter) {
    validate_ordering(data, data_prime, model);

    ComparisonReport report;
    report.sol = solve_auto(data, model, measure, solver_tol, max_iter).solution;
    report.sol_prime = solve_auto(data_prime, model, measure, solver_tol, max_iter).solution;

    // Step-size guard for the linearization kernel F_z sigma^-1 dM + nu',
    // nu' = nu + int g d(N-perp + N'-perp), built from differential quotients
    // so the linearization identity is exact.
    const std::size_t b = static_cast<std::size_t>(model.branching());
    const double sigma = model.sigma();
    for (int t = 0; t < model.depth(); ++t) {
        const double time = model.time_of(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double y = report.sol.y.at(v);
            const double zs = report.sol.parts.z.at(v) * sigma;
            const double zs_p = report.sol_prime.parts.z.at(v) * sigma;
            double fz;
            if (std::abs(zs_p - zs) > 1e-9)
                fz = ((*data.driver.f)(v, time, y, zs_p) - (*data.driver.f)(v, time, y, zs)) /
                     (zs_p - zs);
            else
                fz = driver_fz(*data.driver.f, v, time, y, zs);
            const double nu = data.driver.nu_integrand.at(v);
            const double g = data.driver.g.at(v);
            for (std::size_t k = 0; k < b; ++k) {
                const double dnu_prime =
                    nu * model.dwp(static_cast<int>(k)) +
                    g * (report.sol.parts.orth[static_cast<std::size_t>(t)][i * b + k] +
                         report.sol_prime.parts.orth[static_cast<std::size_t>(t)][i * b + k]);
                const double dl = fz / sigma * model.dm(static_cast<int>(k)) + dnu_prime;
                report.kernel_sup = std::max(report.kernel_sup, std::abs(dl));
            }
        }
    }
    if (report.kernel_sup >= 1.0)
        throw Error(ErrorKind::gate,
                    "check_comparison: linearization kernel increment reaches " +
                        std::to_string(report.kernel_sup) + " >= 1; reduce dt");

    report.worst_violation = -1e300;
    for (int t = 0; t <= model.depth(); ++t) {
        const auto& y = report.sol.y.level(t);
        const auto& yp = report.sol_prime.y.level(t);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double violation = yp[i] - y[i];
            if (violation > report.worst_violation) {
                report.worst_violation = violation;
                report.worst_node = NodeId{t, i};
            }
        }
    }
    report.pass = report.worst_violation <= tol;
    return report;
}

ComparisonReport check_special_comparison(const Solution& sol, const Solution& sol_prime,
                                          const RBSDEData& data, const RBSDEData& data_prime,
                                          const TreeModel& model, double tol) {
    for (int t = 0; t <= model.depth(); ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i)
            if (data.obstacle.level(t)[i] != data_prime.obstacle.level(t)[i])
                throw Error(ErrorKind::contract,
                            "check_special_comparison: the theorem requires the same obstacle");

    ComparisonReport report;
    // Domination Y' <= Y must hold first.
    for (int t = 0; t <= model.depth(); ++t) {
        const auto& y = sol.y.level(t);
        const auto& yp = sol_prime.y.level(t);
        for (std::size_t i = 0; i < y.size(); ++i)
            if (yp[i] > y[i] + tol)
                throw Error(ErrorKind::contract,
                            "check_special_comparison: Y' is not dominated by Y at level " +
                                std::to_string(t));
    }

    report.worst_violation = -1e300;
    for (int t = 0; t < model.depth(); ++t) {
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double violation = sol.dk(model, v) - sol_prime.dk(model, v);
            if (violation > report.worst_violation) {
                report.worst_violation = violation;
                report.worst_node = v;
            }
        }
    }
    report.pass = report.worst_violation <= tol;
    return report;
}

StabilityReport stability_experiment(const RBSDEData& base_data,
                                     const std::vector<StabilityDelta>& deltas,
                                     const TreeModel& model, const Measure& measure, double tol,
                                     int max_iter) {
    StabilityReport report;
    const AutoSolveResult base = solve_auto(base_data, model, measure, tol, max_iter);
    const AdaptedProcess beta_bar = beta_at_solution(base_data.driver, base.solution, model);
    const AdaptedProcess gamma_bar = gamma_at_solution(base_data.driver, base.solution, model);
    report.beta_bar_linf1 = linf_norms(beta_bar, model).linf1;
    const double r2 = linf_norms(base_data.driver.r, model).linf2_sq;
    const double lambda = base_data.driver.lambda.constant_value();
    const double eps = epsilon0(2.0 * lambda, r2, report.beta_bar_linf1);
    report.gate = eps / std::sqrt(2.0);
    const double factor = 32.0 * std::exp(2.0 * report.beta_bar_linf1);

    const SmallnessBudget pert_budget = make_budget(2.0 * lambda, r2, report.beta_bar_linf1, 0.0);

    // Q for the BMO estimate: kernel gamma_bar/sigma dM + nu_bar,
    // nu_bar = nu + int 2 g dN-perp at the base solution.
    const std::size_t b = static_cast<std::size_t>(model.branching());
    std::vector<std::vector<double>> kernel(static_cast<std::size_t>(model.depth()));
    for (int t = 0; t < model.depth(); ++t) {
        auto& row = kernel[static_cast<std::size_t>(t)];
        row.resize(model.nodes_at(t) * b);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double nu = base_data.driver.nu_integrand.at(v);
            const double g = base_data.driver.g.at(v);
            for (std::size_t k = 0; k < b; ++k)
                row[i * b + k] =
                    gamma_bar.at(v) / model.sigma() * model.dm(static_cast<int>(k)) +
                    nu * model.dwp(static_cast<int>(k)) +
                    2.0 * g * base.solution.parts.orth[static_cast<std::size_t>(t)][i * b + k];
        }
    }
    const Measure q = girsanov(model, measure, kernel);

    const double horizon = model.horizon();
    for (const StabilityDelta& delta : deltas) {
        StabilityPairReport pair;
        const double d1 = std::abs(delta.dxi_first) + std::abs(delta.dalpha_first) * horizon;
        const double d2 = std::abs(delta.dxi_second) + std::abs(delta.dalpha_second) * horizon;
        pair.gated = d1 <= report.gate && d2 <= report.gate;
        if (!pair.gated) {
            pair.skip_reason = "perturbation size exceeds epsilon0(beta_bar, 2 lambda, r)/sqrt(2)";
            report.pairs.push_back(pair);
            continue;
        }

        const auto perturb = [&](double dxi, double dalpha) {
            std::vector<double> xi_inc(base_data.xi.size(), dxi);
            AdaptedProcess alpha_inc(model, model.depth() - 1, dalpha);
            return solve_perturbation(base.solution, base_data, xi_inc, alpha_inc, model, measure,
                                      pert_budget, tol, max_iter);
        };
        const PerturbationResult first = perturb(delta.dxi_first, delta.dalpha_first);
        const PerturbationResult second = perturb(delta.dxi_second, delta.dalpha_second);

        pair.delta_d = std::abs(delta.dxi_second - delta.dxi_first) +
                       std::abs(delta.dalpha_second - delta.dalpha_first) * horizon;
        pair.bound = factor * pair.delta_d;
        for (int t = 0; t <= model.depth(); ++t) {
            const auto& ya = second.combined.y.level(t);
            const auto& yb = first.combined.y.level(t);
            for (std::size_t i = 0; i < ya.size(); ++i)
                pair.dy_sinf = std::max(pair.dy_sinf, std::abs(ya[i] - yb[i]));
        }

        // Delta N under P and its Girsanov transform under Q.
        pair.dn_bmo_p = std::sqrt(
            bmo_norm_sq_of_difference(second.combined.parts, first.combined.parts, model, measure));
        AdaptedProcess q_bracket(model, model.depth() - 1);
        for (int t = 0; t < model.depth(); ++t) {
            const auto& krow = kernel[static_cast<std::size_t>(t)];
            for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
                const NodeId v{t, i};
                double dn[4];
                double compensator = 0.0;
                for (std::size_t k = 0; k < b; ++k) {
                    dn[k] = second.combined.parts.increment(model, v, static_cast<int>(k)) -
                            first.combined.parts.increment(model, v, static_cast<int>(k));
                    compensator += measure.prob(v, static_cast<int>(k)) * krow[i * b + k] * dn[k];
                }
                double acc = 0.0;
                for (std::size_t k = 0; k < b; ++k) {
                    const double dtilde = dn[k] - compensator;
                    acc += q.prob(v, static_cast<int>(k)) * dtilde * dtilde;
                }
                q_bracket.at(v) = acc;
            }
        }
        AdaptedProcess remaining = remaining_bracket(q_bracket, model, q);
        double best = 0.0;
        for (int t = 0; t <= remaining.last_level(); ++t)
            for (double v : remaining.level(t)) best = std::max(best, v);
        pair.dn_bmo_q = std::sqrt(best);

        pair.ratio_p_q = pair.dn_bmo_q > 0.0 ? pair.dn_bmo_p / pair.dn_bmo_q : 1.0;
        pair.pass_sinf = pair.dy_sinf <= pair.bound + 1e-14;
        pair.pass_bmo = pair.dn_bmo_q <= pair.bound + 1e-14;
        report.pass = report.pass && pair.pass_sinf && pair.pass_bmo;
        report.pairs.push_back(pair);
    }
    return report;
}

}  // namespace rbsde
