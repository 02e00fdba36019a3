#include "rbsde/solver.hpp"

#include <cmath>

#include "rbsde/par.hpp"

namespace rbsde {

namespace {

double max_abs_diff(const AdaptedProcess& a, const AdaptedProcess& b) {
    double best = 0.0;
    for (int t = 0; t <= a.last_level(); ++t) {
        const auto& ra = a.level(t);
        const auto& rb = b.level(t);
        for (std::size_t i = 0; i < ra.size(); ++i) best = std::max(best, std::abs(ra[i] - rb[i]));
    }
    return best;
}

// || (yA, nA) - (yB, nB) || in the combined norm sqrt(S-inf^2 + BMO^2).
double combined_diff_norm(const AdaptedProcess& ya, const MartingaleParts& na,
                          const AdaptedProcess& yb, const MartingaleParts& nb, const TreeModel& model,
                          const Measure& measure) {
    const double dy = max_abs_diff(ya, yb);
    const double dn_sq = bmo_norm_sq_of_difference(na, nb, model, measure);
    return std::sqrt(dy * dy + dn_sq);
}

AdaptedProcess scaled_leafless(const AdaptedProcess& x, double factor) {
    AdaptedProcess out = x;
    for (int t = 0; t <= out.last_level(); ++t)
        for (double& v : out.level(t)) v *= factor;
    return out;
}

double obstacle_plus_sup(const AdaptedProcess& obstacle) {
    double best = 0.0;
    for (int t = 0; t <= obstacle.last_level(); ++t)
        for (double v : obstacle.level(t)) best = std::max(best, v);
    return best;
}

double xi_sup(const std::vector<double>& xi) {
    double best = 0.0;
    for (double v : xi) best = std::max(best, std::abs(v));
    return best;
}

}  // namespace

double epsilon0(double lambda, double r_linf2_sq, double beta_linf1) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::parameter, "epsilon0: lambda must be positive");
    return std::exp(-2.0 * beta_linf1) / (1024.0 * lambda * (r_linf2_sq + 2.0));
}

SmallnessBudget make_budget(double lambda, double r_linf2_sq, double beta_linf1, double data_size) {
    SmallnessBudget b;
    b.lambda = lambda;
    b.r_linf2_sq = r_linf2_sq;
    b.beta_linf1 = beta_linf1;
    b.epsilon0 = epsilon0(lambda, r_linf2_sq, beta_linf1);
    const double lambda_hat = std::exp(beta_linf1) * lambda;
    b.r0 = 1.0 / (32.0 * lambda_hat * (r_linf2_sq + 2.0));
    b.data_size = data_size;
    // tiny backoff so exact multiples of epsilon0 do not round up
    b.n_split = std::max(1, static_cast<int>(std::ceil(data_size / b.epsilon0 - 1e-9)));
    return b;
}

double data_size(const RBSDEData& data, const TreeModel& model) {
    const AdaptedProcess alpha = residual_drift(data.driver, model);
    return xi_sup(data.xi) + linf_norms(alpha, model).linf1 + obstacle_plus_sup(data.obstacle);
}

AdaptedProcess drift_process(const RBSDEData& data, const AdaptedProcess& y,
                             const MartingaleParts& parts, const TreeModel& model,
                             const Measure& measure) {
    AdaptedProcess dv(model, model.depth() - 1);
    const std::size_t b = static_cast<std::size_t>(model.branching());
    const bool quaternary = model.branching() == 4;
    for (int t = 0; t < model.depth(); ++t) {
        const double time = model.time_of(t);
        auto& row = dv.level(t);
        const auto& yt = y.level(t);
        const auto& zt = parts.z.level(t);
        const auto& gt = data.driver.g.level(t);
        const auto& bo = parts.br_orth.level(t);
        const auto& orth = parts.orth[static_cast<std::size_t>(t)];
        par::for_each(model.nodes_at(t), [&](std::size_t i) {
            const NodeId v{t, i};
            double value =
                (*data.driver.f)(v, time, yt[i], zt[i] * model.sigma()) * model.dt();
            if (quaternary) {
                // <nu, n-perp> + g <n-perp> against the frozen input.
                double cross = 0.0;
                const double nu = data.driver.nu_integrand.at(v);
                if (nu != 0.0) {
                    for (std::size_t k = 0; k < b; ++k)
                        cross += measure.prob(v, static_cast<int>(k)) *
                                 nu * model.dwp(static_cast<int>(k)) * orth[i * b + k];
                }
                value += cross + gt[i] * bo[i];
            }
            row[i] = value;
        });
    }
    return dv;
}

Solution sol_map(const AdaptedProcess& y, const MartingaleParts& parts, const RBSDEData& data,
                 const TreeModel& model, const Measure& measure) {
    const AdaptedProcess dv = drift_process(data, y, parts, model, measure);
    return solve_underlying(dv, data.xi, data.obstacle, model, measure);
}

Solution zero_solution(const TreeModel& model) {
    Solution s;
    s.y = AdaptedProcess(model, model.depth());
    s.k = AdaptedProcess(model, model.depth());
    s.parts = MartingaleParts::zeros(model);
    return s;
}

PicardResult picard_solve(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                          const SmallnessBudget& budget, double tol, int max_iter, bool force) {
    PicardTrace trace;
    trace.r0 = budget.r0;
    trace.gate_passed = budget.data_size <= budget.epsilon0 * (1.0 + 1e-12);
    if (!trace.gate_passed && !force)
        throw Error(ErrorKind::gate,
                    "picard_solve: data size " + std::to_string(budget.data_size) +
                        " exceeds epsilon0 = " + std::to_string(budget.epsilon0) +
                        "; convergence is not guaranteed (use solve_full, or force the iteration)");

    AdaptedProcess y_cur(model, model.depth());
    MartingaleParts n_cur = MartingaleParts::zeros(model);
    Solution sol;
    double prev_ds = -1.0;
    for (int it = 1; it <= max_iter; ++it) {
        sol = sol_map(y_cur, n_cur, data, model, measure);
        const double ds = combined_diff_norm(sol.y, sol.parts, y_cur, n_cur, model, measure);
        const double y_sinf = sup_norm(sol.y);
        const double n_bmo = bmo_norm_sq(sol.parts, model, measure);
        trace.iterates.push_back({y_sinf, n_bmo, ds});
        if (prev_ds > 0.0) trace.contraction_ratios.push_back(ds / prev_ds);
        prev_ds = ds;
        trace.iterations = it;
        y_cur = sol.y;
        n_cur = sol.parts;
        if (ds <= tol) {
            trace.converged = true;
            break;
        }
    }
    if (!trace.converged)
        throw ConvergenceError("picard_solve: no fixed point within " + std::to_string(max_iter) +
                                   " iterations (last step " + std::to_string(prev_ds) + ")",
                               trace);
    const double y_sinf = trace.iterates.back().y_sinf;
    trace.final_norm = std::sqrt(y_sinf * y_sinf + trace.iterates.back().n_bmo_sq);
    return PicardResult{std::move(sol), std::move(trace)};
}

SmallnessBudget single_shot_budget(const RBSDEData& data, const TreeModel& model) {
    const Linearization lin = linearize(data.driver, model);
    const double beta1 = linf_norms(lin.beta, model).linf1;
    const double r2 = linf_norms(data.driver.r, model).linf2_sq;
    return make_budget(data.driver.lambda.constant_value(), r2, beta1, data_size(data, model));
}

namespace {

// Transformed driver: B+ h(t, y/B, z/B+) for the linear-free remainder h.
// The split factors are what makes the discrete gauge exact.
class GaugeDriver : public DriverFunc {
  public:
    GaugeDriver(DriverPtr remainder, AdaptedProcess factor, AdaptedProcess factor_next)
        : remainder_(std::move(remainder)), factor_(std::move(factor)),
          factor_next_(std::move(factor_next)) {}

    double operator()(NodeId v, double t, double y, double zs) const override {
        const double b = factor_.at(v);
        const double bp = factor_next_.at(v);
        return bp * (*remainder_)(v, t, y / b, zs / bp);
    }

  private:
    DriverPtr remainder_;
    AdaptedProcess factor_;
    AdaptedProcess factor_next_;
};

}  // namespace

GaugeTransform transform_out(const RBSDEData& data, const TreeModel& model, const Measure& p) {
    GaugeTransform g;
    const Linearization lin = linearize(data.driver, model);
    g.beta = lin.beta;
    g.gamma = lin.gamma;

    // Discrete integrating factor B(child) = B(v) / (1 - beta dt).
    g.factor = AdaptedProcess(model, model.depth());
    g.factor_next = AdaptedProcess(model, model.depth() - 1);
    g.factor.level(0)[0] = 1.0;
    const std::size_t b = static_cast<std::size_t>(model.branching());
    for (int t = 0; t < model.depth(); ++t) {
        const auto& cur = g.factor.level(t);
        auto& next = g.factor.level(t + 1);
        auto& fn = g.factor_next.level(t);
        const auto& bt = lin.beta.level(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const double denom = 1.0 - bt[i] * model.dt();
            if (!(denom > 0.0))
                throw Error(ErrorKind::gate,
                            "transform_out: beta dt >= 1, integrating factor degenerates; reduce dt");
            fn[i] = cur[i] / denom;
            for (std::size_t k = 0; k < b; ++k) next[i * b + k] = fn[i];
        }
    }

    // Girsanov kernel gamma/sigma dM + nu.
    g.kernel.resize(static_cast<std::size_t>(model.depth()));
    for (int t = 0; t < model.depth(); ++t) {
        auto& row = g.kernel[static_cast<std::size_t>(t)];
        row.resize(model.nodes_at(t) * b);
        const auto& gt = lin.gamma.level(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double nu = data.driver.nu_integrand.at(v);
            for (std::size_t k = 0; k < b; ++k)
                row[i * b + k] = gt[i] / model.sigma() * model.dm(static_cast<int>(k)) +
                                 nu * model.dwp(static_cast<int>(k));
        }
    }
    g.q = girsanov(model, p, g.kernel);

    // Transformed data: no linear terms, no nu, scaled obstacle and xi.
    g.hat_data = data;
    g.hat_data.driver.f = std::make_shared<GaugeDriver>(lin.remainder, g.factor, g.factor_next);
    const double beta1 = linf_norms(lin.beta, model).linf1;
    g.hat_data.driver.lambda = data.driver.lambda.scaled(std::exp(beta1));
    g.hat_data.driver.nu_integrand = AdaptedProcess(model, model.depth() - 1, 0.0);
    for (int t = 0; t < model.depth(); ++t) {
        auto& grow_ = g.hat_data.driver.g.level(t);
        const auto& fn = g.factor_next.level(t);
        for (std::size_t i = 0; i < grow_.size(); ++i) grow_[i] /= fn[i];
    }
    for (int t = 0; t <= model.depth(); ++t) {
        auto& lrow = g.hat_data.obstacle.level(t);
        const auto& frow = g.factor.level(t);
        for (std::size_t i = 0; i < lrow.size(); ++i) lrow[i] *= frow[i];
    }
    const auto& f_leaf = g.factor.level(model.depth());
    for (std::size_t i = 0; i < g.hat_data.xi.size(); ++i) g.hat_data.xi[i] *= f_leaf[i];
    return g;
}

Solution transform_back(const Solution& sol_hat, const GaugeTransform& gauge, const TreeModel& model,
                        const Measure& p) {
    const int n = model.depth();
    const std::size_t b = static_cast<std::size_t>(model.branching());
    Solution out;
    out.measure_tag = MeasureTag::base;
    out.y = AdaptedProcess(model, n);
    out.k = AdaptedProcess(model, n);
    out.parts = MartingaleParts::zeros(model);

    for (int t = 0; t <= n; ++t) {
        const auto& f = gauge.factor.level(t);
        const auto& src = sol_hat.y.level(t);
        auto& dst = out.y.level(t);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] / f[i];
    }

    out.k.level(0)[0] = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto& fn = gauge.factor_next.level(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const double dk_hat = sol_hat.dk(model, NodeId{t, i});
            const double dk = dk_hat / fn[i];
            for (std::size_t k = 0; k < b; ++k)
                out.k.level(t + 1)[i * b + k] = out.k.level(t)[i] + dk;
        }
    }

    // N = N~ + <kernel, N~> with N~ = B^{-1} dN-hat, then re-decomposed
    // against the reference martingale under the base measure.
    for (int t = 0; t < n; ++t) {
        const auto& fn = gauge.factor_next.level(t);
        const auto& krow = gauge.kernel[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};
            const double comp_q = ref_compensator(model, gauge.q, v);
            double dn[4] = {0, 0, 0, 0};
            double cross = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double dtilde =
                    sol_hat.parts.increment(model, v, static_cast<int>(k), comp_q) / fn[i];
                dn[k] = dtilde;
                cross += p.prob(v, static_cast<int>(k)) * krow[i * b + k] * dtilde;
            }
            double z = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                dn[k] += cross;
                z += p.prob(v, static_cast<int>(k)) * dn[k] * model.dm(static_cast<int>(k));
            }
            z /= model.dm_bracket();
            out.parts.z.level(t)[i] = z;
            double br_n = 0.0, br_orth = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double o = dn[k] - z * model.dm(static_cast<int>(k));
                out.parts.orth[static_cast<std::size_t>(t)][i * b + k] = o;
                br_n += p.prob(v, static_cast<int>(k)) * dn[k] * dn[k];
                br_orth += p.prob(v, static_cast<int>(k)) * o * o;
            }
            out.parts.br_n.level(t)[i] = br_n;
            out.parts.br_orth.level(t)[i] = br_orth;
            out.parts.br_zm.level(t)[i] = z * model.dm_bracket();
        }
    }
    return out;
}

PerturbationResult solve_perturbation(const Solution& base, const RBSDEData& base_data,
                                      const std::vector<double>& xi_inc,
                                      const AdaptedProcess& alpha_inc, const TreeModel& model,
                                      const Measure& measure, const SmallnessBudget& budget,
                                      double tol, int max_iter) {
    const double delta_d = xi_sup(xi_inc) + linf_norms(alpha_inc, model).linf1;
    if (delta_d > budget.epsilon0 * (1.0 + 1e-12)) {
        const int suggested = static_cast<int>(std::ceil(delta_d / budget.epsilon0));
        throw Error(ErrorKind::gate, "solve_perturbation: increment size " + std::to_string(delta_d) +
                                         " exceeds epsilon0 = " + std::to_string(budget.epsilon0) +
                                         "; split finer (suggested factor " +
                                         std::to_string(suggested) + ")");
    }

    const int n = model.depth();
    const std::size_t b = static_cast<std::size_t>(model.branching());
    const bool quaternary = model.branching() == 4;

    // Drift of the base solution, evaluated once at its own values.
    const AdaptedProcess dv_base = drift_process(base_data, base.y, base.parts, model, measure);

    std::vector<double> xi_bar = base_data.xi;
    for (std::size_t i = 0; i < xi_bar.size(); ++i) xi_bar[i] += xi_inc[i];

    PicardTrace trace;
    trace.r0 = budget.r0;
    trace.gate_passed = true;

    AdaptedProcess y2(model, n);
    MartingaleParts n2 = MartingaleParts::zeros(model);
    Solution combined;
    double prev_ds = -1.0;
    const double sigma = model.sigma();
    for (int it = 1; it <= max_iter; ++it) {
        // dV2 at the frozen increment (y2, n2).
        AdaptedProcess dv_bar(model, n - 1);
        for (int t = 0; t < n; ++t) {
            const double time = model.time_of(t);
            const auto& ybt = base.y.level(t);
            const auto& zbt = base.parts.z.level(t);
            const auto& y2t = y2.level(t);
            const auto& z2t = n2.z.level(t);
            const auto& gt = base_data.driver.g.level(t);
            const auto& bo2 = n2.br_orth.level(t);
            const auto& orth_b = base.parts.orth[static_cast<std::size_t>(t)];
            const auto& orth_2 = n2.orth[static_cast<std::size_t>(t)];
            auto& row = dv_bar.level(t);
            par::for_each(model.nodes_at(t), [&](std::size_t i) {
                const NodeId v{t, i};
                const double f_shifted = (*base_data.driver.f)(
                    v, time, ybt[i] + y2t[i], (zbt[i] + z2t[i]) * sigma);
                const double f_at_base = (*base_data.driver.f)(v, time, ybt[i], zbt[i] * sigma);
                double value = (f_shifted - f_at_base + alpha_inc.at(v)) * model.dt();
                if (quaternary) {
                    // <nu + 2 g dN1-perp, n2-perp> + g <n2-perp>
                    const double nu = base_data.driver.nu_integrand.at(v);
                    double cross = 0.0;
                    for (std::size_t k = 0; k < b; ++k)
                        cross += measure.prob(v, static_cast<int>(k)) *
                                 (nu * model.dwp(static_cast<int>(k)) + 2.0 * gt[i] * orth_b[i * b + k]) *
                                 orth_2[i * b + k];
                    value += cross + gt[i] * bo2[i];
                }
                row[i] = dv_base.at(v) + value;
            });
        }

        combined = solve_underlying(dv_bar, xi_bar, base_data.obstacle, model, measure);

        // Increment of this iterate.
        AdaptedProcess y2_new(model, n);
        for (int t = 0; t <= n; ++t) {
            const auto& yc = combined.y.level(t);
            const auto& yb = base.y.level(t);
            auto& dst = y2_new.level(t);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = yc[i] - yb[i];
        }
        MartingaleParts n2_new = MartingaleParts::zeros(model);
        for (int t = 0; t < n; ++t) {
            const auto& zc = combined.parts.z.level(t);
            const auto& zb = base.parts.z.level(t);
            auto& zd = n2_new.z.level(t);
            const auto& oc = combined.parts.orth[static_cast<std::size_t>(t)];
            const auto& ob = base.parts.orth[static_cast<std::size_t>(t)];
            auto& od = n2_new.orth[static_cast<std::size_t>(t)];
            auto& bn = n2_new.br_n.level(t);
            auto& bo = n2_new.br_orth.level(t);
            auto& bzm = n2_new.br_zm.level(t);
            par::for_each(model.nodes_at(t), [&](std::size_t i) {
                const NodeId v{t, i};
                zd[i] = zc[i] - zb[i];
                const double comp = ref_compensator(model, measure, v);
                double br_n = 0.0, br_orth = 0.0, var = 0.0;
                for (std::size_t k = 0; k < b; ++k) {
                    const double q = measure.prob(v, static_cast<int>(k));
                    const double dmt = model.dm(static_cast<int>(k)) - comp;
                    od[i * b + k] = oc[i * b + k] - ob[i * b + k];
                    const double d = zd[i] * dmt + od[i * b + k];
                    br_n += q * d * d;
                    br_orth += q * od[i * b + k] * od[i * b + k];
                    var += q * dmt * dmt;
                }
                bn[i] = br_n;
                bo[i] = br_orth;
                bzm[i] = zd[i] * var;
            });
        }

        const double ds = combined_diff_norm(y2_new, n2_new, y2, n2, model, measure);
        trace.iterates.push_back(
            {sup_norm(y2_new), bmo_norm_sq(n2_new, model, measure), ds});
        if (prev_ds > 0.0) trace.contraction_ratios.push_back(ds / prev_ds);
        prev_ds = ds;
        trace.iterations = it;
        y2 = std::move(y2_new);
        n2 = std::move(n2_new);
        if (ds <= tol) {
            trace.converged = true;
            break;
        }
    }
    if (!trace.converged)
        throw ConvergenceError("solve_perturbation: no fixed point within " +
                                   std::to_string(max_iter) + " iterations",
                               trace);

    PerturbationResult out;
    out.combined = std::move(combined);
    out.increment.y = std::move(y2);
    out.increment.parts = std::move(n2);
    out.increment.k = AdaptedProcess(model, n);
    for (int t = 0; t <= n; ++t) {
        const auto& kc = out.combined.k.level(t);
        const auto& kb = base.k.level(t);
        auto& kd = out.increment.k.level(t);
        for (std::size_t i = 0; i < kd.size(); ++i) kd[i] = kc[i] - kb[i];
    }
    const double y_sinf = trace.iterates.back().y_sinf;
    trace.final_norm = std::sqrt(y_sinf * y_sinf + trace.iterates.back().n_bmo_sq);
    out.trace = std::move(trace);
    return out;
}

namespace {

// Shared staged construction: translate the obstacle, split (xi, alpha)
// uniformly and absorb one piece per perturbation solve. `gate_lambda` and
// `gate_beta` pin the stage budget; `record_hat` adds the per-stage gauge
// record required for the growth-function families.
FullSolveResult staged_solve(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                             double tol, int max_iter, int n_override, double gate_lambda,
                             double gate_beta, double rho_max, bool record_hat) {
    const TranslatedData shifted = translate_obstacle(data, model);
    const RBSDEData& base_spec = shifted.data;
    const AdaptedProcess alpha = residual_drift(base_spec.driver, model);
    const double d = data_size(base_spec, model);
    const double r2 = linf_norms(base_spec.driver.r, model).linf2_sq;

    FullSolveResult out;
    out.obstacle_shift = shifted.shift;
    out.budget = make_budget(gate_lambda, r2, gate_beta, d);
    const int n = n_override > 0 ? n_override : out.budget.n_split;
    if (n > kMaxStages)
        throw Error(ErrorKind::gate, "staged solve needs " + std::to_string(n) +
                                         " stages, above the cap of " + std::to_string(kMaxStages));
    const double stage_tol = std::max(std::min(tol, tol / n), 5e-15);

    // Stage data pieces.
    std::vector<double> xi_piece = base_spec.xi;
    for (double& x : xi_piece) x /= n;
    const AdaptedProcess alpha_piece = scaled_leafless(alpha, 1.0 / n);

    Solution base = zero_solution(model);
    RBSDEData stage_data = base_spec;
    stage_data.xi.assign(base_spec.xi.size(), 0.0);
    stage_data.driver.f = shift_driver(base_spec.driver.f, alpha, -1.0);

    const double delta_d = xi_sup(xi_piece) + linf_norms(alpha_piece, model).linf1;
    for (int i = 1; i <= n; ++i) {
        PerturbationResult res = solve_perturbation(base, stage_data, xi_piece, alpha_piece, model,
                                                    measure, out.budget, stage_tol, max_iter);
        StageRecord record;
        record.index = i;
        record.delta_d = delta_d;
        record.epsilon0 = out.budget.epsilon0;
        record.iterations = res.trace.iterations;
        record.rho_max = rho_max;
        if (record_hat) {
            // Stage gauge: exp integrating factor of f_y at the previous
            // accumulated solution.
            AdaptedProcess beta_bar(model, model.depth() - 1);
            for (int t = 0; t < model.depth(); ++t) {
                const double time = model.time_of(t);
                for (std::size_t j = 0; j < model.nodes_at(t); ++j) {
                    const NodeId v{t, j};
                    beta_bar.at(v) = driver_fy(*base_spec.driver.f, v, time, base.y.at(v),
                                               base.parts.z.at(v) * model.sigma());
                }
            }
            const AdaptedProcess factor = integrating_factor(beta_bar, model);
            double hat_sup = 0.0;
            for (int t = 0; t <= model.depth(); ++t) {
                const auto& fr = factor.level(t);
                const auto& yr = res.increment.y.level(t);
                for (std::size_t j = 0; j < fr.size(); ++j)
                    hat_sup = std::max(hat_sup, std::abs(fr[j] * yr[j]));
            }
            record.y_hat_sinf = hat_sup;
        } else {
            record.y_hat_sinf = sup_norm(res.increment.y);
        }
        out.stages.push_back(record);

        base = std::move(res.combined);
        for (std::size_t j = 0; j < stage_data.xi.size(); ++j) stage_data.xi[j] += xi_piece[j];
        stage_data.driver.f =
            shift_driver(base_spec.driver.f, alpha, static_cast<double>(i) / n - 1.0);
    }

    // Undo the obstacle translation.
    out.solution = std::move(base);
    if (shifted.shift != 0.0)
        for (int t = 0; t <= model.depth(); ++t)
            for (double& v : out.solution.y.level(t)) v += shifted.shift;
    return out;
}

}  // namespace

FullSolveResult solve_full(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                           double tol, int max_iter, int n_override) {
    const double lambda = data.driver.lambda.constant_value();
    const double rho = data.driver.rho.constant_value();
    const double r2 = linf_norms(data.driver.r, model).linf2_sq;
    return staged_solve(data, model, measure, tol, max_iter, n_override, 2.0 * lambda, rho * r2, rho,
                        false);
}

FullSolveResult solve_superlinear(const RBSDEData& data, const TreeModel& model,
                                  const Measure& measure, double tol, int max_iter,
                                  const AprioriBound& bound) {
    if (data.driver.family == Family::lipschitz_y)
        throw Error(ErrorKind::data, "solve_superlinear: data is declared Lipschitz; use solve_full");

    const AdaptedProcess alpha = residual_drift(data.driver, model);
    const double xi_norm = xi_sup(data.xi);
    const double alpha_norm = linf_norms(alpha, model).linf1;
    const double r2 = linf_norms(data.driver.r, model).linf2_sq;

    // Default a priori bound: the monotone-case formula with the declared mu.
    const double f_value = bound ? bound(xi_norm, alpha_norm)
                                 : std::sqrt(2.0 * std::exp(4.0 * data.driver.mu * r2) *
                                             (xi_norm * xi_norm + 2.0 * alpha_norm * alpha_norm));
    const double rho_max = data.driver.rho(f_value);
    const double lambda1 = data.driver.lambda(1.0);
    return staged_solve(data, model, measure, tol, max_iter, 0, 2.0 * lambda1, rho_max * r2, rho_max,
                        true);
}

FullSolveResult solve_monotone(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                               double tol, int max_iter) {
    if (data.driver.family != Family::monotone_y)
        throw Error(ErrorKind::data, "solve_monotone: data is not declared monotone");
    const ValidationReport mono = validate_monotone(data, model);
    if (!mono.pass)
        throw Error(ErrorKind::data,
                    "solve_monotone: sampled monotonicity violation at (y=" +
                        std::to_string(mono.worst.y) + ", y'=" + std::to_string(mono.worst.y_prime) +
                        ", z=" + std::to_string(mono.worst.z) + ")");

    const AdaptedProcess alpha = residual_drift(data.driver, model);
    const double xi_norm = xi_sup(data.xi);
    const double alpha_norm = linf_norms(alpha, model).linf1;
    const double r2 = linf_norms(data.driver.r, model).linf2_sq;
    const double bound_sq = 2.0 * std::exp(4.0 * data.driver.mu * r2) *
                            (xi_norm * xi_norm + 2.0 * alpha_norm * alpha_norm);

    FullSolveResult out = solve_superlinear(
        data, model, measure, tol, max_iter,
        [bound_sq](double, double) { return std::sqrt(bound_sq); });
    const double y_sinf = sup_norm(out.solution.y);
    out.monotone_bound = std::make_pair(y_sinf * y_sinf, bound_sq);
    return out;
}

AutoSolveResult solve_auto(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                           double tol, int max_iter) {
    AutoSolveResult out;
    out.budget = single_shot_budget(data, model);
    if (out.budget.data_size <= out.budget.epsilon0) {
        PicardResult res = picard_solve(data, model, measure, out.budget, tol, max_iter);
        out.solution = std::move(res.solution);
        out.trace = std::move(res.trace);
        out.route = SolveRoute::picard_gated;
        return out;
    }
    try {
        PicardResult res = picard_solve(data, model, measure, out.budget, tol, max_iter, true);
        // Forced iterations are accepted only when the fixed point checks out
        // as a genuine solution.
        const AdaptedProcess dv =
            drift_process(data, res.solution.y, res.solution.parts, model, measure);
        const SolutionCheck check =
            verify_solution(res.solution, dv, data.xi, data.obstacle, model, measure);
        if (check.pass(std::max(1e-10, 100.0 * tol))) {
            out.solution = std::move(res.solution);
            out.trace = std::move(res.trace);
            out.route = SolveRoute::picard_forced;
            return out;
        }
    } catch (const ConvergenceError&) {
        // fall through to the staged construction
    }
    FullSolveResult staged = solve_full(data, model, measure, tol, max_iter);
    out.solution = std::move(staged.solution);
    out.stages = std::move(staged.stages);
    out.budget = staged.budget;
    out.route = SolveRoute::staged;
    return out;
}

}  // namespace rbsde
