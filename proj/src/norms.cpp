#include "rbsde/norms.hpp"

#include <cmath>

#include "rbsde/par.hpp"
#include "rbsde/snell.hpp"

namespace rbsde {

namespace {

// Backward sweep R(v) = inc(v) + E[R(children) | v], R(leaf) = 0. The max
// over all nodes of R is the corresponding BMO-style norm. Parallel within
// each time slice; the final max scan is serial so results do not depend on
// the thread count.
AdaptedProcess backward_accumulate(const AdaptedProcess& inc, const TreeModel& model,
                                   const Measure& measure) {
    AdaptedProcess r(model, model.depth());
    const std::size_t b = static_cast<std::size_t>(model.branching());
    for (int t = model.depth() - 1; t >= 0; --t) {
        const auto& next = r.level(t + 1);
        auto& cur = r.level(t);
        const auto& inct = inc.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) {
            const NodeId v{t, i};
            double acc = 0.0;
            for (std::size_t k = 0; k < b; ++k)
                acc += measure.prob(v, static_cast<int>(k)) * next[i * b + k];
            cur[i] = inct[i] + acc;
        });
    }
    return r;
}

double max_over_nodes(const AdaptedProcess& r, NodeId* argmax) {
    double best = 0.0;
    NodeId where{};
    bool first = true;
    for (int t = 0; t <= r.last_level(); ++t) {
        const auto& row = r.level(t);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (first || row[i] > best) {
                best = row[i];
                where = NodeId{t, i};
                first = false;
            }
        }
    }
    if (argmax) *argmax = where;
    return best;
}

}  // namespace

double sup_norm(const AdaptedProcess& y, NodeId* argmax) {
    double best = 0.0;
    NodeId where{};
    for (int t = 0; t <= y.last_level(); ++t) {
        const auto& row = y.level(t);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (std::abs(row[i]) > best) {
                best = std::abs(row[i]);
                where = NodeId{t, i};
            }
        }
    }
    if (argmax) *argmax = where;
    return best;
}

AdaptedProcess remaining_bracket(const AdaptedProcess& per_node_increment, const TreeModel& model,
                                 const Measure& measure) {
    return backward_accumulate(per_node_increment, model, measure);
}

double bmo_norm_sq(const MartingaleParts& parts, const TreeModel& model, const Measure& measure,
                   NodeId* argmax) {
    AdaptedProcess r = backward_accumulate(parts.br_n, model, measure);
    return max_over_nodes(r, argmax);
}

double l2bmo_norm_sq(const AdaptedProcess& h, const TreeModel& model, const Measure& measure,
                     NodeId* argmax) {
    AdaptedProcess inc(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const auto& src = h.level(t);
        auto& dst = inc.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) { dst[i] = src[i] * src[i] * model.dt(); });
    }
    AdaptedProcess r = backward_accumulate(inc, model, measure);
    return max_over_nodes(r, argmax);
}

LinfNorms linf_norms(const AdaptedProcess& x, const TreeModel& model) {
    // Forward accumulation of the path sums; the max over leaves is the max
    // over whole paths since both integrands are nonnegative.
    const std::size_t b = static_cast<std::size_t>(model.branching());
    std::vector<double> abs_sum(1, 0.0), sq_sum(1, 0.0);
    for (int t = 0; t < model.depth(); ++t) {
        const std::size_t n = model.nodes_at(t);
        std::vector<double> abs_next(n * b), sq_next(n * b);
        const auto& xt = x.level(t);
        par::for_each(n, [&](std::size_t i) {
            const double a = abs_sum[i] + std::abs(xt[i]) * model.dt();
            const double s = sq_sum[i] + xt[i] * xt[i] * model.dt();
            for (std::size_t k = 0; k < b; ++k) {
                abs_next[i * b + k] = a;
                sq_next[i * b + k] = s;
            }
        });
        abs_sum.swap(abs_next);
        sq_sum.swap(sq_next);
    }
    LinfNorms out;
    for (double v : abs_sum) out.linf1 = std::max(out.linf1, v);
    for (double v : sq_sum) out.linf2_sq = std::max(out.linf2_sq, v);
    return out;
}

double k_abmo_norm(const AdaptedProcess& k, const TreeModel& model, const Measure& measure,
                   NodeId* argmax) {
    if (std::abs(k.level(0)[0]) > 0.0)
        throw Error(ErrorKind::contract, "k_abmo_norm: K must start from 0 at the root");
    // Per-node increments from the cumulative process; K is predictable so
    // all children of a node share the same increment.
    AdaptedProcess inc(model, model.depth() - 1);
    const std::size_t b = static_cast<std::size_t>(model.branching());
    for (int t = 0; t < model.depth(); ++t) {
        const auto& cur = k.level(t);
        const auto& next = k.level(t + 1);
        auto& dst = inc.level(t);
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const double dk = next[i * b] - cur[i];
            if (dk < -1e-12 * std::max(1.0, std::abs(cur[i])))
                throw Error(ErrorKind::contract, "k_abmo_norm: K decreases along a path");
            dst[i] = dk;
        }
    }
    AdaptedProcess r = backward_accumulate(inc, model, measure);
    return max_over_nodes(r, argmax);
}

double bmo_norm_sq_of_difference(const MartingaleParts& a, const MartingaleParts& b,
                                 const TreeModel& model, const Measure& measure) {
    const std::size_t br = static_cast<std::size_t>(model.branching());
    AdaptedProcess inc(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const auto& za = a.z.level(t);
        const auto& zb = b.z.level(t);
        const auto& oa = a.orth[static_cast<std::size_t>(t)];
        const auto& ob = b.orth[static_cast<std::size_t>(t)];
        auto& dst = inc.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) {
            const NodeId v{t, i};
            const double comp = ref_compensator(model, measure, v);
            double acc = 0.0;
            for (std::size_t k = 0; k < br; ++k) {
                const double d = (za[i] - zb[i]) * (model.dm(static_cast<int>(k)) - comp) +
                                 oa[i * br + k] - ob[i * br + k];
                acc += measure.prob(v, static_cast<int>(k)) * d * d;
            }
            dst[i] = acc;
        });
    }
    AdaptedProcess r = backward_accumulate(inc, model, measure);
    return max_over_nodes(r, nullptr);
}

NormReport solution_norms(const Solution& sol, const TreeModel& model, const Measure& measure,
                          const AdaptedProcess* r) {
    NormReport report;
    report.s_inf = sup_norm(sol.y, &report.argmax_s_inf);
    report.bmo_sq = bmo_norm_sq(sol.parts, model, measure, &report.argmax_bmo);
    report.k_abmo = k_abmo_norm(sol.k, model, measure, &report.argmax_k);
    report.solution_norm_sq = report.s_inf * report.s_inf + report.bmo_sq;
    if (r) {
        const LinfNorms ln = linf_norms(*r, model);
        report.linf1 = ln.linf1;
        report.linf2_sq = ln.linf2_sq;
    }
    return report;
}

double l1bmo_norm(const AdaptedProcess& dv, const TreeModel& model, const Measure& measure) {
    AdaptedProcess inc(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const auto& src = dv.level(t);
        auto& dst = inc.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) { dst[i] = std::abs(src[i]); });
    }
    AdaptedProcess r = backward_accumulate(inc, model, measure);
    return max_over_nodes(r, nullptr);
}

}  // namespace rbsde
