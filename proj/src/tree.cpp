#include "rbsde/tree.hpp"

#include <cmath>
#include <string>

#include "rbsde/par.hpp"

namespace rbsde {

namespace {

constexpr double kMomentTol = 1e-12;

void check_branching(int branching) {
    if (branching != 2 && branching != 4)
        throw Error(ErrorKind::parameter, "branching must be 2 or 4, got " + std::to_string(branching));
}

}  // namespace

TreeModel::TreeModel(int depth, int branching, double dt, double sigma)
    : depth_(depth), branching_(branching), dt_(dt), sigma_(sigma) {
    check_branching(branching);
    base_prob_.assign(static_cast<std::size_t>(branching), 1.0 / branching);
    init();
}

TreeModel::TreeModel(int depth, int branching, double dt, double sigma,
                     const std::vector<double>& base_probabilities)
    : depth_(depth), branching_(branching), dt_(dt), sigma_(sigma), base_prob_(base_probabilities) {
    check_branching(branching);
    if (base_prob_.size() != static_cast<std::size_t>(branching))
        throw Error(ErrorKind::parameter, "base_probabilities size must equal branching");
    init();
}

void TreeModel::init() {
    if (depth_ < 1) throw Error(ErrorKind::parameter, "depth must be >= 1");
    if (!(dt_ > 0.0)) throw Error(ErrorKind::parameter, "dt must be positive");
    if (!(sigma_ > 0.0)) throw Error(ErrorKind::parameter, "sigma must be positive");

    const double step = sigma_ * std::sqrt(dt_);
    const double wstep = std::sqrt(dt_);
    dm_.resize(static_cast<std::size_t>(branching_));
    dwp_.resize(static_cast<std::size_t>(branching_));
    if (branching_ == 2) {
        dm_ = {step, -step};
        dwp_ = {0.0, 0.0};
    } else {
        // branch k encodes (e1, e2) = (+-1, +-1)
        dm_ = {step, step, -step, -step};
        dwp_ = {wstep, -wstep, wstep, -wstep};
    }

    // The per-node law must make M a martingale with bracket sigma^2 dt and,
    // in quaternary mode, keep the two coordinates orthogonal.
    double total = 0.0, m1 = 0.0, m2 = 0.0, w1 = 0.0, cross = 0.0;
    for (int k = 0; k < branching_; ++k) {
        const double p = base_prob_[static_cast<std::size_t>(k)];
        if (!(p > 0.0)) throw Error(ErrorKind::parameter, "branch probabilities must be strictly positive");
        total += p;
        m1 += p * dm_[static_cast<std::size_t>(k)];
        m2 += p * dm_[static_cast<std::size_t>(k)] * dm_[static_cast<std::size_t>(k)];
        w1 += p * dwp_[static_cast<std::size_t>(k)];
        cross += p * dm_[static_cast<std::size_t>(k)] * dwp_[static_cast<std::size_t>(k)];
    }
    if (std::abs(total - 1.0) > kMomentTol)
        throw Error(ErrorKind::parameter, "branch probabilities must sum to 1");
    if (std::abs(m1) > kMomentTol * step)
        throw Error(ErrorKind::parameter, "base probabilities do not make the reference increment centered");
    if (std::abs(m2 - dm_bracket()) > kMomentTol * dm_bracket())
        throw Error(ErrorKind::parameter, "base probabilities do not reproduce the bracket sigma^2 dt");
    if (branching_ == 4 && (std::abs(w1) > kMomentTol || std::abs(cross) > kMomentTol))
        throw Error(ErrorKind::parameter, "base probabilities break orthogonality of the two coordinates");
}

std::size_t TreeModel::nodes_at(int level) const {
    std::size_t n = 1;
    for (int t = 0; t < level; ++t) n *= static_cast<std::size_t>(branching_);
    return n;
}

std::size_t TreeModel::total_nodes() const {
    std::size_t total = 0;
    for (int t = 0; t <= depth_; ++t) total += nodes_at(t);
    return total;
}

NodeId TreeModel::child(NodeId v, int branch) const {
    return NodeId{v.level + 1, v.index * static_cast<std::size_t>(branching_) + static_cast<std::size_t>(branch)};
}

NodeId TreeModel::parent(NodeId v) const {
    return NodeId{v.level - 1, v.index / static_cast<std::size_t>(branching_)};
}

int TreeModel::branch_from_parent(NodeId v) const {
    return static_cast<int>(v.index % static_cast<std::size_t>(branching_));
}

std::vector<int> TreeModel::path_of(NodeId v) const {
    std::vector<int> digits(static_cast<std::size_t>(v.level));
    std::size_t idx = v.index;
    for (int t = v.level - 1; t >= 0; --t) {
        digits[static_cast<std::size_t>(t)] = static_cast<int>(idx % static_cast<std::size_t>(branching_));
        idx /= static_cast<std::size_t>(branching_);
    }
    return digits;
}

double TreeModel::m_at(NodeId v) const {
    double m = 0.0;
    for (int d : path_of(v)) m += dm_[static_cast<std::size_t>(d)];
    return m;
}

double TreeModel::w_at(NodeId v) const {
    double w = 0.0;
    for (int d : path_of(v)) w += dwp_[static_cast<std::size_t>(d)];
    return w;
}

AdaptedProcess::AdaptedProcess(const TreeModel& model, int last_level, double fill) {
    levels_.resize(static_cast<std::size_t>(last_level) + 1);
    for (int t = 0; t <= last_level; ++t)
        levels_[static_cast<std::size_t>(t)].assign(model.nodes_at(t), fill);
}

Measure Measure::base(const TreeModel& model) {
    Measure m;
    m.branching_ = model.branching();
    m.prob_.resize(static_cast<std::size_t>(model.depth()));
    m.density_.resize(static_cast<std::size_t>(model.depth()) + 1);
    for (int t = 0; t < model.depth(); ++t) {
        auto& row = m.prob_[static_cast<std::size_t>(t)];
        row.resize(model.nodes_at(t) * static_cast<std::size_t>(model.branching()));
        for (std::size_t i = 0; i < model.nodes_at(t); ++i)
            for (int k = 0; k < model.branching(); ++k)
                row[i * static_cast<std::size_t>(model.branching()) + static_cast<std::size_t>(k)] =
                    model.base_probabilities()[static_cast<std::size_t>(k)];
    }
    for (int t = 0; t <= model.depth(); ++t)
        m.density_[static_cast<std::size_t>(t)].assign(model.nodes_at(t), 1.0);
    return m;
}

MartingaleParts MartingaleParts::zeros(const TreeModel& model) {
    MartingaleParts parts;
    const int last = model.depth() - 1;
    parts.z = AdaptedProcess(model, last);
    parts.br_n = AdaptedProcess(model, last);
    parts.br_orth = AdaptedProcess(model, last);
    parts.br_zm = AdaptedProcess(model, last);
    parts.orth.resize(static_cast<std::size_t>(model.depth()));
    for (int t = 0; t <= last; ++t)
        parts.orth[static_cast<std::size_t>(t)].assign(
            model.nodes_at(t) * static_cast<std::size_t>(model.branching()), 0.0);
    return parts;
}

double MartingaleParts::increment(const TreeModel& model, NodeId v, int branch, double compensator) const {
    return z.at(v) * (model.dm(branch) - compensator) +
           orth[static_cast<std::size_t>(v.level)][v.index * static_cast<std::size_t>(model.branching()) +
                                                   static_cast<std::size_t>(branch)];
}

double ref_compensator(const TreeModel& model, const Measure& measure, NodeId v) {
    double acc = 0.0;
    for (int k = 0; k < model.branching(); ++k) acc += measure.prob(v, k) * model.dm(k);
    return acc;
}

TreeModel build_tree(int depth, int branching, double dt, double sigma) {
    return TreeModel(depth, branching, dt, sigma);
}

double conditional_expectation(std::span<const double> children, NodeId node, const Measure& measure,
                               const TreeModel& model) {
    if (node.level >= model.depth())
        throw Error(ErrorKind::domain, "conditional_expectation: node is terminal");
    double acc = 0.0;
    for (int k = 0; k < model.branching(); ++k)
        acc += measure.prob(node, k) * children[static_cast<std::size_t>(k)];
    return acc;
}

DecompositionSlice martingale_decompose(std::span<const double> next_values, NodeId node,
                                        const TreeModel& model, const Measure& measure) {
    if (node.level >= model.depth())
        throw Error(ErrorKind::domain, "martingale_decompose: node is terminal");
    const int b = model.branching();
    DecompositionSlice s;

    double mean = 0.0, dm_mean = 0.0;
    for (int k = 0; k < b; ++k) {
        const double q = measure.prob(node, k);
        mean += q * next_values[static_cast<std::size_t>(k)];
        dm_mean += q * model.dm(k);
    }
    s.mean = mean;

    // Compensated reference increment: under the base measure dm_mean = 0,
    // under a Girsanov transform it equals the <L,M> compensator.
    double var = 0.0, cov = 0.0;
    for (int k = 0; k < b; ++k) {
        const double q = measure.prob(node, k);
        const double dmt = model.dm(k) - dm_mean;
        const double x = next_values[static_cast<std::size_t>(k)] - mean;
        var += q * dmt * dmt;
        cov += q * x * dmt;
    }
    s.ref_var = var;
    s.z = cov / var;

    double br_orth = 0.0, br_n = 0.0;
    for (int k = 0; k < b; ++k) {
        const double q = measure.prob(node, k);
        const double dmt = model.dm(k) - dm_mean;
        const double x = next_values[static_cast<std::size_t>(k)] - mean;
        const double o = x - s.z * dmt;
        s.orth[k] = o;
        br_orth += q * o * o;
        br_n += q * x * x;
    }
    s.br_orth = br_orth;
    s.br_n = br_n;
    s.br_zm = s.z * var;
    return s;
}

double predictable_bracket(std::span<const double> inc_a, std::span<const double> inc_b, NodeId node,
                           const Measure& measure, const TreeModel& model) {
    if (node.level >= model.depth())
        throw Error(ErrorKind::domain, "predictable_bracket: node is terminal");
    double mean_a = 0.0, mean_b = 0.0, scale = 0.0, acc = 0.0;
    for (int k = 0; k < model.branching(); ++k) {
        const double q = measure.prob(node, k);
        mean_a += q * inc_a[static_cast<std::size_t>(k)];
        mean_b += q * inc_b[static_cast<std::size_t>(k)];
        scale = std::max(scale, std::abs(inc_a[static_cast<std::size_t>(k)]) +
                                    std::abs(inc_b[static_cast<std::size_t>(k)]));
        acc += q * inc_a[static_cast<std::size_t>(k)] * inc_b[static_cast<std::size_t>(k)];
    }
    const double tol = 1e-12 * std::max(1.0, scale);
    if (std::abs(mean_a) > tol || std::abs(mean_b) > tol)
        throw Error(ErrorKind::contract, "predictable_bracket: increments have nonzero conditional mean");
    return acc;
}

Measure girsanov(const TreeModel& model, const Measure& p,
                 const std::vector<std::vector<double>>& kernel_increments) {
    Measure q;
    q.branching_ = model.branching();
    q.prob_.resize(static_cast<std::size_t>(model.depth()));
    q.density_.resize(static_cast<std::size_t>(model.depth()) + 1);
    q.density_[0].assign(1, 1.0);

    const std::size_t b = static_cast<std::size_t>(model.branching());
    for (int t = 0; t < model.depth(); ++t) {
        const std::size_t n = model.nodes_at(t);
        const auto& dl = kernel_increments[static_cast<std::size_t>(t)];
        auto& row = q.prob_[static_cast<std::size_t>(t)];
        row.resize(n * b);
        auto& dens_next = q.density_[static_cast<std::size_t>(t) + 1];
        dens_next.resize(n * b);
        const auto& dens = q.density_[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < n; ++i) {
            const NodeId v{t, i};
            double total = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double factor = 1.0 + dl[i * b + k];
                if (!(factor > 0.0))
                    throw Error(ErrorKind::gate,
                                "girsanov: kernel too large for step size (1 + dL <= 0 on a branch); "
                                "reduce dt");
                const double pk = p.prob(v, static_cast<int>(k));
                row[i * b + k] = pk * factor;
                dens_next[i * b + k] = dens[i] * factor;
                total += pk * factor;
            }
            // Zero conditional mean of the kernel makes total == 1; normalize
            // away the rounding residue so downstream expectations stay exact.
            for (std::size_t k = 0; k < b; ++k) row[i * b + k] /= total;
        }
    }
    return q;
}

AdaptedProcess integrating_factor(const AdaptedProcess& beta, const TreeModel& model) {
    AdaptedProcess out(model, model.depth());
    out.level(0)[0] = 1.0;
    const std::size_t b = static_cast<std::size_t>(model.branching());
    for (int t = 0; t < model.depth(); ++t) {
        const auto& cur = out.level(t);
        auto& next = out.level(t + 1);
        const auto& bt = beta.level(t);
        par::for_each(model.nodes_at(t), [&](std::size_t i) {
            const double step = cur[i] * std::exp(bt[i] * model.dt());
            for (std::size_t k = 0; k < b; ++k) next[i * b + k] = step;
        });
    }
    return out;
}

}  // namespace rbsde
