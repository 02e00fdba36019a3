#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rbsde/errors.hpp"

namespace rbsde {

// Node address on a non-recombining tree: (level, index). The index encodes
// the branch path from the root in base `branching`, most significant digit
// first, so conditional laws are exact and no paths are merged.
struct NodeId {
    int level = 0;
    std::size_t index = 0;

    bool operator==(const NodeId&) const = default;
};

// Finite-filtration model. One step of the clock is dt, the reference
// martingale moves by +-sigma*sqrt(dt) on the first coordinate, and in
// quaternary mode an independent second coordinate moves by +-sqrt(dt).
// Immutable after construction.
class TreeModel {
  public:
    TreeModel(int depth, int branching, double dt, double sigma);
    TreeModel(int depth, int branching, double dt, double sigma,
              const std::vector<double>& base_probabilities);

    int depth() const { return depth_; }
    int branching() const { return branching_; }
    double dt() const { return dt_; }
    double sigma() const { return sigma_; }
    double horizon() const { return depth_ * dt_; }
    double time_of(int level) const { return level * dt_; }

    std::size_t nodes_at(int level) const;
    std::size_t total_nodes() const;

    // Per-branch increments, identical at every node.
    double dm(int branch) const { return dm_[branch]; }
    double dwp(int branch) const { return dwp_[branch]; }
    const std::vector<double>& base_probabilities() const { return base_prob_; }

    // Predictable bracket of the reference martingale over one step.
    double dm_bracket() const { return sigma_ * sigma_ * dt_; }

    NodeId child(NodeId v, int branch) const;
    NodeId parent(NodeId v) const;
    int branch_from_parent(NodeId v) const;
    bool is_terminal(NodeId v) const { return v.level == depth_; }

    // Path digits from the root, most significant first.
    std::vector<int> path_of(NodeId v) const;

    // Coordinates of the reference processes at a node: m = sum of dM along
    // the path, w = sum of dW-perp along the path (0 in binary mode).
    double m_at(NodeId v) const;
    double w_at(NodeId v) const;

  private:
    void init();

    int depth_;
    int branching_;
    double dt_;
    double sigma_;
    std::vector<double> base_prob_;
    std::vector<double> dm_;
    std::vector<double> dwp_;
};

// One value per node up to a horizon; the universal carrier for Y, L, K,
// drift increments, coefficient processes and brackets. A process with
// last_level == depth covers the whole tree, one with depth-1 covers the
// non-terminal nodes (predictable integrands).
class AdaptedProcess {
  public:
    AdaptedProcess() = default;
    AdaptedProcess(const TreeModel& model, int last_level, double fill = 0.0);

    int last_level() const { return static_cast<int>(levels_.size()) - 1; }
    std::vector<double>& level(int t) { return levels_[static_cast<std::size_t>(t)]; }
    const std::vector<double>& level(int t) const { return levels_[static_cast<std::size_t>(t)]; }
    double& at(NodeId v) { return levels_[static_cast<std::size_t>(v.level)][v.index]; }
    double at(NodeId v) const { return levels_[static_cast<std::size_t>(v.level)][v.index]; }

    bool empty() const { return levels_.empty(); }

  private:
    std::vector<std::vector<double>> levels_;
};

// Branch-probability assignment per node; P or a Girsanov transform of it.
// Stores per-node-per-branch probabilities and the running Doleans density
// relative to the base measure.
class Measure {
  public:
    Measure() = default;

    // Base measure from the model's per-branch probabilities.
    static Measure base(const TreeModel& model);

    double prob(NodeId v, int branch) const {
        return prob_[static_cast<std::size_t>(v.level)][v.index * static_cast<std::size_t>(branching_) +
                                                        static_cast<std::size_t>(branch)];
    }
    double density(NodeId v) const { return density_[static_cast<std::size_t>(v.level)][v.index]; }
    int branching() const { return branching_; }

    friend Measure girsanov(const TreeModel& model, const Measure& p,
                            const std::vector<std::vector<double>>& kernel_increments);

  private:
    int branching_ = 0;
    // prob_[t][i*b + k] for non-terminal levels t
    std::vector<std::vector<double>> prob_;
    // density_[t][i] for all levels, root = 1
    std::vector<std::vector<double>> density_;
};

// Slice of the martingale decomposition at one node: integrand against the
// (compensated) reference martingale, per-branch orthogonal increments and
// the three predictable brackets.
struct DecompositionSlice {
    double mean = 0.0;       // E[X | node]
    double z = 0.0;          // integrand on the reference martingale
    double ref_var = 0.0;    // E[(dM - E dM)^2 | node] under the measure
    double br_n = 0.0;       // bracket of the full increment
    double br_orth = 0.0;    // bracket of the orthogonal part
    double br_zm = 0.0;      // cross bracket with the reference martingale
    double orth[4] = {0, 0, 0, 0};  // per-branch orthogonal increments
};

// Martingale part of a solution: N = int Z dM + N-perp, with the per-node
// brackets cached. Orthogonal increments are stored per node per branch and
// vanish identically in binary mode.
struct MartingaleParts {
    AdaptedProcess z;           // levels 0..depth-1
    std::vector<std::vector<double>> orth;  // orth[t][i*b + k], levels 0..depth-1
    AdaptedProcess br_n;        // per-node bracket of N
    AdaptedProcess br_orth;     // per-node bracket of N-perp
    AdaptedProcess br_zm;       // per-node cross bracket <M~, N>

    static MartingaleParts zeros(const TreeModel& model);

    // Per-branch increment z * (dM - compensator) + orth. The compensator is
    // 0 under the base measure and E_Q[dM | v] under a Girsanov transform.
    double increment(const TreeModel& model, NodeId v, int branch, double compensator = 0.0) const;
};

// E[dM | v] under the given measure; the <L,M> compensator of a transformed
// measure, 0 under the base one.
double ref_compensator(const TreeModel& model, const Measure& measure, NodeId v);

TreeModel build_tree(int depth, int branching, double dt, double sigma);

// Probability-weighted average of the child values of a non-terminal node.
double conditional_expectation(std::span<const double> children, NodeId node, const Measure& measure,
                               const TreeModel& model);

// Kunita-Watanabe projection of the centered child family onto the
// compensated reference increment. Under the base measure this is
// Z = E[X dM]/(sigma^2 dt) and the orthogonal rest.
DecompositionSlice martingale_decompose(std::span<const double> next_values, NodeId node,
                                        const TreeModel& model, const Measure& measure);

// E[dA dB | node] for two zero-conditional-mean branch families.
double predictable_bracket(std::span<const double> inc_a, std::span<const double> inc_b, NodeId node,
                           const Measure& measure, const TreeModel& model);

// Discrete change of measure q_k = p_k (1 + dL_k); requires 1 + dL_k > 0 on
// every branch. kernel_increments[t][i*b+k] are the increments of the
// kernel martingale L.
Measure girsanov(const TreeModel& model, const Measure& p,
                 const std::vector<std::vector<double>>& kernel_increments);

// B = exp(sum of beta dt along the path), B(root) = 1.
AdaptedProcess integrating_factor(const AdaptedProcess& beta, const TreeModel& model);

}  // namespace rbsde
