#pragma once

#include <string>

#include "rbsde/driver.hpp"
#include "rbsde/norms.hpp"
#include "rbsde/tree.hpp"

namespace rbsde {

enum class MeasureTag { base, transformed };

// The triple (Y, N, K): value process, martingale part split on the
// reference martingale, and the cumulative reflection force. K is stored
// cumulatively with K(root) = 0; its increment at a node is charged at the
// node where reflection occurs, which makes the Skorohod product vanish by
// construction.
struct Solution {
    AdaptedProcess y;
    MartingaleParts parts;
    AdaptedProcess k;
    MeasureTag measure_tag = MeasureTag::base;

    double dk(const TreeModel& model, NodeId v) const {
        return k.level(v.level + 1)[v.index * static_cast<std::size_t>(model.branching())] - k.at(v);
    }
};

// Backward recursion for the reflected problem with a fixed drift process:
// Ytilde = E[Y_next | v] + dV(v), Y = max(Ytilde, L), dK = Y - Ytilde, and
// the martingale decomposition of the child values. Nodes within a time
// slice are processed by the parallel kernels.
Solution solve_underlying(const AdaptedProcess& dv, const std::vector<double>& xi,
                          const AdaptedProcess& obstacle, const TreeModel& model,
                          const Measure& measure);

// Exact essential supremum over stopping rules by literal enumeration of the
// rules of the subtree of each node. Exponential: refuses beyond depth 4 or
// the rule-count cap.
struct OracleOptions {
    int max_depth = 4;
    double max_rules = 1e7;
};
AdaptedProcess snell_oracle(const AdaptedProcess& dv, const std::vector<double>& xi,
                            const AdaptedProcess& obstacle, const TreeModel& model,
                            const Measure& measure, const OracleOptions& options = {});

// Number of stopping rules on a subtree with `levels` remaining steps.
double stopping_rule_count(int levels, int branching);

struct SkorohodReport {
    double max_product = 0.0;     // max over nodes of dK (Y - L)
    double min_increment = 0.0;   // most negative dK seen
    NodeId worst_node{};
    bool pass = true;
};
SkorohodReport check_skorohod(const Solution& sol, const AdaptedProcess& obstacle,
                              const TreeModel& model, double tol = 1e-10);

// Residuals of all Solution invariants for a solve with fixed drift.
struct SolutionCheck {
    double max_dynamics_residual = 0.0;
    double max_barrier_violation = 0.0;   // max of L - Y
    double max_terminal_error = 0.0;      // max |Y_T - xi|
    double max_skorohod_product = 0.0;
    double min_dk = 0.0;
    bool pass(double tol = 1e-10) const {
        return max_dynamics_residual <= tol && max_barrier_violation <= tol &&
               max_terminal_error <= tol && max_skorohod_product <= tol && min_dk >= -tol;
    }
};
SolutionCheck verify_solution(const Solution& sol, const AdaptedProcess& dv,
                              const std::vector<double>& xi, const AdaptedProcess& obstacle,
                              const TreeModel& model, const Measure& measure);

}  // namespace rbsde
