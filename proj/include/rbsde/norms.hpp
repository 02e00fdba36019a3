#pragma once

#include "rbsde/tree.hpp"

namespace rbsde {

// Every norm the solver and the checkers use, with the node attaining each
// sup. On a finite tree the sup over stopping times of a conditional
// functional is attained node-wise, so all of these are exact maxima.
struct NormReport {
    double s_inf = 0.0;
    double bmo_sq = 0.0;
    double k_abmo = 0.0;
    double linf1 = 0.0;
    double linf2_sq = 0.0;
    double solution_norm_sq = 0.0;
    NodeId argmax_s_inf{};
    NodeId argmax_bmo{};
    NodeId argmax_k{};
};

// max over all nodes of |Y|.
double sup_norm(const AdaptedProcess& y, NodeId* argmax = nullptr);

struct Solution;  // snell.hpp

// Conditional remaining bracket E[<N>_T - <N>_t | v] at every node; the BMO
// norm squared is its maximum.
AdaptedProcess remaining_bracket(const AdaptedProcess& per_node_increment, const TreeModel& model,
                                 const Measure& measure);

double bmo_norm_sq(const MartingaleParts& parts, const TreeModel& model, const Measure& measure,
                   NodeId* argmax = nullptr);

// sup_t || E( int_t^T h^2 dC | F_t ) ||_inf, h given per non-terminal node.
double l2bmo_norm_sq(const AdaptedProcess& h, const TreeModel& model, const Measure& measure,
                     NodeId* argmax = nullptr);

// (max path sum of |x| dt, max path sum of x^2 dt) over whole paths.
struct LinfNorms {
    double linf1 = 0.0;
    double linf2_sq = 0.0;
};
LinfNorms linf_norms(const AdaptedProcess& x, const TreeModel& model);

// sup_t || E( K_T - K_t | F_t ) ||_inf for K cumulative, non-decreasing,
// K(root) = 0.
double k_abmo_norm(const AdaptedProcess& k, const TreeModel& model, const Measure& measure,
                   NodeId* argmax = nullptr);

// BMO norm squared of the difference of two martingale parts, from the
// per-branch increments (brackets are not linear, so this cannot be read
// off the cached ones).
double bmo_norm_sq_of_difference(const MartingaleParts& a, const MartingaleParts& b,
                                 const TreeModel& model, const Measure& measure);

// || E( int_t^T |dV| | F_t ) ||_inf for a per-node drift increment process.
double l1bmo_norm(const AdaptedProcess& dv, const TreeModel& model, const Measure& measure);

// All norms of a solution triple, plus the L-inf norms of the weight
// process r when supplied.
NormReport solution_norms(const Solution& sol, const TreeModel& model, const Measure& measure,
                          const AdaptedProcess* r = nullptr);

}  // namespace rbsde
