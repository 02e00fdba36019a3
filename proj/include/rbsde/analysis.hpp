#pragma once

#include "rbsde/solver.hpp"

namespace rbsde {

struct BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    double slack_ratio = 0.0;  // lhs / rhs
};

// ||K||_A_BMO + ||N||^2_BMO against the exponential-transform bound
// e^{8b||Y||}/(2b) [1 + 4b (Lambda ||h||^2 + ||nu||^2)], b = Lambda + 1 + ||g||.
BoundReport apriori_bmo_bound(const Solution& sol, const RBSDEData& data, const TreeModel& model,
                              const Measure& measure);

struct ComparisonReport {
    bool pass = false;
    double worst_violation = 0.0;  // max over nodes of Y' - Y (or dK - dK')
    NodeId worst_node{};
    double kernel_sup = 0.0;       // largest per-branch linearization kernel increment
    Solution sol;                  // the dominating solution
    Solution sol_prime;
};

// Ordering of the data (f' <= f, g' <= g, xi' <= xi, L' <= L), sampled for f.
// Throws Error(data) when violated; callers distinguish bad inputs from
// theorem failures.
void validate_ordering(const RBSDEData& data, const RBSDEData& data_prime, const TreeModel& model,
                       const SampleGrid& grid = {});

// Solve both data sets and check Y' <= Y + tol node-wise. The step-size
// guard requires the per-branch increments of the linearization kernel
// F_z sigma^-1 dM + nu' to stay above -1, so the discrete analogue of the
// proof's measure change is well defined.
ComparisonReport check_comparison(const RBSDEData& data, const RBSDEData& data_prime,
                                  const TreeModel& model, const Measure& measure, double tol = 1e-9,
                                  double solver_tol = 1e-12, int max_iter = 400);

// dK <= dK' + tol node-wise for solutions with the same obstacle and Y' <= Y.
ComparisonReport check_special_comparison(const Solution& sol, const Solution& sol_prime,
                                          const RBSDEData& data, const RBSDEData& data_prime,
                                          const TreeModel& model, double tol = 1e-9);

struct StabilityDelta {
    double dxi_first = 0.0;
    double dalpha_first = 0.0;
    double dxi_second = 0.0;
    double dalpha_second = 0.0;
};

struct StabilityPairReport {
    bool gated = false;
    std::string skip_reason;
    double delta_d = 0.0;          // || xi'' - xi' || + || alpha'' - alpha' ||
    double bound = 0.0;            // 2^5 e^{2||beta_bar||} delta_d
    double dy_sinf = 0.0;
    double dn_bmo_q = 0.0;         // || Delta N~ ||_BMO(Q)
    double dn_bmo_p = 0.0;
    double ratio_p_q = 0.0;        // empirical stand-in for the Kazamaki constant
    bool pass_sinf = false;
    bool pass_bmo = false;
};

struct StabilityReport {
    double beta_bar_linf1 = 0.0;
    double gate = 0.0;             // epsilon0(beta_bar, 2 lambda, r) / sqrt(2)
    std::vector<StabilityPairReport> pairs;
    bool pass = true;              // over the gated pairs
};

// Local Lipschitz estimate around the solution of `base_data`: for each
// delta pair, solve the two perturbed problems and compare against the
// 2^5 e^{2||beta_bar||} bound in S-inf and in BMO(Q).
StabilityReport stability_experiment(const RBSDEData& base_data,
                                     const std::vector<StabilityDelta>& deltas,
                                     const TreeModel& model, const Measure& measure,
                                     double tol = 1e-12, int max_iter = 400);

// f_y and f_z along a solution, by central differences.
AdaptedProcess beta_at_solution(const DriverSpec& driver, const Solution& sol, const TreeModel& model);
AdaptedProcess gamma_at_solution(const DriverSpec& driver, const Solution& sol, const TreeModel& model);

// BMO norm of nu built from its integrand.
double nu_bmo_norm_sq(const DriverSpec& driver, const TreeModel& model, const Measure& measure);

}  // namespace rbsde
