#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rbsde/driver.hpp"
#include "rbsde/snell.hpp"

namespace rbsde {

// Explicit smallness threshold and ball radius under which the Sol map is a
// contraction, with the data size and the uniform split count derived from
// them.
struct SmallnessBudget {
    double lambda = 0.0;       // locLip constant entering the gate
    double r_linf2_sq = 0.0;   // ||r||^2_{inf,2}
    double beta_linf1 = 0.0;   // ||beta||_{inf,1}
    double epsilon0 = 0.0;     // e^{-2 beta} / (2^10 lambda (r^2 + 2))
    double r0 = 0.0;           // 1 / (2^5 lambda_hat (r^2 + 2)), lambda_hat = e^beta lambda
    double data_size = 0.0;    // D = ||xi|| + ||f(.,0,0)||_{inf,1} + ||L+||
    int n_split = 1;           // ceil(D / epsilon0), at least 1
};

double epsilon0(double lambda, double r_linf2_sq, double beta_linf1 = 0.0);

SmallnessBudget make_budget(double lambda, double r_linf2_sq, double beta_linf1, double data_size);

// D for a data set: ||xi||_inf + ||alpha||_{inf,1} + ||L+||_inf.
double data_size(const RBSDEData& data, const TreeModel& model);

struct PicardTrace {
    struct Iterate {
        double y_sinf = 0.0;
        double n_bmo_sq = 0.0;
        double ds_norm = 0.0;  // ||S_k - S_{k-1}|| in the combined norm
    };
    std::vector<Iterate> iterates;
    std::vector<double> contraction_ratios;
    bool gate_passed = false;
    bool converged = false;
    int iterations = 0;
    double final_norm = 0.0;   // ||S|| of the returned solution
    double r0 = 0.0;           // ball radius from the budget, for auditing
};

class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, PicardTrace trace)
        : Error(ErrorKind::convergence, what), trace(std::move(trace)) {}
    PicardTrace trace;
};

// Drift process dV(y, n) over all non-terminal nodes for frozen (y, n).
AdaptedProcess drift_process(const RBSDEData& data, const AdaptedProcess& y,
                             const MartingaleParts& parts, const TreeModel& model,
                             const Measure& measure);

// One application of the Sol map: freeze the drift at (y, n) and solve the
// underlying reflected problem. Fixed points solve the RBSDE.
Solution sol_map(const AdaptedProcess& y, const MartingaleParts& parts, const RBSDEData& data,
                 const TreeModel& model, const Measure& measure);

struct PicardResult {
    Solution solution;
    PicardTrace trace;
};

// Iterate Sol from zero to a fixed point in the combined norm. The gate
// D <= epsilon0 guarantees contraction; with force the iteration runs
// anyway and reports what happened.
PicardResult picard_solve(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                          const SmallnessBudget& budget, double tol = 1e-10, int max_iter = 200,
                          bool force = false);

// Single-shot budget for a data set: lambda from the driver, beta from the
// linearization at the origin.
SmallnessBudget single_shot_budget(const RBSDEData& data, const TreeModel& model);

// Gauge pair removing the linear drift terms: discrete integrating factor
// against beta and Girsanov kernel gamma/sigma dM + nu. The factor uses the
// discrete compounding prod 1/(1 - beta dt), which transforms the tree
// dynamics exactly.
struct GaugeTransform {
    RBSDEData hat_data;
    AdaptedProcess factor;       // B at every node, root = 1
    AdaptedProcess factor_next;  // B at the children of each non-terminal node
    Measure q;
    AdaptedProcess beta;
    AdaptedProcess gamma;
    std::vector<std::vector<double>> kernel;  // Girsanov kernel increments
};

GaugeTransform transform_out(const RBSDEData& data, const TreeModel& model, const Measure& p);

Solution transform_back(const Solution& sol_hat, const GaugeTransform& gauge, const TreeModel& model,
                        const Measure& p);

// Solve the perturbation equation around a known solution: the increment
// S2 with K2 of finite variation such that base + S2 solves the data
// incremented by (xi_inc, alpha_inc) with the same obstacle.
struct PerturbationResult {
    Solution increment;
    Solution combined;
    PicardTrace trace;
};

PerturbationResult solve_perturbation(const Solution& base, const RBSDEData& base_data,
                                      const std::vector<double>& xi_inc,
                                      const AdaptedProcess& alpha_inc, const TreeModel& model,
                                      const Measure& measure, const SmallnessBudget& budget,
                                      double tol = 1e-10, int max_iter = 200);

struct StageRecord {
    int index = 0;
    double delta_d = 0.0;
    double epsilon0 = 0.0;
    int iterations = 0;
    double y_hat_sinf = 0.0;   // sup norm of the stage increment under the stage gauge
    double rho_max = 0.0;      // frozen growth-function value for the stage
};

struct FullSolveResult {
    Solution solution;
    SmallnessBudget budget;
    std::vector<StageRecord> stages;
    double obstacle_shift = 0.0;
    // A priori bound check for the monotone family: ||Y||^2 vs the formula.
    std::optional<std::pair<double, double>> monotone_bound;
};

// Translation to L <= 0 followed by the uniform split of (xi, alpha) into
// n_split pieces, each incorporated through a perturbation solve.
FullSolveResult solve_full(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                           double tol = 1e-10, int max_iter = 200, int n_override = 0);

// A priori sup bound ||Y|| <= F(||xi||, ||alpha||_{inf,1}); default is the
// monotone-case formula with the driver's mu.
using AprioriBound = std::function<double(double, double)>;

FullSolveResult solve_superlinear(const RBSDEData& data, const TreeModel& model,
                                  const Measure& measure, double tol = 1e-10, int max_iter = 200,
                                  const AprioriBound& bound = nullptr);

FullSolveResult solve_monotone(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                               double tol = 1e-10, int max_iter = 200);

// Gate-first strategy: gated Picard when D <= epsilon0, otherwise a forced
// Picard attempt validated by the solution invariants, with the staged
// splitting as fallback. The route actually taken is reported.
enum class SolveRoute { picard_gated, picard_forced, staged };

struct AutoSolveResult {
    Solution solution;
    SolveRoute route = SolveRoute::picard_gated;
    SmallnessBudget budget;
    std::optional<PicardTrace> trace;
    std::vector<StageRecord> stages;
};

AutoSolveResult solve_auto(const RBSDEData& data, const TreeModel& model, const Measure& measure,
                           double tol = 1e-10, int max_iter = 200);

Solution zero_solution(const TreeModel& model);

// Hard cap on staged solves; theoretically prescribed splits beyond this
// indicate the instance should be reformulated.
inline constexpr int kMaxStages = 200000;

}  // namespace rbsde
