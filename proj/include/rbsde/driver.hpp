#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rbsde/expr.hpp"
#include "rbsde/growth.hpp"
#include "rbsde/tree.hpp"

namespace rbsde {

// A node-bound driver f(t, y, zs). The third argument is Z*sigma: only that
// product enters the drift, so all evaluation goes through it.
class DriverFunc {
  public:
    virtual ~DriverFunc() = default;
    virtual double operator()(NodeId v, double t, double y, double zs) const = 0;
};

using DriverPtr = std::shared_ptr<const DriverFunc>;

// Driver defined by a parsed expression in (t, y, z) plus named coefficient
// processes bound per node.
class ExprDriver : public DriverFunc {
  public:
    ExprDriver(ExprPtr expr, std::map<std::string, AdaptedProcess> coefficients);

    double operator()(NodeId v, double t, double y, double zs) const override;
    const ExprPtr& expr() const { return expr_; }

  private:
    ExprPtr expr_;
    std::map<std::string, AdaptedProcess> coefficients_;
};

enum class Family { lipschitz_y, superlinear_y, monotone_y };

// The data (f, nu, g) with declared regularity constants. nu is supplied as
// an integrand against the orthogonal coordinate (quaternary mode), which
// makes <nu, M> = 0 by construction.
struct DriverSpec {
    DriverPtr f;
    AdaptedProcess g;              // non-terminal nodes
    AdaptedProcess nu_integrand;   // non-terminal nodes, 0 in binary mode
    GrowthFn lambda = GrowthFn::constant(1.0);
    GrowthFn rho = GrowthFn::constant(1.0);
    GrowthFn rho_prime = GrowthFn::constant(1.0);
    AdaptedProcess r;              // non-terminal nodes, default 1
    AdaptedProcess h;              // non-terminal nodes, default 1
    Family family = Family::lipschitz_y;
    std::optional<GrowthFn> phi;   // superlinear growth bound
    double mu = 0.0;               // monotonicity constant

    // Per-branch increments of nu at a node.
    double nu_increment(const TreeModel& model, NodeId v, int branch) const {
        return nu_integrand.at(v) * model.dwp(branch);
    }
};

struct RBSDEData {
    DriverSpec driver;
    std::vector<double> xi;   // per leaf
    AdaptedProcess obstacle;  // all levels; obstacle.level(depth) <= xi leaf-wise
};

// alpha = f(., 0, 0) per non-terminal node.
AdaptedProcess residual_drift(const DriverSpec& driver, const TreeModel& model);

// f(t, y, z*sigma) dt + <nu, dN-perp> + g d<N-perp> at one node, with the
// brackets supplied as predictable values.
double drift_increment(const RBSDEData& data, const TreeModel& model, NodeId node, double y, double z,
                       double dnperp_bracket, double nu_cross_bracket);

// Central finite differences of the driver; step is the probe size.
double driver_fy(const DriverFunc& f, NodeId v, double t, double y, double zs, double step = 1e-5);
double driver_fz(const DriverFunc& f, NodeId v, double t, double y, double zs, double step = 1e-5);

struct SampleGrid {
    std::vector<double> ys{-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
    std::vector<double> zs{-3.0, -1.0, -0.25, 0.0, 0.25, 1.0, 3.0};
    std::size_t max_nodes = 64;  // nodes probed, spread over the tree
};

struct ValidationSample {
    NodeId node{};
    double t = 0.0;
    double y = 0.0;
    double y_prime = 0.0;  // second point for pairwise checks
    double z = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string check;
};

// Sampling-based and explicitly non-exhaustive: solver gates use declared
// constants, these reports only cross-check them.
struct ValidationReport {
    bool pass = true;
    std::size_t samples = 0;
    ValidationSample worst;  // largest lhs - rhs, meaningful when !pass
};

// |f(t,y,z)| <= lambda(y) (h^2 + |z|^2) on the grid.
ValidationReport validate_qg(const RBSDEData& data, const TreeModel& model,
                             const SampleGrid& grid = {});

// Finite-difference first and second derivatives against the declared
// bounds rho r^2, rho'(h+|z|), lambda r^2, lambda r, lambda. Estimates are
// cross-checked at steps 1e-5 and 1e-6.
ValidationReport validate_der(const RBSDEData& data, const TreeModel& model,
                              const SampleGrid& grid = {});

// (y'-y)(f(y') - f(y)) <= mu r^2 |y'-y|^2 on sampled pairs.
ValidationReport validate_monotone(const RBSDEData& data, const TreeModel& model,
                                   const SampleGrid& grid = {});

// f recentered around a solution point: f(., y + Y1, z + Z1 sigma) - f(., Y1, Z1 sigma).
// Vanishes at the origin; lambda doubles.
DriverSpec recenter(const DriverSpec& driver, const AdaptedProcess& y1, const AdaptedProcess& z1_sigma,
                    const TreeModel& model);

// Shift the obstacle below zero: U = max L+, f -> f(., y + U, z), xi -> xi - U,
// L -> L - U. Returns the shift so solutions can be translated back.
struct TranslatedData {
    RBSDEData data;
    double shift = 0.0;
};
TranslatedData translate_obstacle(const RBSDEData& data, const TreeModel& model);

// f = beta y + gamma z + remainder, with beta = f_y(.,0,0), gamma = f_z(.,0,0)
// estimated by central differences and checked at two steps.
struct Linearization {
    AdaptedProcess beta;
    AdaptedProcess gamma;
    DriverPtr remainder;
};
Linearization linearize(const DriverSpec& driver, const TreeModel& model);

// Driver with a multiple of a node process added: f + coeff * p. Used for
// the residual-drift splits f - alpha + alpha_bar and for stability shifts.
DriverPtr shift_driver(DriverPtr f, const AdaptedProcess& p, double coeff);

}  // namespace rbsde
