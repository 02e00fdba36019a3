#include "rbsde/driver.hpp"

#include <cmath>

namespace rbsde {

namespace {

// Node subset for sampling grids: stride so that at most max_nodes nodes per
// level are touched.
template <typename F>
void for_sample_nodes(const TreeModel& model, std::size_t max_nodes, F&& body) {
    for (int t = 0; t < model.depth(); ++t) {
        const std::size_t n = model.nodes_at(t);
        const std::size_t stride = n <= max_nodes ? 1 : n / max_nodes;
        for (std::size_t i = 0; i < n; i += stride) body(NodeId{t, i});
    }
}

class RecenteredDriver : public DriverFunc {
  public:
    RecenteredDriver(DriverPtr base, AdaptedProcess y1, AdaptedProcess z1s)
        : base_(std::move(base)), y1_(std::move(y1)), z1s_(std::move(z1s)) {}

    double operator()(NodeId v, double t, double y, double zs) const override {
        const double yc = y1_.at(v), zc = z1s_.at(v);
        return (*base_)(v, t, y + yc, zs + zc) - (*base_)(v, t, yc, zc);
    }

  private:
    DriverPtr base_;
    AdaptedProcess y1_;
    AdaptedProcess z1s_;
};

class TranslatedDriver : public DriverFunc {
  public:
    TranslatedDriver(DriverPtr base, double shift) : base_(std::move(base)), shift_(shift) {}

    double operator()(NodeId v, double t, double y, double zs) const override {
        return (*base_)(v, t, y + shift_, zs);
    }

  private:
    DriverPtr base_;
    double shift_;
};

class ShiftedDriver : public DriverFunc {
  public:
    ShiftedDriver(DriverPtr base, AdaptedProcess p, double coeff)
        : base_(std::move(base)), p_(std::move(p)), coeff_(coeff) {}

    double operator()(NodeId v, double t, double y, double zs) const override {
        return (*base_)(v, t, y, zs) + coeff_ * p_.at(v);
    }

  private:
    DriverPtr base_;
    AdaptedProcess p_;
    double coeff_;
};

class LinearRemainderDriver : public DriverFunc {
  public:
    LinearRemainderDriver(DriverPtr base, AdaptedProcess beta, AdaptedProcess gamma)
        : base_(std::move(base)), beta_(std::move(beta)), gamma_(std::move(gamma)) {}

    double operator()(NodeId v, double t, double y, double zs) const override {
        return (*base_)(v, t, y, zs) - beta_.at(v) * y - gamma_.at(v) * zs;
    }

  private:
    DriverPtr base_;
    AdaptedProcess beta_;
    AdaptedProcess gamma_;
};

}  // namespace

ExprDriver::ExprDriver(ExprPtr expr, std::map<std::string, AdaptedProcess> coefficients)
    : expr_(std::move(expr)), coefficients_(std::move(coefficients)) {
    for (const auto& name : free_identifiers(expr_)) {
        if (name == "t" || name == "y" || name == "z") continue;
        if (!coefficients_.count(name))
            throw Error(ErrorKind::data, "driver expression uses unbound name '" + name + "'");
    }
}

double ExprDriver::operator()(NodeId v, double t, double y, double zs) const {
    try {
        return eval_expr(expr_, [&](const std::string& name) -> double {
            if (name == "t") return t;
            if (name == "y") return y;
            if (name == "z") return zs;
            return coefficients_.at(name).at(v);
        });
    } catch (const Error& e) {
        throw Error(ErrorKind::data, std::string(e.what()) + " (driver at node level " +
                                         std::to_string(v.level) + ", index " + std::to_string(v.index) +
                                         ")");
    }
}

AdaptedProcess residual_drift(const DriverSpec& driver, const TreeModel& model) {
    AdaptedProcess alpha(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        auto& row = alpha.level(t);
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = (*driver.f)(NodeId{t, i}, model.time_of(t), 0.0, 0.0);
    }
    return alpha;
}

double drift_increment(const RBSDEData& data, const TreeModel& model, NodeId node, double y, double z,
                       double dnperp_bracket, double nu_cross_bracket) {
    const double f = (*data.driver.f)(node, model.time_of(node.level), y, z * model.sigma());
    return f * model.dt() + nu_cross_bracket + data.driver.g.at(node) * dnperp_bracket;
}

double driver_fy(const DriverFunc& f, NodeId v, double t, double y, double zs, double step) {
    return (f(v, t, y + step, zs) - f(v, t, y - step, zs)) / (2.0 * step);
}

double driver_fz(const DriverFunc& f, NodeId v, double t, double y, double zs, double step) {
    return (f(v, t, y, zs + step) - f(v, t, y, zs - step)) / (2.0 * step);
}

namespace {

void record(ValidationReport& report, NodeId v, double t, double y, double z, double lhs, double rhs,
            const char* check, double y_prime = 0.0) {
    ++report.samples;
    if (lhs <= rhs) return;
    if (report.pass || lhs - rhs > report.worst.lhs - report.worst.rhs)
        report.worst = ValidationSample{v, t, y, y_prime, z, lhs, rhs, check};
    report.pass = false;
}

}  // namespace

ValidationReport validate_qg(const RBSDEData& data, const TreeModel& model, const SampleGrid& grid) {
    ValidationReport report;
    const auto& d = data.driver;
    for_sample_nodes(model, grid.max_nodes, [&](NodeId v) {
        const double t = model.time_of(v.level);
        const double h = d.h.at(v);
        for (double y : grid.ys)
            for (double z : grid.zs) {
                const double lhs = std::abs((*d.f)(v, t, y, z));
                const double rhs = d.lambda(y) * (h * h + z * z);
                record(report, v, t, y, z, lhs, rhs, "qg");
            }
    });
    return report;
}

ValidationReport validate_der(const RBSDEData& data, const TreeModel& model, const SampleGrid& grid) {
    ValidationReport report;
    const auto& d = data.driver;
    const double s1 = 1e-5, s2 = 1e-6;
    // finite-difference estimates carry O(step^2) + cancellation noise;
    // declared bounds that are exactly attained must not trip on it
    const auto slack = [](double rhs) { return 1e-4 * (1.0 + std::abs(rhs)); };
    for_sample_nodes(model, grid.max_nodes, [&](NodeId v) {
        const double t = model.time_of(v.level);
        const double r2 = d.r.at(v) * d.r.at(v);
        const double h = d.h.at(v);
        for (double y : grid.ys)
            for (double z : grid.zs) {
                const auto cross_checked = [&](double a, double b, const char* what) {
                    // FD stability: the 1e-5 and 1e-6 estimates must agree.
                    if (std::abs(a - b) > 1e-3 * (1.0 + std::abs(a)))
                        throw Error(ErrorKind::data,
                                    std::string("validate_der: unstable finite-difference estimate for ") +
                                        what + "; use a smaller step or a smoother driver");
                    return a;
                };
                const double fy = cross_checked(driver_fy(*d.f, v, t, y, z, s1),
                                                driver_fy(*d.f, v, t, y, z, s2), "f_y");
                const double fz = cross_checked(driver_fz(*d.f, v, t, y, z, s1),
                                                driver_fz(*d.f, v, t, y, z, s2), "f_z");
                const double fy_rhs = d.rho(y) * r2;
                const double fz_rhs = d.rho_prime(y) * (h + std::abs(z));
                record(report, v, t, y, z, std::abs(fy), fy_rhs + slack(fy_rhs), "f_y");
                record(report, v, t, y, z, std::abs(fz), fz_rhs + slack(fz_rhs), "f_z");

                const auto f2 = [&](double yy, double zz) { return (*d.f)(v, t, yy, zz); };
                const double fyy =
                    (f2(y + s1, z) - 2.0 * f2(y, z) + f2(y - s1, z)) / (s1 * s1);
                const double fzz =
                    (f2(y, z + s1) - 2.0 * f2(y, z) + f2(y, z - s1)) / (s1 * s1);
                const double fyz = (f2(y + s1, z + s1) - f2(y + s1, z - s1) - f2(y - s1, z + s1) +
                                    f2(y - s1, z - s1)) /
                                   (4.0 * s1 * s1);
                const double fyy_rhs = d.lambda(y) * r2;
                const double fyz_rhs = d.lambda(y) * d.r.at(v);
                const double fzz_rhs = d.lambda(y);
                record(report, v, t, y, z, std::abs(fyy), fyy_rhs + slack(fyy_rhs), "f_yy");
                record(report, v, t, y, z, std::abs(fyz), fyz_rhs + slack(fyz_rhs), "f_yz");
                record(report, v, t, y, z, std::abs(fzz), fzz_rhs + slack(fzz_rhs), "f_zz");
            }
    });
    return report;
}

ValidationReport validate_monotone(const RBSDEData& data, const TreeModel& model,
                                   const SampleGrid& grid) {
    ValidationReport report;
    const auto& d = data.driver;
    for_sample_nodes(model, grid.max_nodes, [&](NodeId v) {
        const double t = model.time_of(v.level);
        const double r2 = d.r.at(v) * d.r.at(v);
        for (double y : grid.ys)
            for (double yp : grid.ys) {
                if (y == yp) continue;
                for (double z : grid.zs) {
                    const double lhs = (yp - y) * ((*d.f)(v, t, yp, z) - (*d.f)(v, t, y, z));
                    const double rhs = d.mu * r2 * (yp - y) * (yp - y) + 1e-12;
                    record(report, v, t, y, z, lhs, rhs, "monotone", yp);
                }
            }
    });
    return report;
}

DriverSpec recenter(const DriverSpec& driver, const AdaptedProcess& y1, const AdaptedProcess& z1_sigma,
                    const TreeModel& model) {
    (void)model;
    DriverSpec out = driver;
    out.f = std::make_shared<RecenteredDriver>(driver.f, y1, z1_sigma);
    out.lambda = driver.lambda.scaled(2.0);
    return out;
}

TranslatedData translate_obstacle(const RBSDEData& data, const TreeModel& model) {
    double shift = 0.0;
    for (int t = 0; t <= model.depth(); ++t)
        for (double l : data.obstacle.level(t)) shift = std::max(shift, l);
    if (shift == 0.0) return TranslatedData{data, 0.0};

    TranslatedData out;
    out.shift = shift;
    out.data = data;
    out.data.driver.f = std::make_shared<TranslatedDriver>(data.driver.f, shift);
    for (double& x : out.data.xi) x -= shift;
    for (int t = 0; t <= model.depth(); ++t)
        for (double& l : out.data.obstacle.level(t)) l -= shift;
    return out;
}

Linearization linearize(const DriverSpec& driver, const TreeModel& model) {
    Linearization lin;
    lin.beta = AdaptedProcess(model, model.depth() - 1);
    lin.gamma = AdaptedProcess(model, model.depth() - 1);
    for (int t = 0; t < model.depth(); ++t) {
        const double time = model.time_of(t);
        auto& brow = lin.beta.level(t);
        auto& grow_ = lin.gamma.level(t);
        for (std::size_t i = 0; i < brow.size(); ++i) {
            const NodeId v{t, i};
            const double b1 = driver_fy(*driver.f, v, time, 0.0, 0.0, 1e-5);
            const double b2 = driver_fy(*driver.f, v, time, 0.0, 0.0, 1e-6);
            const double g1 = driver_fz(*driver.f, v, time, 0.0, 0.0, 1e-5);
            const double g2 = driver_fz(*driver.f, v, time, 0.0, 0.0, 1e-6);
            if (std::abs(b1 - b2) > 1e-4 * (1.0 + std::abs(b1)) ||
                std::abs(g1 - g2) > 1e-4 * (1.0 + std::abs(g1)))
                throw Error(ErrorKind::data,
                            "linearize: unstable derivative estimate at the origin; "
                            "use a smaller finite-difference step");
            brow[i] = b1;
            grow_[i] = g1;
        }
    }
    lin.remainder = std::make_shared<LinearRemainderDriver>(driver.f, lin.beta, lin.gamma);
    return lin;
}

DriverPtr shift_driver(DriverPtr f, const AdaptedProcess& p, double coeff) {
    return std::make_shared<ShiftedDriver>(std::move(f), p, coeff);
}

}  // namespace rbsde
