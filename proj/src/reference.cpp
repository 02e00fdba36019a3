#include "rbsde/reference.hpp"

#include <cmath>

namespace rbsde::reference {

Solution solve_underlying_serial(const AdaptedProcess& dv, const std::vector<double>& xi,
                                 const AdaptedProcess& obstacle, const TreeModel& model,
                                 const Measure& measure) {
    const int n = model.depth();
    const std::size_t b = static_cast<std::size_t>(model.branching());
    if (xi.size() != model.nodes_at(n))
        throw Error(ErrorKind::parameter, "solve_underlying_serial: xi size does not match leaf count");
    for (std::size_t i = 0; i < xi.size(); ++i)
        if (xi[i] < obstacle.level(n)[i])
            throw Error(ErrorKind::data, "solve_underlying_serial: infeasible data, xi < L_T");

    Solution sol;
    sol.y = AdaptedProcess(model, n);
    sol.k = AdaptedProcess(model, n);
    sol.parts = MartingaleParts::zeros(model);
    sol.y.level(n) = xi;

    std::vector<std::vector<double>> dk(static_cast<std::size_t>(n));
    for (int t = n - 1; t >= 0; --t) {
        dk[static_cast<std::size_t>(t)].resize(model.nodes_at(t));
        for (std::size_t i = 0; i < model.nodes_at(t); ++i) {
            const NodeId v{t, i};

            double mean = 0.0, dm_mean = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double q = measure.prob(v, static_cast<int>(k));
                mean += q * sol.y.level(t + 1)[i * b + k];
                dm_mean += q * model.dm(static_cast<int>(k));
            }
            double var = 0.0, cov = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double q = measure.prob(v, static_cast<int>(k));
                const double dmt = model.dm(static_cast<int>(k)) - dm_mean;
                const double x = sol.y.level(t + 1)[i * b + k] - mean;
                var += q * dmt * dmt;
                cov += q * x * dmt;
            }
            const double z = cov / var;
            double br_orth = 0.0, br_n = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double q = measure.prob(v, static_cast<int>(k));
                const double dmt = model.dm(static_cast<int>(k)) - dm_mean;
                const double x = sol.y.level(t + 1)[i * b + k] - mean;
                const double o = x - z * dmt;
                sol.parts.orth[static_cast<std::size_t>(t)][i * b + k] = o;
                br_orth += q * o * o;
                br_n += q * x * x;
            }
            sol.parts.z.level(t)[i] = z;
            sol.parts.br_n.level(t)[i] = br_n;
            sol.parts.br_orth.level(t)[i] = br_orth;
            sol.parts.br_zm.level(t)[i] = z * var;

            const double ytilde = mean + dv.level(t)[i];
            const double y = std::max(ytilde, obstacle.level(t)[i]);
            sol.y.level(t)[i] = y;
            dk[static_cast<std::size_t>(t)][i] = y - ytilde;
        }
    }

    sol.k.level(0)[0] = 0.0;
    for (int t = 0; t < n; ++t)
        for (std::size_t i = 0; i < model.nodes_at(t); ++i)
            for (std::size_t k = 0; k < b; ++k)
                sol.k.level(t + 1)[i * b + k] = sol.k.level(t)[i] + dk[static_cast<std::size_t>(t)][i];
    return sol;
}

double bmo_norm_sq_serial(const MartingaleParts& parts, const TreeModel& model,
                          const Measure& measure) {
    const std::size_t b = static_cast<std::size_t>(model.branching());
    std::vector<std::vector<double>> remaining(static_cast<std::size_t>(model.depth()) + 1);
    remaining[static_cast<std::size_t>(model.depth())].assign(model.nodes_at(model.depth()), 0.0);
    for (int t = model.depth() - 1; t >= 0; --t) {
        auto& cur = remaining[static_cast<std::size_t>(t)];
        const auto& next = remaining[static_cast<std::size_t>(t) + 1];
        cur.resize(model.nodes_at(t));
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const NodeId v{t, i};
            double acc = 0.0;
            for (std::size_t k = 0; k < b; ++k)
                acc += measure.prob(v, static_cast<int>(k)) * next[i * b + k];
            cur[i] = parts.br_n.level(t)[i] + acc;
        }
    }
    double best = 0.0;
    for (const auto& row : remaining)
        for (double x : row) best = std::max(best, x);
    return best;
}

}  // namespace rbsde::reference
