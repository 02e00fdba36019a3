#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include "rbsde/par.hpp"
#include "rbsde/reference.hpp"
#include "rbsde/solver.hpp"

// Benchmark of the backward-sweep kernels: serial reference against the
// OpenMP time-slice parallel path, with a bitwise equality check.

using namespace rbsde;

namespace {

struct Timing {
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    bool identical = false;
};

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

bool equal(const AdaptedProcess& a, const AdaptedProcess& b) {
    for (int t = 0; t <= a.last_level(); ++t)
        for (std::size_t i = 0; i < a.level(t).size(); ++i)
            if (a.level(t)[i] != b.level(t)[i]) return false;
    return true;
}

Timing bench_instance(int depth, int branching, int repeats) {
    TreeModel model(depth, branching, 1.0 / depth, 1.0);
    Measure p = Measure::base(model);
    std::mt19937_64 rng(2024);

    AdaptedProcess dv(model, depth - 1);
    for (int t = 0; t < depth; ++t)
        for (double& v : dv.level(t)) v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
    std::vector<double> xi(model.nodes_at(depth));
    for (double& v : xi) v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    AdaptedProcess obstacle(model, depth, -0.3);
    for (std::size_t i = 0; i < xi.size(); ++i)
        obstacle.level(depth)[i] = std::min(-0.3, xi[i]);

    Timing timing;
    Solution serial, parallel;

    // warm up caches and the thread pool before timing
    par::enable(false);
    serial = reference::solve_underlying_serial(dv, xi, obstacle, model, p);
    par::enable(true);
    parallel = solve_underlying(dv, xi, obstacle, model, p);

    par::enable(false);
    auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r)
        serial = reference::solve_underlying_serial(dv, xi, obstacle, model, p);
    timing.serial_ms = ms_since(start) / repeats;
    const double serial_norm = reference::bmo_norm_sq_serial(serial.parts, model, p);

    par::enable(true);
    start = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r) parallel = solve_underlying(dv, xi, obstacle, model, p);
    timing.parallel_ms = ms_since(start) / repeats;
    const double parallel_norm = bmo_norm_sq(parallel.parts, model, p);
    par::enable(false);

    timing.identical = equal(serial.y, parallel.y) && equal(serial.k, parallel.k) &&
                       serial_norm == parallel_norm;
    return timing;
}

}  // namespace

int main(int argc, char** argv) {
    int repeats = 5;
    if (argc > 1) repeats = std::max(1, std::atoi(argv[1]));

    std::printf("threads available: %d\n", par::max_threads());
    std::printf("%-28s %12s %12s %9s %10s\n", "instance", "serial ms", "parallel ms", "speedup",
                "identical");

    struct Case {
        int depth;
        int branching;
    };
    const Case cases[] = {{14, 2}, {16, 2}, {18, 2}, {8, 4}, {9, 4}};
    bool all_identical = true;
    for (const Case& c : cases) {
        const Timing t = bench_instance(c.depth, c.branching, repeats);
        const std::string name =
            "depth " + std::to_string(c.depth) + ", branching " + std::to_string(c.branching);
        std::printf("%-28s %12.2f %12.2f %8.2fx %10s\n", name.c_str(), t.serial_ms, t.parallel_ms,
                    t.serial_ms / t.parallel_ms, t.identical ? "yes" : "NO");
        all_identical = all_identical && t.identical;
    }
    return all_identical ? 0 : 1;
}
