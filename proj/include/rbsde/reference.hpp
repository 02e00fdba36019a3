#pragma once

#include "rbsde/snell.hpp"

namespace rbsde::reference {

// Plain single-threaded implementations of the hot kernels, kept as an
// independent code path. Tests compare them bit for bit against the
// parallel kernels and the benchmark measures the speedup.

Solution solve_underlying_serial(const AdaptedProcess& dv, const std::vector<double>& xi,
                                 const AdaptedProcess& obstacle, const TreeModel& model,
                                 const Measure& measure);

double bmo_norm_sq_serial(const MartingaleParts& parts, const TreeModel& model,
                          const Measure& measure);

}  // namespace rbsde::reference
