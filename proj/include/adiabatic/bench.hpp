#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace adiabatic {

struct BenchRecord {
  std::string kernel;
  std::size_t grid_size = 0;
  std::size_t levels = 0;
  double steps_per_second = 0.0;
  std::size_t threads = 1;
};

/// Medians of `repetitions` (>= 5) timings per cell:
///   nls_step     one full Strang step of the two-level solver, per size
///   eps_sweep    four independent short runs spread over `threads` jobs
/// Sizes must be powers of two; an empty size list gives no records.
std::vector<BenchRecord> bench_kernels(const std::vector<std::size_t>& sizes,
                                       const std::vector<std::size_t>& thread_counts,
                                       std::size_t repetitions = 5);

}  // namespace adiabatic
