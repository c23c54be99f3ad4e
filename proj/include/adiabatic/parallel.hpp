#pragma once

#include <cstddef>
#include <functional>

namespace adiabatic {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Every index is
/// written by exactly one worker, so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace adiabatic
