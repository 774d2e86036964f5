#pragma once

#include <cstddef>
#include <functional>

namespace localstar {

/// Number of worker threads: LOCALSTAR_THREADS when set (>= 1), otherwise
/// the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous static
/// chunks, so any per-index output is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace localstar
