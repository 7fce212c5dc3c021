#pragma once

#include <cstddef>
#include <functional>

namespace cfbench {

// Number of worker threads used by parallel_for. Defaults to the hardware
// concurrency; CFBENCH_THREADS overrides it.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Runs body(i) for i in [0, n). Work items must be independent; results are
// expected to be written to per-index slots so that output order never
// depends on scheduling. Nested calls run serially on the calling thread.
// The first exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cfbench
