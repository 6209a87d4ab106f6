// parallel.hpp - minimal fixed-assignment worker pool

#pragma once

#include <cstddef>
#include <functional>

namespace sbl {

// Worker count from SBL_WORKERS, else the hardware concurrency (at least 1).
int default_workers();

// Runs task(i) for i in [0, n) on up to `workers` threads. Each task writes only its own
// output slot, so results never depend on the worker count. Exceptions are rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

} // namespace sbl
