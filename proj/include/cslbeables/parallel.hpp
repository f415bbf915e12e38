#pragma once

#include <cstddef>
#include <functional>

namespace csl {

// Worker count: BEABLE_CSL_THREADS when set (>=1), hardware concurrency otherwise.
int worker_count();

// Runs fn(i) for i in [0, n).  Work is split into contiguous blocks; callers
// must write results into per-index slots so that output is independent of
// the worker count.  Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace csl
