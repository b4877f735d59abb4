#pragma once

#include <functional>

#include "latq/types.hpp"

namespace latq {

// Worker count for data-parallel loops: the LQ_THREADS environment variable
// caps it, 0 or unset means hardware concurrency.
int worker_count();

// Runs fn(0..n-1), possibly across threads. Callers must write to disjoint
// slots; iteration order is unspecified.
void parallel_for(Index n, const std::function<void(Index)>& fn);

}  // namespace latq
