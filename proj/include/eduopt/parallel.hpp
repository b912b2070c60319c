#pragma once

#include <cstddef>
#include <functional>

namespace eduopt {

// Worker count: EDUOPT_THREADS if set and positive, else hardware concurrency.
int default_thread_count();

// Runs body(begin, end) over a fixed contiguous partition of [0, n). Each
// index is visited exactly once; results written per index do not depend on
// the number of workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace eduopt
