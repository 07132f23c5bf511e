#pragma once

#include <cstddef>
#include <functional>

namespace greenpot {

// Worker count: GREENPOT_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

// Runs body(i) for i in [0, n) over contiguous blocks. Each index is handled
// exactly once; the first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace greenpot
