#pragma once

#include <cstddef>
#include <functional>

namespace sibucket {

/// Worker count: SIBUCKET_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls body(i) for every i in [0, n), split into contiguous blocks across
/// at most thread_count() threads. Each index must write only its own output
/// slot; the result is then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sibucket
