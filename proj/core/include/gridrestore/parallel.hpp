#pragma once

#include <cstddef>
#include <functional>

namespace gridrestore {

/// Worker count: GRIDRESTORE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
[[nodiscard]] std::size_t worker_threads();

/// Runs body(i) for every i in [0, count) on up to `threads` threads. Results
/// must be written to per-index slots so the outcome does not depend on
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace gridrestore
