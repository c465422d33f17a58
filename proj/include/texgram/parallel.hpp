#pragma once

#include <cstddef>
#include <functional>

namespace texgram {

// Runs body(i) for i in [0, count) on up to `workers` threads (0 = hardware
// concurrency). Each index is visited exactly once; callers write results
// into per-index slots so output order never depends on scheduling. The
// first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace texgram
