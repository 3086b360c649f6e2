#pragma once

#include <cstddef>
#include <functional>

namespace lot {

/// Worker count: LOTKIT_THREADS when set to a positive integer, otherwise
/// std::thread::hardware_concurrency().
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write only to slots owned by their index, so results do not depend on
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lot
