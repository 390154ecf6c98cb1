#pragma once

#include <cstddef>
#include <functional>

namespace nlf {

/// Caps the number of worker threads used by parallel_for (0 = hardware).
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [0, count). Each index is processed by exactly one
/// worker; callers write per-index results into preallocated slots and merge
/// them afterwards in ascending order, so results are independent of the
/// partitioning. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace nlf
