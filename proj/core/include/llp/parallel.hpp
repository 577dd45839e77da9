#pragma once

#include <cstddef>
#include <functional>

namespace llp {

/// Number of worker threads used when a caller passes 0.
unsigned default_workers();

/// Calls fn(i) for every i in [0, n) using up to `workers` threads (0 picks
/// default_workers()). Calls for distinct i must not share mutable state.
/// The first exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace llp
