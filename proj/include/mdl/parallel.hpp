#pragma once

#include <cstddef>
#include <functional>

namespace mdl {

/// Worker count used when an operation is given threads = 0.
unsigned default_threads();
void set_default_threads(unsigned n);

/// Calls fn(i) for every i in [0, n) on up to `threads` workers. Work is
/// handed out in index order; callers write results into slot i and reduce
/// in index order afterwards, so results never depend on the schedule.
/// The first exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace mdl
