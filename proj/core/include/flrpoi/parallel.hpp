#pragma once

#include <cstddef>
#include <functional>

namespace flrpoi {

// Runs body(i) for i in [0, count) on up to `threads` workers. Work is handed
// out by an atomic counter; callers write results into slot i so the outcome
// does not depend on scheduling. threads == 0 means hardware concurrency.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

unsigned default_thread_count() noexcept;

}  // namespace flrpoi
