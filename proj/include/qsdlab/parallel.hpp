#pragma once

#include <cstddef>
#include <functional>

namespace qsdlab {

/// Worker count: QSDLAB_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Indices are
/// claimed dynamically; body must only write to storage owned by index i.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace qsdlab
