#pragma once

#include <cstddef>
#include <functional>

namespace gbc {

/// Number of workers: the override if set, else GBC_THREADS, else hardware threads.
std::size_t worker_count();

/// Force a worker count for the current process (0 clears the override).
void set_worker_override(std::size_t n);

/// Runs fn(0..n-1). Results must be written by index; the call order is
/// unspecified. Nested calls from inside a worker run inline. The first
/// exception thrown by any item is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gbc
