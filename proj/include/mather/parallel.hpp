#pragma once

#include <cstddef>
#include <functional>

namespace mather {

/// Number of worker threads. Honors MATHER_WORKERS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks so the
/// result never depends on the worker count. Exceptions propagate (first wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mather
