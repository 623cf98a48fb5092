#pragma once

#include <cstddef>
#include <functional>

namespace advtex {

/// Runs fn(0..n-1) on up to `jobs` threads. Callers write results into
/// per-index slots and reduce in index order, so output never depends on the
/// job count. If several indices throw, the exception of the lowest index is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace advtex
