#pragma once

#include <cstddef>
#include <functional>

namespace guardrail::mc {

/// Process-wide worker count used when a caller passes 0 threads.
unsigned default_threads();
void set_default_threads(unsigned threads);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 means the
/// process default). Work is claimed through an atomic counter, so the
/// assignment of indices to threads varies but each index runs exactly once.
/// If bodies throw, the exception from the smallest failing index is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace guardrail::mc
