#pragma once

#include <cstddef>
#include <functional>

namespace lesionsynth {

/// Number of workers to use when the caller passes 0.
unsigned default_worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads (0 = default).
///
/// Work items are claimed dynamically. If any item throws, remaining
/// unclaimed items are skipped and the exception from the lowest failing
/// index is rethrown, so the reported failure does not depend on scheduling.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace lesionsynth
