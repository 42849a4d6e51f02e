#pragma once

#include <cstddef>
#include <functional>

namespace grusin {

/// Global worker budget shared by every parallel loop (defaults to the hardware concurrency).
void set_worker_budget(int workers);
[[nodiscard]] int worker_budget();

/// Runs body(i) for i in [0, count) on up to worker_budget() threads.
///
/// Indices are split into contiguous blocks, so callers that write to slot i of a
/// preallocated output get results independent of the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace grusin
