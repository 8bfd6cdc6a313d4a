#pragma once

#include <cstddef>
#include <functional>

namespace cdpinn {

// Worker count from CDPINN_THREADS (default 1, clamped to [1, 64]).
int configured_threads();

// Calls fn(i) for i in [0, n) across configured_threads() workers using
// fixed contiguous chunks. fn must only write to slot i of its outputs;
// callers reduce afterwards in index order, so results do not depend on the
// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cdpinn
