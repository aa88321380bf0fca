#pragma once

#include <functional>

namespace stlpi2 {

/// Deterministic work distribution over a thread pool; each job index is
/// claimed exactly once. threads <= 0 uses the hardware concurrency.
void parallel_for(int jobs, int threads, const std::function<void(int)>& fn);

}  // namespace stlpi2
