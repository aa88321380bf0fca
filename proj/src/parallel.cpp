#include "stlpi2/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace stlpi2 {

void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, jobs));
  if (threads == 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) fn(j);
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace stlpi2
