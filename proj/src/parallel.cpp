#include "latq/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace latq {

int worker_count() {
  int cap = 0;
  if (const char* env = std::getenv("LQ_THREADS")) {
    try {
      cap = std::stoi(env);
    } catch (const std::exception&) {
      cap = 0;
    }
    if (cap < 0) cap = 0;
  }
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  return cap == 0 ? hw : std::min(cap, hw);
}

void parallel_for(Index n, const std::function<void(Index)>& fn) {
  const int workers = worker_count();
  if (workers <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  auto drain = [&] {
    while (true) {
      const Index i = next.fetch_add(1);
      if (i >= n) break;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(
      std::min<Index>(static_cast<Index>(workers), n));
  pool.reserve(static_cast<size_t>(spawn - 1));
  for (int t = 1; t < spawn; ++t) pool.emplace_back(drain);
  drain();
  for (auto& th : pool) th.join();
}

}  // namespace latq
