#include "deunet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace deunet {

namespace {
std::atomic<int> g_threads{0};

int effective_threads() {
  const int n = g_threads.load(std::memory_order_relaxed);
  if (n > 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

int thread_count() { return effective_threads(); }

void parallel_for(int n, const std::function<void(int, int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(effective_threads(), n);
  if (workers <= 1 || n < 64) {
    fn(0, n);
    return;
  }
  const int chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  std::exception_ptr error;
  std::mutex error_mutex;
  auto guarded = [&](int begin, int end) {
    try {
      fn(begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  for (int w = 1; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(guarded, begin, end);
  }
  guarded(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace deunet
