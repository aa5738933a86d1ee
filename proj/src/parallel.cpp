#include "pipecam/parallel.hpp"

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace pipecam {

namespace {
std::atomic<int> g_workers{1};
}

void set_worker_count(int n) {
  if (n < 1) throw std::invalid_argument("worker count must be >= 1");
  g_workers.store(n);
}

int worker_count() { return g_workers.load(); }

void parallel_for(long n, const std::function<void(long)>& fn) {
  const int workers = std::min<long>(g_workers.load(), n);
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex error_mu;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const long chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const long lo = t * chunk;
    const long hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pipecam
