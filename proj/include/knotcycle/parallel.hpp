// Index-parallel loop over [begin, end). Each index must write only its own
// output slot, so results do not depend on the thread count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace knotcycle {

inline unsigned thread_count() {
  if (const char* e = std::getenv("KNOTCYCLE_THREADS")) {
    int n = std::atoi(e);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class F>
void parallel_for(int begin, int end, F&& f) {
  if (end <= begin) return;
  const unsigned nt = std::min<unsigned>(thread_count(), static_cast<unsigned>(end - begin));
  std::atomic<int> next{begin};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    for (int i = next++; i < end; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        next = end;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < nt; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace knotcycle
