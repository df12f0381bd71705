#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace mhaar {

void set_thread_count(int n);
int thread_count();

// Runs f(0..n-1). Iterations run concurrently only when allowed and more
// than one thread is configured; results must be written by index.
template <class F>
void parallel_for(std::size_t n, bool allowed, F&& f) {
  const bool par = allowed && n > 1 && thread_count() > 1;
  std::exception_ptr err;
  std::mutex mu;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (par)
  for (long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace mhaar
