#include "sandlab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#include <omp.h>

namespace sandlab {

namespace {
std::atomic<int> g_override{0};
}

int thread_count() {
  if (const int o = g_override.load(); o > 0) return o;
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_num_procs();
}

void set_thread_count(int threads) { g_override.store(threads > 0 ? threads : 0); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sandlab
