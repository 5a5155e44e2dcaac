#include "sbice/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sbice {
namespace {

std::atomic<std::size_t> configured_threads{0};
thread_local bool inside_parallel_region = false;

std::size_t env_threads() {
  if (const char* v = std::getenv("SBICE_THREADS")) {
    try {
      const long n = std::stol(v);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (...) {
    }
  }
  return 0;
}

}  // namespace

std::size_t thread_count() {
  if (const std::size_t env = env_threads()) return env;
  if (const std::size_t n = configured_threads.load()) return n;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_thread_count(std::size_t n) { configured_threads.store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t lanes = std::min(thread_count(), n);
  if (lanes <= 1 || inside_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto lane = [&] {
    inside_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
    inside_parallel_region = false;
  };
  std::vector<std::jthread> workers;
  workers.reserve(lanes - 1);
  for (std::size_t t = 1; t < lanes; ++t) workers.emplace_back(lane);
  lane();
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sbice
