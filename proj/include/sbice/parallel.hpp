#pragma once

#include <cstddef>
#include <functional>

namespace sbice {

/// Number of worker lanes used by parallel_for. Defaults to the hardware
/// concurrency; SBICE_THREADS in the environment takes precedence over
/// set_thread_count.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Results must be written by index; the order
/// of execution is unspecified. The first exception thrown by any lane is
/// rethrown after all lanes finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sbice
