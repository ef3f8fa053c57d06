#pragma once

#include <cstddef>
#include <functional>

namespace skyps {

// 0 selects std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls body(i) for i in [0, n) across the configured worker threads.
/// The first exception thrown by any call is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace skyps
