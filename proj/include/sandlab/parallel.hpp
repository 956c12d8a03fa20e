#pragma once

#include <cstddef>
#include <functional>

namespace sandlab {

/// Environment variable that sets the worker count.
inline constexpr const char* kThreadsEnv = "SANDLAB_THREADS";

/// Worker count: an explicit override if set, else SANDLAB_THREADS, else the
/// number of available cores.
int thread_count();
/// Overrides the worker count for this process; 0 restores the default.
void set_thread_count(int threads);

/// Runs body(i) for i in [0, count). Each index is handled exactly once; the
/// caller writes results into per-index slots so that output does not depend
/// on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sandlab
