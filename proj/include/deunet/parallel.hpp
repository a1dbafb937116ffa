#pragma once

#include <functional>

namespace deunet {

/// Set the worker count used by parallel_for. 0 restores the hardware default.
void set_thread_count(int n);
int thread_count();

/// Runs fn over contiguous chunks covering [0, n). Each index is processed by
/// exactly one worker, with no cross-worker reductions, so results are
/// bit-identical for any thread count or schedule.
void parallel_for(int n, const std::function<void(int begin, int end)>& fn);

}  // namespace deunet
