#pragma once

#include <cstddef>
#include <functional>

namespace pdmp {

// Worker count used by replica loops; 0 or unset means one worker.
void set_thread_count(unsigned n);
unsigned thread_count();

// Calls fn(k) for k = 0..n-1 on the worker pool. fn must only write to
// per-index storage; callers reduce afterwards in index order, which keeps
// results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pdmp
