#pragma once

#include <cstddef>
#include <functional>

namespace corrlab {

// Worker count: CORRLAB_THREADS if set, else hardware concurrency.
int thread_count();
void set_thread_count(int n);   // 0 restores the default

// Runs body(i) for i in [0, n). Blocks are handed out in a fixed order and
// callers write to disjoint outputs, so results do not depend on threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace corrlab
