#pragma once

#include <functional>

namespace sgnet {

// Worker count from SGNET_THREADS (default 1).
int thread_count();

// Runs fn(i) for i in [0, n). Each index is executed exactly once; callers
// must make per-index work independent so results do not depend on the
// thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace sgnet
