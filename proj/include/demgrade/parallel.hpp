#pragma once

#include <cstddef>
#include <functional>

namespace demgrade {

// Worker cap: DEMGRADE_THREADS when set (minimum 1), otherwise the hardware
// concurrency. Read once per process.
int max_threads();

// Runs fn(i) for i in [0, n). Each index must be independent; callers keep
// determinism by writing results into pre-sized slots and doing any
// reduction serially in index order afterwards.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace demgrade
