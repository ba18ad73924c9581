#pragma once

#include <cstddef>
#include <functional>

namespace ltgsr {

/// Worker cap. Defaults to LTGSR_THREADS if set, else the hardware concurrency.
int num_threads();
void set_num_threads(int n);

/// Runs fn(0..count-1). The task decomposition is fixed by the caller, never by the
/// worker count, so every result is independent of how many threads run it.
/// Nested calls execute inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace ltgsr
