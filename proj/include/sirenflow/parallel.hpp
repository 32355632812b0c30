#pragma once

#include <cstddef>
#include <functional>

namespace sirenflow {

/// Worker count used by chunked loops; 1 runs inline. Results never depend on it.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls fn(i) for i in [0, n). Each index must write only its own output slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace sirenflow
