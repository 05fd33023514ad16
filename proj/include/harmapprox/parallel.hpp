#pragma once

#include <cstddef>
#include <functional>

namespace ha {

// Worker count used by every data-parallel loop; 1 means run inline.
void set_threads(int n);
int threads();

// Calls fn(i) for i in [0, n). Results must go to per-index slots, which
// keeps output independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ha
