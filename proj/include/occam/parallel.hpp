#pragma once

#include <cstddef>
#include <functional>

namespace occam {

// Runs fn(i) for every i in [0, n) on up to `threads` workers (0: one per
// hardware thread). fn must only write to per-index state.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace occam
