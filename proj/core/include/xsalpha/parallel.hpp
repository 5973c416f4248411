#pragma once

#include <cstddef>
#include <functional>

namespace xsa {

/// Upper bound on worker threads used by parallel loops (>= 1).
void set_max_jobs(unsigned jobs);
unsigned max_jobs();

/// Runs `body(i)` for every i in [0, n). Iterations are split into contiguous
/// chunks; each index must write only to its own output slot, so results do
/// not depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace xsa
