#pragma once

#include <cstddef>
#include <functional>

namespace evoglm {

/// Number of workers used when a caller passes 0.
unsigned default_workers() noexcept;

/// Runs body(begin, end) over contiguous blocks of [0, n). Blocks are
/// independent; callers write results by index so the outcome does not
/// depend on the worker count.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace evoglm
