#pragma once

#include <cstddef>
#include <functional>

namespace rankone {

/// Worker count used when a caller passes 0: hardware concurrency, at least 1.
int default_threads() noexcept;

/// Splits [0, n) into fixed blocks of `block` items and runs
/// body(block_id, begin, end) for each, on up to `threads` workers. Block
/// boundaries depend only on n and block, so per-block results merged in
/// block order are independent of the worker count. The first exception
/// thrown by any block is rethrown after all workers join.
void parallel_blocks(std::size_t n, std::size_t block, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t block_count(std::size_t n, std::size_t block) { return (n + block - 1) / block; }

}  // namespace rankone
