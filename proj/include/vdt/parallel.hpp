// Fixed-block parallel loop.
//
// Work is split into blocks of a fixed size and blocks are handed to a small
// thread pool. Because block boundaries never depend on the worker count,
// any per-block computation (and any reduction that combines per-block
// results in block order) gives identical results for every worker count.
#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace vdt {

// Samples per parallel block; a fixed constant on purpose.
inline constexpr std::ptrdiff_t kParallelBlock = 2048;

int worker_count();
void set_worker_count(int n);

inline std::ptrdiff_t block_count(std::ptrdiff_t n, std::ptrdiff_t block = kParallelBlock) {
    return (n + block - 1) / block;
}

// Runs fn(block_index, begin, end) over [0, n) in blocks of `block` items.
// Blocks are claimed from a shared counter; exceptions propagate to the caller.
void parallel_for_blocks(std::ptrdiff_t n,
                         const std::function<void(std::ptrdiff_t, std::ptrdiff_t, std::ptrdiff_t)>& fn,
                         std::ptrdiff_t block = kParallelBlock);

}  // namespace vdt
