#pragma once

#include <cstddef>
#include <functional>

namespace tnlab {

/// Worker count used when a caller passes 0: the LAB_WORKERS environment
/// variable if set, otherwise the hardware concurrency.
int default_workers();
void set_default_workers(int workers);

/// Calls fn(begin, end) on contiguous chunks of [0, n) using up to `workers`
/// threads (0 = default_workers()). Chunk boundaries depend only on n and the
/// worker count; exceptions from any chunk are rethrown after all joins.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, int workers = 0);

/// Calls fn(i) for every i in [0, n), distributing indices dynamically.
void parallel_each(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

}  // namespace tnlab
