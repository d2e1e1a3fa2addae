#pragma once

#include <cstddef>
#include <functional>

namespace synthaudit {

/// Worker cap from SYNTHAUDIT_THREADS (>= 1); defaults to hardware concurrency.
std::size_t thread_count();

/// Splits [0, n) into contiguous chunks and runs `body(begin, end, chunk)`
/// on up to `thread_count()` threads. Chunk boundaries depend only on `n` and
/// the thread count, so callers merging per-chunk results in chunk order get
/// a deterministic result.
std::size_t chunk_count(std::size_t n);
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t begin, std::size_t end, std::size_t chunk)>& body);

} // namespace synthaudit
