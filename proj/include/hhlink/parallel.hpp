#pragma once

#include <cstddef>
#include <functional>

namespace hhlink {

// requested <= 0 means "use all available cores".
int resolve_threads(int requested);

// Splits [0,n) into fixed-size chunks (boundaries depend only on n and
// chunk_size, never on the thread count) and runs fn(chunk_index, begin, end)
// on a worker pool. Callers that reduce per-chunk outputs in chunk-index order
// get results identical to a sequential run for any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace hhlink
