#pragma once

#include <cstdint>
#include <functional>

namespace mav {

// Worker count: min(hardware_concurrency, MESHAVATAR_THREADS) when the env var
// is set, else hardware_concurrency.
int worker_count();

// Splits [begin, end) into contiguous chunks and runs fn(chunk_begin,
// chunk_end, chunk_index) on worker threads. Chunk boundaries depend only on
// the range and worker count, so per-chunk partial results can be reduced in
// chunk order for deterministic accumulation.
void parallel_chunks(int64_t begin, int64_t end,
                     const std::function<void(int64_t, int64_t, int)>& fn);
int parallel_chunk_count(int64_t begin, int64_t end);

// Convenience element-wise loop.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

}  // namespace mav
