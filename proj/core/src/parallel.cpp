#include "mav/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mav {

int worker_count() {
    int hw = int(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("MESHAVATAR_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) hw = std::min(hw, cap);
    }
    return hw;
}

int parallel_chunk_count(int64_t begin, int64_t end) {
    int64_t n = end - begin;
    if (n <= 0) return 0;
    return int(std::min<int64_t>(n, int64_t(worker_count()) * 4));
}

void parallel_chunks(int64_t begin, int64_t end,
                     const std::function<void(int64_t, int64_t, int)>& fn) {
    int64_t n = end - begin;
    if (n <= 0) return;
    int chunks = parallel_chunk_count(begin, end);
    int workers = std::min(worker_count(), chunks);
    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) {
            int64_t lo = begin + n * c / chunks;
            int64_t hi = begin + n * (c + 1) / chunks;
            fn(lo, hi, c);
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                int c = next.fetch_add(1);
                if (c >= chunks) return;
                int64_t lo = begin + n * c / chunks;
                int64_t hi = begin + n * (c + 1) / chunks;
                fn(lo, hi, c);
            }
        });
    }
    for (auto& t : pool) t.join();
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    parallel_chunks(begin, end, [&](int64_t lo, int64_t hi, int) {
        for (int64_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace mav
