#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace kausal {

// Parallelism cap: KAUSAL_THREADS if set, else the logical core count.
inline unsigned max_threads() {
    if (const char* env = std::getenv("KAUSAL_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on (n, chunk_size), never on the thread count,
// so per-chunk partial results can be reduced in chunk order deterministically.
template <class Fn>
void for_each_chunk(std::int64_t n, std::int64_t chunk_size, Fn&& fn,
                    unsigned threads = max_threads()) {
    if (n <= 0) return;
    const std::int64_t nchunks = (n + chunk_size - 1) / chunk_size;
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, nchunks));
    if (threads <= 1) {
        for (std::int64_t c = 0; c < nchunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::int64_t c = t; c < nchunks; c += threads)
                fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        });
    }
    for (auto& th : pool) th.join();
}

constexpr std::int64_t kMcChunk = 4096;

// Deterministic mean/variance accumulator: per-chunk partial sums are stored
// by chunk index and folded left to right, independent of thread scheduling.
class ChunkedMoments {
public:
    explicit ChunkedMoments(std::int64_t n, std::int64_t chunk_size = kMcChunk)
        : chunk_size_(chunk_size),
          sums_((n + chunk_size - 1) / chunk_size, 0.0),
          sums2_((n + chunk_size - 1) / chunk_size, 0.0),
          counts_((n + chunk_size - 1) / chunk_size, 0) {}

    void add(std::int64_t chunk, double v) {
        sums_[chunk] += v;
        sums2_[chunk] += v * v;
        counts_[chunk] += 1;
    }

    std::int64_t count() const {
        std::int64_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }
    double sum() const {
        double s = 0.0;
        for (double v : sums_) s += v;
        return s;
    }
    double mean() const { return sum() / static_cast<double>(count()); }
    double variance() const {
        const double n = static_cast<double>(count());
        double s = 0.0, s2 = 0.0;
        for (double v : sums_) s += v;
        for (double v : sums2_) s2 += v;
        double var = (s2 - s * s / n) / (n > 1 ? n - 1 : 1);
        return var > 0 ? var : 0.0;
    }
    double standard_error() const {
        return std::sqrt(variance() / static_cast<double>(count()));
    }

private:
    std::int64_t chunk_size_;
    std::vector<double> sums_;
    std::vector<double> sums2_;
    std::vector<std::int64_t> counts_;
};

}  // namespace kausal
