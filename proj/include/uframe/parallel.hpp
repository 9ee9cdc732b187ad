/**
 * @file
 * Seeded random streams and chunked parallel execution.
 *
 * Work over n items is cut into a fixed number of chunks that depends only
 * on n. Chunk c draws from its own generator seeded by (seed, c), so results
 * do not depend on how many threads run the chunks.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace uframe {

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    return Rng(seq);
}

namespace detail {
inline std::atomic<unsigned> &worker_override() {
    static std::atomic<unsigned> value{0};
    return value;
}
} // namespace detail

/// Worker threads for sampling: the hardware count, capped by
/// UFRAME_THREADS. A live ScopedWorkers takes precedence over both.
inline unsigned worker_count() {
    if (const unsigned forced = detail::worker_override().load(); forced > 0) {
        return forced;
    }
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char *env = std::getenv("UFRAME_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) {
                n = std::min<unsigned>(n, static_cast<unsigned>(cap));
            }
        } catch (const std::exception &) {
            // unparsable: keep the hardware count
        }
    }
    return n;
}

/// Forces an exact worker count for its lifetime.
class ScopedWorkers {
  public:
    explicit ScopedWorkers(unsigned n)
        : previous_(detail::worker_override().exchange(std::max(1u, n))) {}
    ~ScopedWorkers() { detail::worker_override().store(previous_); }
    ScopedWorkers(const ScopedWorkers &) = delete;
    ScopedWorkers &operator=(const ScopedWorkers &) = delete;

  private:
    unsigned previous_;
};

inline constexpr std::size_t default_chunks = 64;

struct ChunkRange {
    std::size_t index;
    std::size_t begin;
    std::size_t end;
};

inline std::vector<ChunkRange> make_chunks(std::size_t n,
                                           std::size_t chunks = default_chunks) {
    std::vector<ChunkRange> out;
    if (n == 0) {
        return out;
    }
    chunks = std::min(chunks, n);
    for (std::size_t c = 0; c < chunks; ++c) {
        out.push_back({c, n * c / chunks, n * (c + 1) / chunks});
    }
    return out;
}

/// Calls fn(chunk, rng) for every chunk, spread over worker_count() threads.
template <class Fn>
void for_each_chunk(std::size_t n, std::uint64_t seed, Fn &&fn) {
    const std::vector<ChunkRange> chunks = make_chunks(n);
    const unsigned workers =
        std::min<unsigned>(worker_count(), static_cast<unsigned>(chunks.size()));
    auto run = [&](unsigned worker) {
        for (std::size_t c = worker; c < chunks.size(); c += workers) {
            Rng rng = make_stream(seed, chunks[c].index);
            fn(chunks[c], rng);
        }
    };
    if (workers <= 1) {
        run(0);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                run(w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread &t : threads) {
        t.join();
    }
    for (const std::exception_ptr &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

/// Neumaier-compensated running sum.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + carry_; }

  private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

} // namespace uframe
