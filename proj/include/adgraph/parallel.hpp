#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace adgraph {

// Effective worker count: explicit request, else $ADGRAPH_THREADS, else 1.
inline std::size_t resolve_threads(std::optional<std::size_t> requested = std::nullopt) {
    if (requested && *requested > 0) return *requested;
    if (const char* env = std::getenv("ADGRAPH_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

// Runs body(begin, end, chunk_index) over fixed-size chunks of [0, n).
// Chunk boundaries depend only on n and chunk_size, never on the thread
// count, so callers that reduce per-chunk results in chunk order get the
// same answer for any number of workers.
template <class Body>
void for_each_chunk(std::size_t n, std::size_t chunk_size, std::size_t threads, Body&& body) {
    if (n == 0) return;
    chunk_size = std::max<std::size_t>(chunk_size, 1);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        body(begin, std::min(n, begin + chunk_size), c);
    };
    threads = std::min(std::max<std::size_t>(threads, 1), chunks);
    if (threads == 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }

    std::mutex mutex;
    std::size_t next = 0;
    std::exception_ptr failure;
    const auto worker = [&] {
        for (;;) {
            std::size_t c;
            {
                std::lock_guard lock(mutex);
                if (next >= chunks || failure) return;
                c = next++;
            }
            try {
                run_chunk(c);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// body(i) for every i in [0, n); body must only write to slot i of its output.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    const std::size_t chunk = std::max<std::size_t>(1, n / (std::max<std::size_t>(threads, 1) * 8));
    for_each_chunk(n, chunk, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) body(i);
    });
}

// SplitMix64 finalizer; used to derive independent per-trial seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace adgraph
