#pragma once

// Deterministic node-parallel helpers. Work is cut into a fixed number of
// contiguous blocks that does not depend on the worker count; block partials
// are combined pairwise in a fixed tree order, so results are bit-identical
// for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qha::parallel {

inline constexpr std::size_t block_count = 16;

inline std::atomic<int>& worker_setting() {
    static std::atomic<int> workers{1};
    return workers;
}

inline void set_workers(int n) { worker_setting().store(std::max(1, n)); }
inline int workers() { return worker_setting().load(); }

// Runs task(i) for i in [0, n) on up to workers() threads.
template <class Task>
void for_each_index(std::size_t n, Task&& task) {
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers()), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// Splits [0, n) into block_count contiguous ranges, evaluates
// partial(begin, end) per range and folds the partials pairwise.
template <class T, class Partial, class Combine>
T reduce(std::size_t n, T zero, Partial&& partial, Combine&& combine) {
    if (n == 0) return zero;
    const std::size_t blocks = std::min(block_count, n);
    std::vector<T> parts(blocks, zero);
    for_each_index(blocks, [&](std::size_t b) {
        const std::size_t begin = n * b / blocks;
        const std::size_t end = n * (b + 1) / blocks;
        parts[b] = partial(begin, end);
    });
    for (std::size_t stride = 1; stride < blocks; stride *= 2) {
        for (std::size_t i = 0; i + stride < blocks; i += 2 * stride) {
            parts[i] = combine(parts[i], parts[i + stride]);
        }
    }
    return parts[0];
}

// Block-cascade sum of term(i); same result for any worker count.
template <class T, class Term>
T sum(std::size_t n, T zero, Term&& term) {
    return reduce(
        n, zero,
        [&](std::size_t begin, std::size_t end) {
            T acc = zero;
            for (std::size_t i = begin; i < end; ++i) acc += term(i);
            return acc;
        },
        [](const T& a, const T& b) { return T(a + b); });
}

}  // namespace qha::parallel
