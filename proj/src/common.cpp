#include "ena/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ena {

Vector gaussian_vector(Index n, double std, Rng& rng)
{
    std::normal_distribution<double> normal{0.0, 1.0};
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = std * normal(rng);
    return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

unsigned thread_count()
{
    if (const char* env = std::getenv("ENA_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(Index n, const std::function<void(Index)>& body)
{
    if (n <= 0) return;
    const Index workers = std::min<Index>(thread_count(), n);
    if (workers <= 1) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (Index w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const Index begin = n * w / workers;
            const Index end = n * (w + 1) / workers;
            try {
                for (Index i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock{failure_mutex};
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace ena
