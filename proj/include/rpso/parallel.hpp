#ifndef RPSO_PARALLEL_HPP
#define RPSO_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rpso {

/// Bounded worker pool for index-parallel loops. Work items must write only
/// to their own output slot; results are therefore independent of scheduling.
class Executor {
public:
    explicit Executor(std::size_t threads = 0)
        : threads_(threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads)
    {
    }

    std::size_t threads() const noexcept { return threads_; }

    template <typename F>
    void for_each_index(std::size_t count, F&& fn) const
    {
        const std::size_t workers = std::min(threads_, count);
        if (workers <= 1) {
            for (std::size_t i = 0; i < count; ++i) {
                fn(i);
            }
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto work = [&]() {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
        };
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back(work);
            }
        }
        if (error) {
            std::rethrow_exception(error);
        }
    }

private:
    std::size_t threads_;
};

} // namespace rpso

#endif
