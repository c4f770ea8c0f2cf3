#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "rvf/common.hpp"
#include "rvf/harness.hpp"

namespace rvf {

int thread_budget() {
    const char* env = std::getenv("RVF_THREADS");
    if (env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (!end || *end != '\0' || v < 1 || v > 1024) {
            throw ConfigError("RVF_THREADS must be an integer in [1,1024], got '" +
                              std::string(env) + "'");
        }
        return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    const int workers =
        static_cast<int>(std::min<std::int64_t>(n, thread_budget()));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::int64_t chunk = (n + workers - 1) / workers;
    for (int wkr = 0; wkr < workers; ++wkr) {
        const std::int64_t lo = wkr * chunk;
        const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
        pool.emplace_back([&fn, &errors, wkr, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(wkr)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace rvf
