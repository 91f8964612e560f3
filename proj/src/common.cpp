#include "sddpm/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

namespace sddpm {

namespace {
std::atomic<int> g_threads{1};
std::atomic<bool> g_finite_checks{false};
}  // namespace

int num_threads() { return g_threads.load(); }

void set_num_threads(int n) {
    const char* force = std::getenv("SDDPM_DETERMINISTIC");
    if (force && std::string(force) == "1") {
        g_threads.store(1);
        return;
    }
    g_threads.store(std::max(1, n));
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    int t = std::min<int64_t>(num_threads(), n);
    if (t <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(t);
    int64_t chunk = (n + t - 1) / t;
    for (int w = 0; w < t; ++w) {
        int64_t begin = w * chunk;
        int64_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([begin, end, &fn] {
            for (int64_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

bool finite_checks_enabled() { return g_finite_checks.load(); }
void set_finite_checks(bool on) { g_finite_checks.store(on); }

}  // namespace sddpm
