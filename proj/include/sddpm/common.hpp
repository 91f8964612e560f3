#pragma once

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sddpm {

// Error categories map onto CLI exit codes: ConfigError -> 1, DataError -> 2,
// VerificationError -> 3. Contract violations inside kernels throw
// std::invalid_argument.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VerificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string strfmt(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[1024];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

inline void check_arg(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// ---- threading ----------------------------------------------------------
// Kernels parallelize over independent batch entries only, so results are
// bit-identical for any thread count. Reductions stay serial.

int num_threads();
void set_num_threads(int n);

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// thread; fn must write disjoint outputs.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

// ---- finite checks -------------------------------------------------------

bool finite_checks_enabled();
void set_finite_checks(bool on);

}  // namespace sddpm
