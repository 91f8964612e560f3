#pragma once

#include <cmath>
#include <cstdint>

#include "sddpm/tensor.hpp"

namespace sddpm {

// Counter-based generator (Philox4x32-10). State is exactly
// (seed, stream_id, counter): every draw consumes whole counter blocks, so a
// stream can be checkpointed and resumed bit-exactly from those three words.
// Distinct stream_ids give independent sequences without coordination.
class RngStream {
  public:
    RngStream() = default;
    RngStream(uint64_t seed, uint64_t stream_id, uint64_t counter = 0)
        : seed_(seed), stream_id_(stream_id), counter_(counter) {}

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }
    uint64_t counter() const { return counter_; }
    void set_counter(uint64_t c) { counter_ = c; }

    // One block -> 128 bits.
    void next_block(uint64_t& lo, uint64_t& hi) {
        uint32_t c0 = static_cast<uint32_t>(counter_);
        uint32_t c1 = static_cast<uint32_t>(counter_ >> 32);
        uint32_t c2 = static_cast<uint32_t>(stream_id_);
        uint32_t c3 = static_cast<uint32_t>(stream_id_ >> 32);
        uint32_t k0 = static_cast<uint32_t>(seed_);
        uint32_t k1 = static_cast<uint32_t>(seed_ >> 32);
        for (int round = 0; round < 10; ++round) {
            uint64_t p0 = 0xD2511F53ULL * c0;
            uint64_t p1 = 0xCD9E8D57ULL * c2;
            uint32_t h0 = static_cast<uint32_t>(p0 >> 32), l0 = static_cast<uint32_t>(p0);
            uint32_t h1 = static_cast<uint32_t>(p1 >> 32), l1 = static_cast<uint32_t>(p1);
            uint32_t n0 = h1 ^ c1 ^ k0;
            uint32_t n1 = l1;
            uint32_t n2 = h0 ^ c3 ^ k1;
            uint32_t n3 = l0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9U;
            k1 += 0xBB67AE85U;
        }
        ++counter_;
        lo = (static_cast<uint64_t>(c1) << 32) | c0;
        hi = (static_cast<uint64_t>(c3) << 32) | c2;
    }

    uint64_t next_u64() {
        uint64_t lo, hi;
        next_block(lo, hi);
        return lo;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (lo, hi].
    double uniform_range(double lo, double hi) {
        uint64_t bits = next_u64();
        double u = static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        return lo + (hi - lo) * u;
    }

    // Uniform integer in [0, n) without modulo bias.
    uint64_t bounded(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    // Box-Muller pair from one block.
    void normal_pair(double& z0, double& z1) {
        uint64_t lo, hi;
        next_block(lo, hi);
        double u1 = static_cast<double>((lo >> 11) + 1) * 0x1.0p-53;  // (0, 1], log-safe
        double u2 = static_cast<double>(hi >> 11) * 0x1.0p-53;        // [0, 1)
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        z0 = r * std::cos(a);
        z1 = r * std::sin(a);
    }

    double normal() {
        double z0, z1;
        normal_pair(z0, z1);
        return z0;
    }

  private:
    uint64_t seed_ = 0;
    uint64_t stream_id_ = 0;
    uint64_t counter_ = 0;
};

// i.i.d. standard normal tensor, deterministic per (seed, stream_id, counter).
template <typename T>
TensorT<T> randn(std::vector<int64_t> shape, RngStream& rng) {
    TensorT<T> out(std::move(shape));
    int64_t n = out.numel();
    for (int64_t i = 0; i + 1 < n; i += 2) {
        double z0, z1;
        rng.normal_pair(z0, z1);
        out.data[static_cast<size_t>(i)] = static_cast<T>(z0);
        out.data[static_cast<size_t>(i + 1)] = static_cast<T>(z1);
    }
    if (n % 2 != 0) out.data[static_cast<size_t>(n - 1)] = static_cast<T>(rng.normal());
    return out;
}

template <typename T>
TensorT<T> rand_uniform(std::vector<int64_t> shape, T lo, T hi, RngStream& rng) {
    TensorT<T> out(std::move(shape));
    for (auto& v : out.data) v = static_cast<T>(lo + (hi - lo) * rng.uniform());
    return out;
}

}  // namespace sddpm
