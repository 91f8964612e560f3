#pragma once

#include <functional>

#include "sddpm/adam.hpp"
#include "sddpm/dataset.hpp"
#include "sddpm/diffusion.hpp"

namespace sddpm {

// Stream ids carved out of one run seed. Keeping them fixed makes every draw
// a pure function of (seed, purpose, counter), which is what checkpoint
// resume relies on.
namespace streams {
constexpr uint64_t kInit = 0;
constexpr uint64_t kData = 1;
constexpr uint64_t kDsm = 2;
constexpr uint64_t kSample = 3;
constexpr uint64_t kProbe = 4;
}  // namespace streams

template <typename T>
TensorT<T> gather_batch(const Dataset& ds, int64_t batch, RngStream& data_rng) {
    int64_t c = ds.images.dim(1), h = ds.images.dim(2), w = ds.images.dim(3);
    int64_t inner = c * h * w;
    TensorT<T> out({batch, c, h, w});
    for (int64_t b = 0; b < batch; ++b) {
        int64_t idx = static_cast<int64_t>(data_rng.bounded(static_cast<uint64_t>(ds.count())));
        const float* src = ds.images.ptr() + idx * inner;
        T* dst = out.ptr() + b * inner;
        for (int64_t i = 0; i < inner; ++i) dst[i] = static_cast<T>(src[i]);
    }
    return out;
}

// Runs DSM/Adam steps (from_step, to_step]; on_step sees the 1-based step and
// its loss.
template <typename T>
void run_training(SpikingUNet<T>& net, AdamOptimizer<T>& opt, const Dataset& ds, const NoiseSchedule& sched,
                  int64_t batch, int64_t from_step, int64_t to_step, RngStream& data_rng, RngStream& dsm_rng,
                  const std::function<void(int64_t, double)>& on_step) {
    for (int64_t step = from_step + 1; step <= to_step; ++step) {
        TensorT<T> x0 = gather_batch<T>(ds, batch, data_rng);
        net.zero_grad();
        double loss = dsm_loss(net, x0, sched, dsm_rng);
        if (!std::isfinite(loss)) throw VerificationError(strfmt("training diverged: non-finite loss at step %lld",
                                                                 static_cast<long long>(step)));
        opt.step();
        if (on_step) on_step(step, loss);
    }
}

}  // namespace sddpm
