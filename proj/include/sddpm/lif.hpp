#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "sddpm/tensor.hpp"

namespace sddpm {

// Discrete LIF dynamics with hard reset:
//   U[n] = decay * V[n-1] + I[n]
//   S[n] = step(U[n] - v_th)            (1 when U >= v_th)
//   V[n] = U[n] * (1 - S[n]) + v_reset * S[n]
template <typename T>
struct LifParams {
    T decay = T(1);
    T v_th = T(1);
    T v_reset = T(0);
    T surrogate_alpha = T(2);
};

// Arctangent surrogate: derivative used in place of the step function's.
template <typename T>
T surrogate_grad(T u, T v_th, T alpha) {
    T z = static_cast<T>(M_PI_2) * alpha * (u - v_th);
    return alpha / (T(2) * (T(1) + z * z));
}

// Antiderivative of surrogate_grad; smooth stand-in for the step function,
// used only to verify the BPTT code path against finite differences.
template <typename T>
T relaxed_forward(T u, T v_th, T alpha) {
    return T(0.5) + (T(1) / static_cast<T>(M_PI)) * std::atan(static_cast<T>(M_PI_2) * alpha * (u - v_th));
}

// Membrane state, allocated lazily on the first step to match the input.
template <typename T>
struct LifState {
    TensorT<T> v;
    bool initialized = false;
};

// Single step; returns binary spikes and updates state in place.
template <typename T>
TensorT<T> lif_step(LifState<T>& state, const TensorT<T>& input, const LifParams<T>& params) {
    if (!state.initialized) {
        state.v = TensorT<T>::full(input.shape, params.v_reset);
        state.initialized = true;
    }
    check_arg(state.v.same_shape(input), strfmt("lif_step: state shape %s != input shape %s",
                                                shape_str(state.v.shape).c_str(), shape_str(input.shape).c_str()));
    TensorT<T> spikes(input.shape);
    for (int64_t i = 0; i < input.numel(); ++i) {
        size_t k = static_cast<size_t>(i);
        T u = params.decay * state.v.data[k] + input.data[k];
        T s = u >= params.v_th ? T(1) : T(0);
        spikes.data[k] = s;
        state.v.data[k] = s == T(1) ? params.v_reset : u;
    }
    return spikes;
}

// Unrolled LIF over the leading time axis of a fused [T*B, ...] tensor
// (time-major). Caches pre-reset potentials U for BPTT.
//
// Backward per step, walking time in reverse:
//   gU[n] = gS[n] * surrogate_grad(U[n]) + gV[n] * (1 - S_hard[n])
//   gI[n] = gU[n];  gV[n-1] = decay * gU[n]
// The reset gate uses the hard spike and is treated as a constant, so the
// relaxed forward keeps the hard gate too and the same backward is its exact
// gradient away from threshold crossings.
template <typename T>
class LifSequence {
  public:
    // v_th_override substitutes the firing threshold for this call only.
    TensorT<T> forward(const TensorT<T>& input, int64_t t_steps, const LifParams<T>& params, bool relaxed = false,
                       std::optional<double> v_th_override = std::nullopt) {
        check_arg(t_steps >= 1 && input.dim(0) % t_steps == 0,
                  strfmt("lif_sequence: leading dim %lld not divisible by T=%lld",
                         static_cast<long long>(input.dim(0)), static_cast<long long>(t_steps)));
        t_steps_ = t_steps;
        params_ = params;
        v_th_ = v_th_override ? static_cast<T>(*v_th_override) : params.v_th;
        u_ = TensorT<T>(input.shape);
        TensorT<T> out(input.shape);
        int64_t inner = input.numel() / t_steps;  // B * C * H * W
        std::vector<T> v(static_cast<size_t>(inner), params.v_reset);
        spike_sum_ = 0.0;
        for (int64_t t = 0; t < t_steps; ++t) {
            const T* in = input.ptr() + t * inner;
            T* u = u_.ptr() + t * inner;
            T* s = out.ptr() + t * inner;
            for (int64_t i = 0; i < inner; ++i) {
                T ui = params.decay * v[static_cast<size_t>(i)] + in[i];
                u[i] = ui;
                T hard = ui >= v_th_ ? T(1) : T(0);
                spike_sum_ += static_cast<double>(hard);
                s[i] = relaxed ? relaxed_forward(ui, v_th_, params.surrogate_alpha) : hard;
                v[static_cast<size_t>(i)] = hard == T(1) ? params.v_reset : ui;
            }
        }
        return out;
    }

    TensorT<T> backward(const TensorT<T>& gs) const {
        check_arg(gs.same_shape(u_), "lif_sequence backward: gradient shape mismatch");
        TensorT<T> gx(gs.shape);
        int64_t inner = gs.numel() / t_steps_;
        std::vector<T> gv(static_cast<size_t>(inner), T(0));
        for (int64_t t = t_steps_ - 1; t >= 0; --t) {
            const T* g = gs.ptr() + t * inner;
            const T* u = u_.ptr() + t * inner;
            T* q = gx.ptr() + t * inner;
            for (int64_t i = 0; i < inner; ++i) {
                size_t k = static_cast<size_t>(i);
                T hard = u[i] >= v_th_ ? T(1) : T(0);
                T gu = g[i] * surrogate_grad(u[i], v_th_, params_.surrogate_alpha) + gv[k] * (T(1) - hard);
                q[i] = gu;
                gv[k] = params_.decay * gu;
            }
        }
        return gx;
    }

    // Mean spike value over all sites and time steps of the last forward.
    double firing_rate() const { return u_.numel() > 0 ? spike_sum_ / static_cast<double>(u_.numel()) : 0.0; }

    // Smallest |U - v_th| seen in the last forward; relaxed-mode gradient
    // checks need this comfortably above the finite-difference step.
    double min_threshold_distance() const {
        double best = std::numeric_limits<double>::infinity();
        for (int64_t i = 0; i < u_.numel(); ++i)
            best = std::min(best, std::abs(static_cast<double>(u_.data[static_cast<size_t>(i)]) - static_cast<double>(v_th_)));
        return best;
    }

  private:
    TensorT<T> u_;
    LifParams<T> params_{};
    T v_th_ = T(1);
    int64_t t_steps_ = 1;
    double spike_sum_ = 0.0;
};

// Applies lif over a [T, ...] tensor starting from v_reset; returns the spike
// train. Thin wrapper over LifSequence for callers without a fused layout.
template <typename T>
TensorT<T> lif_sequence(const TensorT<T>& inputs, const LifParams<T>& params) {
    LifSequence<T> seq;
    return seq.forward(inputs, inputs.dim(0), params);
}

}  // namespace sddpm
