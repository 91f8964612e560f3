#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sddpm/kernels.hpp"
#include "sddpm/lif.hpp"
#include "sddpm/rng.hpp"

namespace sddpm {

// Named handle onto a layer tensor. Buffers (BN running stats) are
// checkpointed but not optimized or gradient-checked.
template <typename T>
struct ParamEntry {
    std::string name;
    TensorT<T>* tensor;
    bool is_buffer = false;
};

template <typename T>
using ParamRegistry = std::vector<ParamEntry<T>>;

struct ForwardOptions {
    bool training = false;
    bool relaxed = false;
    std::optional<double> v_th_override;
    bool collect_rates = false;
};

// Kaiming-normal fan-in init, the DDPM convention for conv/linear stacks.
template <typename T>
void kaiming_init(TensorT<T>& w, int64_t fan_in, RngStream& rng) {
    double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w.data) v = static_cast<T>(rng.normal() * std);
}

template <typename T>
class Conv2d {
  public:
    Conv2d() = default;
    Conv2d(int64_t cin, int64_t cout, int64_t ksize, int64_t stride, int64_t pad)
        : weight({cout, cin, ksize, ksize}), bias({cout}), stride_(stride), pad_(pad) {
        weight.alloc_grad();
        bias.alloc_grad();
    }

    void init(RngStream& rng) { kaiming_init(weight, weight.dim(1) * weight.dim(2) * weight.dim(3), rng); }

    TensorT<T> forward(const TensorT<T>& x) {
        x_ = x;
        return conv2d_forward(x, weight, bias, stride_, pad_);
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        TensorT<T> gw(weight.shape), gb(bias.shape);
        TensorT<T> gx = conv2d_backward(x_, weight, gy, stride_, pad_, gw, gb);
        for (int64_t i = 0; i < gw.numel(); ++i) weight.grad[static_cast<size_t>(i)] += gw.data[static_cast<size_t>(i)];
        for (int64_t i = 0; i < gb.numel(); ++i) bias.grad[static_cast<size_t>(i)] += gb.data[static_cast<size_t>(i)];
        return gx;
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        reg.push_back({prefix + ".weight", &weight, false});
        reg.push_back({prefix + ".bias", &bias, false});
    }

    int64_t macs_per_image(int64_t out_h, int64_t out_w) const {
        return weight.dim(0) * weight.dim(1) * weight.dim(2) * weight.dim(3) * out_h * out_w;
    }

    int64_t stride() const { return stride_; }
    int64_t pad() const { return pad_; }

    TensorT<T> weight, bias;

  private:
    int64_t stride_ = 1, pad_ = 0;
    TensorT<T> x_;
};

template <typename T>
class BatchNorm2d {
  public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int64_t channels)
        : gamma(TensorT<T>::full({channels}, T(1))), beta({channels}), running_mean(static_cast<size_t>(channels), 0.0),
          running_var(static_cast<size_t>(channels), 1.0), rm_view({channels}), rv_view({channels}) {
        gamma.alloc_grad();
        beta.alloc_grad();
    }

    TensorT<T> forward(const TensorT<T>& x, bool training) {
        return batch_norm_forward(x, gamma, beta, running_mean, running_var, training, momentum, eps, &cache_);
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        TensorT<T> gg(gamma.shape), gb(beta.shape);
        TensorT<T> gx = batch_norm_backward(gy, gamma, cache_, gg, gb);
        for (int64_t i = 0; i < gg.numel(); ++i) gamma.grad[static_cast<size_t>(i)] += gg.data[static_cast<size_t>(i)];
        for (int64_t i = 0; i < gb.numel(); ++i) beta.grad[static_cast<size_t>(i)] += gb.data[static_cast<size_t>(i)];
        return gx;
    }

    // Running stats are held in double and exposed to the registry through
    // T-typed snapshot views.
    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        reg.push_back({prefix + ".gamma", &gamma, false});
        reg.push_back({prefix + ".beta", &beta, false});
        sync_views();
        reg.push_back({prefix + ".running_mean", &rm_view, true});
        reg.push_back({prefix + ".running_var", &rv_view, true});
    }

    void sync_views() {
        for (size_t i = 0; i < running_mean.size(); ++i) {
            rm_view.data[i] = static_cast<T>(running_mean[i]);
            rv_view.data[i] = static_cast<T>(running_var[i]);
        }
    }
    void load_views() {
        for (size_t i = 0; i < running_mean.size(); ++i) {
            running_mean[i] = static_cast<double>(rm_view.data[i]);
            running_var[i] = static_cast<double>(rv_view.data[i]);
        }
    }

    TensorT<T> gamma, beta;
    std::vector<double> running_mean, running_var;
    TensorT<T> rm_view, rv_view;
    double momentum = 0.1;
    double eps = 1e-5;

  private:
    BatchNormCache<T> cache_;
};

template <typename T>
class Linear {
  public:
    Linear() = default;
    Linear(int64_t in, int64_t out) : weight({out, in}), bias({out}) {
        weight.alloc_grad();
        bias.alloc_grad();
    }

    void init(RngStream& rng) { kaiming_init(weight, weight.dim(1), rng); }

    TensorT<T> forward(const TensorT<T>& x) {
        x_ = x;
        return linear_forward(x, weight, bias);
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        TensorT<T> gw(weight.shape), gb(bias.shape);
        TensorT<T> gx = linear_backward(x_, weight, gy, gw, gb);
        for (int64_t i = 0; i < gw.numel(); ++i) weight.grad[static_cast<size_t>(i)] += gw.data[static_cast<size_t>(i)];
        for (int64_t i = 0; i < gb.numel(); ++i) bias.grad[static_cast<size_t>(i)] += gb.data[static_cast<size_t>(i)];
        return gx;
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        reg.push_back({prefix + ".weight", &weight, false});
        reg.push_back({prefix + ".bias", &bias, false});
    }

    int64_t macs() const { return weight.dim(0) * weight.dim(1); }

    TensorT<T> weight, bias;

  private:
    TensorT<T> x_;
};

// LIF activation over the fused time axis.
template <typename T>
class SpikeNeuron {
  public:
    SpikeNeuron() = default;
    explicit SpikeNeuron(LifParams<T> params) : params_(params) {}

    TensorT<T> forward(const TensorT<T>& x, int64_t t_steps, const ForwardOptions& opts) {
        TensorT<T> s = seq_.forward(x, t_steps, params_, opts.relaxed, opts.v_th_override);
        if (opts.collect_rates) rate_ = seq_.firing_rate();
        return s;
    }

    TensorT<T> backward(const TensorT<T>& gs) { return seq_.backward(gs); }

    double rate() const { return rate_; }
    double min_threshold_distance() const { return seq_.min_threshold_distance(); }
    const LifParams<T>& params() const { return params_; }

  private:
    LifParams<T> params_{};
    LifSequence<T> seq_;
    double rate_ = 0.0;
};

}  // namespace sddpm
