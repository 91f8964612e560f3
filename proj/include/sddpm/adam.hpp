#pragma once

#include <cmath>

#include "sddpm/layers.hpp"
#include "sddpm/tensor.hpp"

namespace sddpm {

// Bias-corrected Adam. Moments live per parameter; step_count is shared and
// strictly increasing.
template <typename T>
struct AdamState {
    TensorT<T> first_moment;
    TensorT<T> second_moment;
};

template <typename T>
struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
void adam_step(TensorT<T>& param, const TensorT<T>& grad, AdamState<T>& state, int64_t step_count,
               const AdamConfig<T>& cfg) {
    check_arg(param.same_shape(grad) && param.same_shape(state.first_moment) && param.same_shape(state.second_moment),
              strfmt("adam_step: shape mismatch, param %s grad %s", shape_str(param.shape).c_str(),
                     shape_str(grad.shape).c_str()));
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
    for (int64_t i = 0; i < param.numel(); ++i) {
        size_t k = static_cast<size_t>(i);
        double g = static_cast<double>(grad.data[k]);
        double m = cfg.beta1 * static_cast<double>(state.first_moment.data[k]) + (1.0 - cfg.beta1) * g;
        double v = cfg.beta2 * static_cast<double>(state.second_moment.data[k]) + (1.0 - cfg.beta2) * g * g;
        state.first_moment.data[k] = static_cast<T>(m);
        state.second_moment.data[k] = static_cast<T>(v);
        double mhat = m / bc1;
        double vhat = v / bc2;
        param.data[k] = static_cast<T>(static_cast<double>(param.data[k]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
}

// Optimizer over a parameter registry; moments stay aligned with the entries.
template <typename T>
class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<ParamEntry<T>> params, AdamConfig<T> cfg) : params_(std::move(params)), cfg_(cfg) {
        states_.reserve(params_.size());
        for (auto& p : params_) {
            AdamState<T> s{TensorT<T>(p.tensor->shape), TensorT<T>(p.tensor->shape)};
            states_.push_back(std::move(s));
        }
    }

    void step() {
        ++step_count_;
        for (size_t i = 0; i < params_.size(); ++i) {
            TensorT<T> grad_view(params_[i].tensor->shape, params_[i].tensor->grad);
            adam_step(*params_[i].tensor, grad_view, states_[i], step_count_, cfg_);
        }
    }

    int64_t step_count() const { return step_count_; }
    void set_step_count(int64_t n) { step_count_ = n; }
    const std::vector<ParamEntry<T>>& params() const { return params_; }
    std::vector<AdamState<T>>& states() { return states_; }
    const AdamConfig<T>& config() const { return cfg_; }

  private:
    std::vector<ParamEntry<T>> params_;
    AdamConfig<T> cfg_;
    std::vector<AdamState<T>> states_;
    int64_t step_count_ = 0;
};

}  // namespace sddpm
