#pragma once

#include <functional>

#include "sddpm/rng.hpp"
#include "sddpm/schedule.hpp"
#include "sddpm/unet.hpp"

namespace sddpm {

// Inference-time spike-threshold override. Lowering the threshold below the
// training value acts as inhibitory guidance (more spikes), raising it as
// excitatory guidance; equal thresholds are bit-identical to no guidance.
struct GuidanceConfig {
    enum class Mode { Off, Inhibitory, Excitatory };

    double v_th_prime = 1.0;
    double v_th_train = 1.0;

    static GuidanceConfig off(double v_th_train) { return {v_th_train, v_th_train}; }
    static GuidanceConfig with_threshold(double v_th_prime, double v_th_train) { return {v_th_prime, v_th_train}; }

    Mode mode() const {
        if (v_th_prime < v_th_train) return Mode::Inhibitory;
        if (v_th_prime > v_th_train) return Mode::Excitatory;
        return Mode::Off;
    }
};

// x_t = a(t) x0 + sigma(t) eps
template <typename T>
TensorT<T> q_sample(const TensorT<T>& x0, int64_t t, const TensorT<T>& eps, const NoiseSchedule& sched) {
    check_arg(x0.same_shape(eps), strfmt("q_sample: x0 shape %s != eps shape %s", shape_str(x0.shape).c_str(),
                                         shape_str(eps.shape).c_str()));
    T a = static_cast<T>(sched.a(t));
    T s = static_cast<T>(sched.sigma(t));
    TensorT<T> xt(x0.shape);
    for (int64_t i = 0; i < x0.numel(); ++i)
        xt.data[static_cast<size_t>(i)] = a * x0.data[static_cast<size_t>(i)] + s * eps.data[static_cast<size_t>(i)];
    return xt;
}

// Noise predictor abstraction used by the sampler and loss evaluation.
template <typename T>
class EpsModel {
  public:
    virtual ~EpsModel() = default;
    virtual TensorT<T> eps(const TensorT<T>& x_t, const std::vector<int>& ts) = 0;
};

template <typename T>
class FunctionEpsModel : public EpsModel<T> {
  public:
    using Fn = std::function<TensorT<T>(const TensorT<T>&, const std::vector<int>&)>;
    explicit FunctionEpsModel(Fn fn) : fn_(std::move(fn)) {}
    TensorT<T> eps(const TensorT<T>& x_t, const std::vector<int>& ts) override { return fn_(x_t, ts); }

  private:
    Fn fn_;
};

// Exact optimum for Gaussian data x0 ~ N(mu, s2 I):
//   eps*(x_t, t) = sigma(t) (x_t - a(t) mu) / (a(t)^2 s2 + sigma(t)^2)
template <typename T>
TensorT<T> gaussian_oracle_eps(const TensorT<T>& x_t, int64_t t, double mu, double s2, const NoiseSchedule& sched) {
    double a = sched.a(t), sig = sched.sigma(t);
    double denom = a * a * s2 + sig * sig;
    TensorT<T> out(x_t.shape);
    for (int64_t i = 0; i < x_t.numel(); ++i)
        out.data[static_cast<size_t>(i)] =
            static_cast<T>(sig * (static_cast<double>(x_t.data[static_cast<size_t>(i)]) - a * mu) / denom);
    return out;
}

template <typename T>
class GaussianOracleModel : public EpsModel<T> {
  public:
    GaussianOracleModel(double mu, double s2, const NoiseSchedule& sched) : mu_(mu), s2_(s2), sched_(sched) {}
    TensorT<T> eps(const TensorT<T>& x_t, const std::vector<int>& ts) override {
        for (size_t i = 1; i < ts.size(); ++i) check_arg(ts[i] == ts[0], "oracle model expects a shared step");
        return gaussian_oracle_eps(x_t, ts.empty() ? 1 : ts[0], mu_, s2_, sched_);
    }

  private:
    double mu_, s2_;
    const NoiseSchedule& sched_;
};

// Wraps a trained net for sampling: BN in eval mode, spikes not relaxed, and
// the guidance threshold applied to every neuron for the wrapped calls only.
template <typename T>
class UNetEpsModel : public EpsModel<T> {
  public:
    UNetEpsModel(SpikingUNet<T>& net, const GuidanceConfig& guidance) : net_(net) {
        opts_.training = false;
        opts_.v_th_override = guidance.v_th_prime;
    }
    TensorT<T> eps(const TensorT<T>& x_t, const std::vector<int>& ts) override { return net_.forward(x_t, ts, opts_); }

  private:
    SpikingUNet<T>& net_;
    ForwardOptions opts_;
};

// One reverse step:
//   x_{t-1} = (x_t - beta_t / sigma(t) * eps_hat) / sqrt(alpha_t) + sqrt(beta_tilde_t) z
template <typename T>
TensorT<T> reverse_step(const TensorT<T>& x_t, const TensorT<T>& eps_hat, int64_t t, const NoiseSchedule& sched,
                        const TensorT<T>* z) {
    check_arg(x_t.same_shape(eps_hat), "reverse_step: shape mismatch between x_t and eps_hat");
    T inv_sqrt_alpha = static_cast<T>(1.0 / std::sqrt(sched.alpha(t)));
    T coef = static_cast<T>(sched.beta(t) / sched.sigma(t));
    T noise_scale = static_cast<T>(std::sqrt(sched.beta_tilde(t)));
    TensorT<T> out(x_t.shape);
    for (int64_t i = 0; i < x_t.numel(); ++i) {
        size_t k = static_cast<size_t>(i);
        T mean = inv_sqrt_alpha * (x_t.data[k] - coef * eps_hat.data[k]);
        out.data[k] = z ? mean + noise_scale * z->data[k] : mean;
    }
    return out;
}

// Ancestral DDPM sampling from x_N ~ N(0, I) down to x_0. Noise is drawn from
// `rng` only, so a fixed stream gives bit-identical samples.
template <typename T>
TensorT<T> ancestral_sample(EpsModel<T>& model, const NoiseSchedule& sched, const std::vector<int64_t>& shape,
                            RngStream& rng) {
    TensorT<T> x = randn<T>(shape, rng);
    std::vector<int> ts(static_cast<size_t>(shape[0]));
    for (int64_t t = sched.steps(); t >= 1; --t) {
        std::fill(ts.begin(), ts.end(), static_cast<int>(t));
        TensorT<T> eps_hat = model.eps(x, ts);
        if (t > 1) {
            TensorT<T> z = randn<T>(shape, rng);
            x = reverse_step(x, eps_hat, t, sched, &z);
        } else {
            x = reverse_step<T>(x, eps_hat, t, sched, nullptr);
        }
    }
    check_finite(x, "ancestral_sample output");
    return x;
}

template <typename T>
TensorT<T> ancestral_sample(SpikingUNet<T>& net, const NoiseSchedule& sched, const std::vector<int64_t>& shape,
                            RngStream& rng, const GuidanceConfig& guidance) {
    UNetEpsModel<T> model(net, guidance);
    return ancestral_sample(model, sched, shape, rng);
}

// ---- denoising score matching ------------------------------------------------

// Per-example diffusion steps and noise drawn for one DSM minibatch.
template <typename T>
struct DsmDraw {
    std::vector<int> ts;
    TensorT<T> eps;
};

template <typename T>
DsmDraw<T> dsm_draw(const std::vector<int64_t>& x0_shape, const NoiseSchedule& sched, RngStream& rng) {
    DsmDraw<T> d;
    d.ts.resize(static_cast<size_t>(x0_shape[0]));
    for (auto& t : d.ts) t = static_cast<int>(rng.bounded(static_cast<uint64_t>(sched.steps()))) + 1;
    d.eps = randn<T>(x0_shape, rng);
    return d;
}

// Builds x_t with per-example steps: x_t[i] = a(t_i) x0[i] + sigma(t_i) eps[i].
template <typename T>
TensorT<T> q_sample_batch(const TensorT<T>& x0, const DsmDraw<T>& draw, const NoiseSchedule& sched) {
    TensorT<T> xt(x0.shape);
    int64_t inner = x0.numel() / x0.dim(0);
    for (int64_t b = 0; b < x0.dim(0); ++b) {
        T a = static_cast<T>(sched.a(draw.ts[static_cast<size_t>(b)]));
        T s = static_cast<T>(sched.sigma(draw.ts[static_cast<size_t>(b)]));
        const T* px = x0.ptr() + b * inner;
        const T* pe = draw.eps.ptr() + b * inner;
        T* pt = xt.ptr() + b * inner;
        for (int64_t i = 0; i < inner; ++i) pt[i] = a * px[i] + s * pe[i];
    }
    return xt;
}

// Squared error against the injected noise, averaged over batch and
// dimensions. Accumulated in double so the value is permutation-stable.
template <typename T>
double dsm_loss_value(const TensorT<T>& eps_hat, const TensorT<T>& eps) {
    check_arg(eps_hat.same_shape(eps), "dsm loss: prediction/noise shape mismatch");
    double acc = 0.0;
    for (int64_t i = 0; i < eps.numel(); ++i) {
        double d = static_cast<double>(eps_hat.data[static_cast<size_t>(i)]) -
                   static_cast<double>(eps.data[static_cast<size_t>(i)]);
        acc += d * d;
    }
    return acc / static_cast<double>(eps.numel());
}

// Loss under a fixed draw, for any predictor. No backward.
template <typename T>
double dsm_loss_with(EpsModel<T>& model, const TensorT<T>& x0, const DsmDraw<T>& draw, const NoiseSchedule& sched) {
    TensorT<T> xt = q_sample_batch(x0, draw, sched);
    TensorT<T> eps_hat = model.eps(xt, draw.ts);
    return dsm_loss_value(eps_hat, draw.eps);
}

// Full training objective: draws (t, eps), runs the net in training mode and
// backpropagates d loss / d eps_hat = 2 (eps_hat - eps) / numel into the
// parameter gradients.
template <typename T>
double dsm_loss(SpikingUNet<T>& net, const TensorT<T>& x0, const NoiseSchedule& sched, RngStream& rng,
                bool do_backward = true) {
    check_arg(x0.dim(0) >= 1, "dsm loss: empty batch");
    DsmDraw<T> draw = dsm_draw<T>(x0.shape, sched, rng);
    TensorT<T> xt = q_sample_batch(x0, draw, sched);
    ForwardOptions opts;
    opts.training = true;
    TensorT<T> eps_hat = net.forward(xt, draw.ts, opts);
    double loss = dsm_loss_value(eps_hat, draw.eps);
    if (do_backward) {
        TensorT<T> g(eps_hat.shape);
        T scale = T(2) / static_cast<T>(eps_hat.numel());
        for (int64_t i = 0; i < g.numel(); ++i) {
            size_t k = static_cast<size_t>(i);
            g.data[k] = scale * (eps_hat.data[k] - draw.eps.data[k]);
        }
        net.backward(g);
    }
    return loss;
}

}  // namespace sddpm
