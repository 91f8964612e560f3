#pragma once

#include <functional>
#include <map>

#include "sddpm/diffusion.hpp"

namespace sddpm {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int64_t worst_index = -1;
    double worst_analytic = 0.0, worst_numeric = 0.0;
    int64_t checked = 0;
    std::vector<std::pair<std::string, double>> per_param_worst;
    double min_threshold_distance = std::numeric_limits<double>::infinity();

    bool pass(double tol) const { return max_rel_err <= tol; }
};

// rel err = |analytic - numeric| / max(1, |analytic|, |numeric|)
inline double grad_rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Central finite differences of loss_fn over every non-buffer entry, compared
// against analytic grads captured beforehand. loss_fn must be a pure function
// of the parameter values.
template <typename T>
GradCheckReport finite_diff_check(const std::vector<ParamEntry<T>>& params, const std::function<double()>& loss_fn,
                                  double h, const std::map<std::string, std::vector<double>>& analytic) {
    GradCheckReport rep;
    for (const auto& e : params) {
        if (e.is_buffer) continue;
        auto it = analytic.find(e.name);
        check_arg(it != analytic.end(), strfmt("gradcheck: no analytic grads captured for %s", e.name.c_str()));
        double layer_worst = 0.0;
        for (int64_t i = 0; i < e.tensor->numel(); ++i) {
            size_t k = static_cast<size_t>(i);
            T saved = e.tensor->data[k];
            e.tensor->data[k] = saved + static_cast<T>(h);
            double up = loss_fn();
            e.tensor->data[k] = saved - static_cast<T>(h);
            double down = loss_fn();
            e.tensor->data[k] = saved;
            double numeric = (up - down) / (2.0 * h);
            double ana = it->second[k];
            double err = grad_rel_err(ana, numeric);
            layer_worst = std::max(layer_worst, err);
            ++rep.checked;
            if (err > rep.max_rel_err) {
                rep.max_rel_err = err;
                rep.worst_param = e.name;
                rep.worst_index = i;
                rep.worst_analytic = ana;
                rep.worst_numeric = numeric;
            }
        }
        rep.per_param_worst.emplace_back(e.name, layer_worst);
    }
    return rep;
}

struct ModelGradCheckOptions {
    UNetConfig config;
    uint64_t seed = 42;
    int64_t batch = 1;
    double fd_step = 1e-5;
    // Test hook: analytic grads of this parameter are sign-flipped before the
    // comparison, which must make the check fail.
    std::string fault_param;

    ModelGradCheckOptions() {
        config.in_channels = 1;
        config.image_size = 8;
        config.base_channels = 8;
        config.ch_mult = {1, 1};
        config.blocks_per_level = 1;
        config.t_steps = 2;
        config.temb_dim = 16;
    }
};

// Full-network BPTT verification: the net runs in 64-bit with every spike
// output replaced by its smooth relaxation (reset gates stay hard, matching
// the backward), on a fixed DSM-style loss. All parameters are randomized,
// including the normally zero-initialized decode conv, since a zero decode
// conv would silence every upstream gradient and make the check vacuous.
inline GradCheckReport model_gradcheck(const ModelGradCheckOptions& opts) {
    SpikingUNet<double> net(opts.config);
    RngStream init_rng(opts.seed, 101);
    net.init_params(init_rng);
    for (auto& e : net.registry()) {
        if (e.name == "conv_out.weight") kaiming_init(*e.tensor, e.tensor->dim(1) * e.tensor->dim(2) * e.tensor->dim(3), init_rng);
    }

    RngStream data_rng(opts.seed, 202);
    TensorD x0 = randn<double>({opts.batch, opts.config.in_channels, opts.config.image_size, opts.config.image_size},
                               data_rng);
    TensorD eps = randn<double>(x0.shape, data_rng);
    NoiseSchedule sched = make_schedule(100, 1e-4, 0.02);
    std::vector<int> ts(static_cast<size_t>(opts.batch), 50);
    TensorD xt = q_sample(x0, 50, eps, sched);

    ForwardOptions fwd;
    fwd.training = true;
    fwd.relaxed = true;

    auto loss_fn = [&]() {
        TensorD eps_hat = net.forward(xt, ts, fwd);
        return dsm_loss_value(eps_hat, eps);
    };

    net.zero_grad();
    TensorD eps_hat = net.forward(xt, ts, fwd);
    double base_dist = net.min_threshold_distance();
    TensorD g(eps_hat.shape);
    double scale = 2.0 / static_cast<double>(eps_hat.numel());
    for (int64_t i = 0; i < g.numel(); ++i)
        g.data[static_cast<size_t>(i)] = scale * (eps_hat.data[static_cast<size_t>(i)] - eps.data[static_cast<size_t>(i)]);
    net.backward(g);

    std::map<std::string, std::vector<double>> analytic;
    for (auto& e : net.registry()) {
        if (e.is_buffer) continue;
        std::vector<double> gvals(e.tensor->grad.begin(), e.tensor->grad.end());
        if (e.name == opts.fault_param)
            for (auto& v : gvals) v = -v;
        analytic[e.name] = std::move(gvals);
    }

    GradCheckReport rep = finite_diff_check(net.trainable_params(), loss_fn, opts.fd_step, analytic);
    rep.min_threshold_distance = base_dist;
    return rep;
}

}  // namespace sddpm
