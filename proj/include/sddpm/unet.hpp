#pragma once

#include <memory>

#include "sddpm/layers.hpp"
#include "sddpm/unet_config.hpp"

namespace sddpm {

// Sinusoidal position embedding of diffusion step t (DDPM convention):
// first half sin, second half cos, frequencies log-spaced from 1 to 1e-4.
template <typename T>
TensorT<T> sinusoidal_embedding(const std::vector<int>& ts, int64_t dim) {
    check_arg(dim >= 4 && dim % 2 == 0, "time embedding dim must be even and >= 4");
    int64_t half = dim / 2;
    TensorT<T> out({static_cast<int64_t>(ts.size()), dim});
    for (size_t b = 0; b < ts.size(); ++b) {
        T* row = out.ptr() + static_cast<int64_t>(b) * dim;
        for (int64_t i = 0; i < half; ++i) {
            double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half - 1));
            double angle = static_cast<double>(ts[b]) * freq;
            row[i] = static_cast<T>(std::sin(angle));
            row[half + i] = static_cast<T>(std::cos(angle));
        }
    }
    return out;
}

// Shared two-layer projection applied to the raw sinusoid.
template <typename T>
class TimeEmbeddingMlp {
  public:
    TimeEmbeddingMlp() = default;
    explicit TimeEmbeddingMlp(int64_t dim) : l1(dim, dim), l2(dim, dim) {}

    void init(RngStream& rng) {
        l1.init(rng);
        l2.init(rng);
    }

    TensorT<T> forward(const TensorT<T>& raw) {
        h1_ = l1.forward(raw);
        a1_ = relu_forward(h1_);
        return l2.forward(a1_);
    }

    void backward(const TensorT<T>& gy) {
        TensorT<T> ga = l2.backward(gy);
        TensorT<T> gh = relu_backward(h1_, ga);
        l1.backward(gh);
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        l1.register_params(reg, prefix + ".l1");
        l2.register_params(reg, prefix + ".l2");
    }

    Linear<T> l1, l2;

  private:
    TensorT<T> h1_, a1_;
};

// Pre-spike residual block: activation comes first, so residual sums stay in
// the real-valued domain and every neuron output is strictly binary.
//
//   S1    = SpikeNeuron(O_in)
//   O_mid = BN1(Conv1(S1)) + proj(temb) + shortcut(O_in)
//   S2    = SpikeNeuron(O_mid)
//   O_out = BN2(Conv2(S2)) + O_mid
template <typename T>
class PreSpikeResblock {
  public:
    PreSpikeResblock() = default;
    PreSpikeResblock(int64_t cin, int64_t cout, int64_t temb_dim, LifParams<T> lif)
        : neuron1(lif), neuron2(lif), conv1(cin, cout, 3, 1, 1), conv2(cout, cout, 3, 1, 1), bn1(cout), bn2(cout),
          temb_proj(temb_dim, cout), cin_(cin), cout_(cout) {
        if (cin != cout) shortcut = std::make_unique<Conv2d<T>>(cin, cout, 1, 1, 0);
    }

    void init(RngStream& rng) {
        conv1.init(rng);
        conv2.init(rng);
        temb_proj.init(rng);
        if (shortcut) shortcut->init(rng);
    }

    TensorT<T> forward(const TensorT<T>& o_in, const TensorT<T>& temb, int64_t t_steps, const ForwardOptions& opts) {
        t_steps_ = t_steps;
        TensorT<T> s1 = neuron1.forward(o_in, t_steps, opts);
        TensorT<T> h = bn1.forward(conv1.forward(s1), opts.training);
        add_example_channel_bias(h, temb_proj.forward(temb), t_steps);
        if (shortcut) {
            add_inplace(h, shortcut->forward(o_in));
        } else {
            add_inplace(h, o_in);
        }
        o_mid_ = h;
        TensorT<T> s2 = neuron2.forward(h, t_steps, opts);
        TensorT<T> out = bn2.forward(conv2.forward(s2), opts.training);
        add_inplace(out, h);
        return out;
    }

    // Returns grad w.r.t. o_in; accumulates the block's time-embedding
    // contribution into gtemb.
    TensorT<T> backward(const TensorT<T>& g_out, TensorT<T>& gtemb) {
        TensorT<T> g_mid = g_out;
        add_inplace(g_mid, neuron2.backward(conv2.backward(bn2.backward(g_out))));
        TensorT<T> gtp = example_channel_bias_backward(g_mid, t_steps_);
        add_inplace(gtemb, temb_proj.backward(gtp));
        TensorT<T> g_in = neuron1.backward(conv1.backward(bn1.backward(g_mid)));
        if (shortcut) {
            add_inplace(g_in, shortcut->backward(g_mid));
        } else {
            add_inplace(g_in, g_mid);
        }
        return g_in;
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        conv1.register_params(reg, prefix + ".conv1");
        bn1.register_params(reg, prefix + ".bn1");
        temb_proj.register_params(reg, prefix + ".temb_proj");
        conv2.register_params(reg, prefix + ".conv2");
        bn2.register_params(reg, prefix + ".bn2");
        if (shortcut) shortcut->register_params(reg, prefix + ".shortcut");
    }

    const TensorT<T>& last_o_mid() const { return o_mid_; }
    int64_t cin() const { return cin_; }
    int64_t cout() const { return cout_; }
    bool has_shortcut() const { return shortcut != nullptr; }

    SpikeNeuron<T> neuron1, neuron2;
    Conv2d<T> conv1, conv2;
    BatchNorm2d<T> bn1, bn2;
    Linear<T> temb_proj;
    std::unique_ptr<Conv2d<T>> shortcut;

  private:
    int64_t cin_ = 0, cout_ = 0, t_steps_ = 1;
    TensorT<T> o_mid_;
};

// Conventional spiking resblock (spike-domain residual). Summing two spike
// trains puts the pre-activation in {0,1,2}; kept for ablation and
// inspection, forward only.
//
//   O1 = BN1(Conv1(S_in)) + proj(temb) + S_in;  S1 = SpikeNeuron(O1)
//   O2 = BN2(Conv2(S1)) + S1;                   S2 = SpikeNeuron(O2)
template <typename T>
class StandardResblock {
  public:
    StandardResblock(int64_t channels, int64_t temb_dim, LifParams<T> lif, bool norm_enabled = true)
        : neuron1(lif), neuron2(lif), conv1(channels, channels, 3, 1, 1), conv2(channels, channels, 3, 1, 1),
          bn1(channels), bn2(channels), temb_proj(temb_dim, channels), norm_enabled_(norm_enabled) {}

    void init(RngStream& rng) {
        conv1.init(rng);
        conv2.init(rng);
        temb_proj.init(rng);
    }

    TensorT<T> forward(const TensorT<T>& s_in, const TensorT<T>& temb, int64_t t_steps, const ForwardOptions& opts) {
        TensorT<T> o1 = conv1.forward(s_in);
        if (norm_enabled_) o1 = bn1.forward(o1, opts.training);
        add_example_channel_bias(o1, temb_proj.forward(temb), t_steps);
        add_inplace(o1, s_in);
        o1_ = o1;
        s1_ = neuron1.forward(o1, t_steps, opts);
        TensorT<T> o2 = conv2.forward(s1_);
        if (norm_enabled_) o2 = bn2.forward(o2, opts.training);
        add_inplace(o2, s1_);
        o2_ = o2;
        s2_ = neuron2.forward(o2, t_steps, opts);
        return o2;
    }

    // Pre-activation sums and spike outputs of the last forward.
    const TensorT<T>& preactivation1() const { return o1_; }
    const TensorT<T>& preactivation2() const { return o2_; }
    const TensorT<T>& spikes1() const { return s1_; }
    const TensorT<T>& spikes2() const { return s2_; }

    SpikeNeuron<T> neuron1, neuron2;
    Conv2d<T> conv1, conv2;
    BatchNorm2d<T> bn1, bn2;
    Linear<T> temb_proj;

  private:
    bool norm_enabled_ = true;
    TensorT<T> o1_, o2_, s1_, s2_;
};

// Spike -> stride-2 conv -> BN.
template <typename T>
class Downsample {
  public:
    Downsample() = default;
    Downsample(int64_t channels, LifParams<T> lif) : neuron(lif), conv(channels, channels, 3, 2, 1), bn(channels) {}

    void init(RngStream& rng) { conv.init(rng); }

    TensorT<T> forward(const TensorT<T>& x, int64_t t_steps, const ForwardOptions& opts) {
        return bn.forward(conv.forward(neuron.forward(x, t_steps, opts)), opts.training);
    }
    TensorT<T> backward(const TensorT<T>& gy) { return neuron.backward(conv.backward(bn.backward(gy))); }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        conv.register_params(reg, prefix + ".conv");
        bn.register_params(reg, prefix + ".bn");
    }

    SpikeNeuron<T> neuron;
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
};

// Spike -> nearest x2 -> conv -> BN. Nearest duplication keeps spikes binary,
// so the conv still sees a spike train.
template <typename T>
class Upsample {
  public:
    Upsample() = default;
    Upsample(int64_t cin, int64_t cout, LifParams<T> lif) : neuron(lif), conv(cin, cout, 3, 1, 1), bn(cout) {}

    void init(RngStream& rng) { conv.init(rng); }

    TensorT<T> forward(const TensorT<T>& x, int64_t t_steps, const ForwardOptions& opts) {
        TensorT<T> s = neuron.forward(x, t_steps, opts);
        return bn.forward(conv.forward(nearest_upsample_2x(s)), opts.training);
    }
    TensorT<T> backward(const TensorT<T>& gy) {
        return neuron.backward(nearest_upsample_2x_backward(conv.backward(bn.backward(gy))));
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) {
        conv.register_params(reg, prefix + ".conv");
        bn.register_params(reg, prefix + ".bn");
    }

    SpikeNeuron<T> neuron;
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
};

// Per-layer entry for synaptic-operation accounting.
struct LayerDesc {
    enum class Cost { Encode, Spike, AnalogPerStep, AnalogOnce };
    std::string name;
    int64_t macs = 0;  // per image, per time step
    Cost cost = Cost::AnalogOnce;
    std::string rate_source;  // neuron feeding this layer (Spike cost only)
};

// The noise network eps_theta(x_t, t). Analog image in, real-valued noise
// estimate out; everything between the encoding conv and the decoding conv
// communicates through spikes or pre-spike residual sums.
template <typename T>
class SpikingUNet {
  public:
    explicit SpikingUNet(const UNetConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        lif_ = LifParams<T>{static_cast<T>(cfg.lif_decay), static_cast<T>(cfg.lif_v_th), T(0),
                            static_cast<T>(cfg.lif_surrogate_alpha)};
        int64_t levels = cfg.levels();
        temb_mlp = TimeEmbeddingMlp<T>(cfg.temb_dim);
        conv_in = Conv2d<T>(cfg.in_channels, cfg.channels_at(0), 3, 1, 1);
        bn_in = BatchNorm2d<T>(cfg.channels_at(0));
        for (int64_t l = 0; l < levels; ++l) {
            int64_t cin = l == 0 ? cfg.channels_at(0) : cfg.channels_at(l - 1);
            std::vector<PreSpikeResblock<T>> blocks;
            for (int64_t k = 0; k < cfg.blocks_per_level; ++k) {
                blocks.emplace_back(k == 0 ? cin : cfg.channels_at(l), cfg.channels_at(l), cfg.temb_dim, lif_);
            }
            down_blocks.push_back(std::move(blocks));
            if (l + 1 < levels) down_samples.emplace_back(cfg.channels_at(l), lif_);
        }
        int64_t cmid = cfg.channels_at(levels - 1);
        mid1 = PreSpikeResblock<T>(cmid, cmid, cfg.temb_dim, lif_);
        mid2 = PreSpikeResblock<T>(cmid, cmid, cfg.temb_dim, lif_);
        for (int64_t l = 0; l < levels; ++l) {
            int64_t c = cfg.channels_at(l);
            std::vector<PreSpikeResblock<T>> blocks;
            for (int64_t k = 0; k < cfg.blocks_per_level; ++k) {
                blocks.emplace_back(k == 0 ? 2 * c : c, c, cfg.temb_dim, lif_);
            }
            up_blocks.push_back(std::move(blocks));
            if (l > 0) up_samples.emplace_back(cfg.channels_at(l), cfg.channels_at(l - 1), lif_);
        }
        out_neuron = SpikeNeuron<T>(lif_);
        conv_out = Conv2d<T>(cfg.channels_at(0), cfg.in_channels, 3, 1, 1);
        build_registry();
    }

    // The registry holds pointers into member layers.
    SpikingUNet(const SpikingUNet&) = delete;
    SpikingUNet& operator=(const SpikingUNet&) = delete;

    // Kaiming init everywhere; the decoding conv stays zero so a fresh model
    // predicts exactly zero noise.
    void init_params(RngStream& rng) {
        temb_mlp.init(rng);
        conv_in.init(rng);
        for (auto& lvl : down_blocks)
            for (auto& b : lvl) b.init(rng);
        for (auto& d : down_samples) d.init(rng);
        mid1.init(rng);
        mid2.init(rng);
        for (auto& lvl : up_blocks)
            for (auto& b : lvl) b.init(rng);
        for (auto& u : up_samples) u.init(rng);
        // conv_out stays zero-initialized
    }

    // Replicates the analog input T times, fuses time into the batch axis and
    // applies the first Conv-BN.
    TensorT<T> encode(const TensorT<T>& x, const ForwardOptions& opts) {
        check_arg(x.ndim() == 4 && x.dim(1) == cfg_.in_channels && x.dim(2) == cfg_.image_size &&
                      x.dim(3) == cfg_.image_size,
                  strfmt("unet: input shape %s does not match config (C=%lld, size=%lld)", shape_str(x.shape).c_str(),
                         static_cast<long long>(cfg_.in_channels), static_cast<long long>(cfg_.image_size)));
        return bn_in.forward(conv_in.forward(replicate_time(x, cfg_.t_steps)), opts.training);
    }

    TensorT<T> forward(const TensorT<T>& x, const std::vector<int>& ts, const ForwardOptions& opts = {}) {
        check_arg(static_cast<int64_t>(ts.size()) == x.dim(0), "unet: one diffusion step per batch example required");
        last_batch_ = ts.size();
        int64_t t_steps = cfg_.t_steps;
        TensorT<T> temb = temb_mlp.forward(sinusoidal_embedding<T>(ts, cfg_.temb_dim));

        TensorT<T> h = encode(x, opts);
        skips_.clear();
        for (size_t l = 0; l < down_blocks.size(); ++l) {
            for (auto& b : down_blocks[l]) h = b.forward(h, temb, t_steps, opts);
            skips_.push_back(h);
            if (l + 1 < down_blocks.size()) h = down_samples[l].forward(h, t_steps, opts);
        }
        h = mid1.forward(h, temb, t_steps, opts);
        h = mid2.forward(h, temb, t_steps, opts);
        for (int64_t l = cfg_.levels() - 1; l >= 0; --l) {
            h = concat_channels(h, skips_[static_cast<size_t>(l)]);
            for (auto& b : up_blocks[static_cast<size_t>(l)]) h = b.forward(h, temb, t_steps, opts);
            if (l > 0) h = up_samples[static_cast<size_t>(l - 1)].forward(h, t_steps, opts);
        }
        TensorT<T> s = out_neuron.forward(h, t_steps, opts);
        TensorT<T> decoded = time_mean(s, t_steps);
        TensorT<T> eps = conv_out.forward(decoded);
        check_finite(eps, "unet output");
        return eps;
    }

    TensorT<T> forward(const TensorT<T>& x, int t, const ForwardOptions& opts = {}) {
        return forward(x, std::vector<int>(static_cast<size_t>(x.dim(0)), t), opts);
    }

    // Chains gradients back through the whole net, accumulating into the
    // parameter .grad buffers. No input gradient is returned; nothing needs it.
    void backward(const TensorT<T>& g_eps) {
        int64_t t_steps = cfg_.t_steps;
        TensorT<T> gtemb({static_cast<int64_t>(last_batch_), cfg_.temb_dim});
        TensorT<T> g = time_mean_backward(conv_out.backward(g_eps), t_steps);
        g = out_neuron.backward(g);
        for (int64_t l = 0; l < cfg_.levels(); ++l) {
            if (l > 0) g = up_samples[static_cast<size_t>(l - 1)].backward(g);
            auto& blocks = up_blocks[static_cast<size_t>(l)];
            for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) g = it->backward(g, gtemb);
            TensorT<T> g_up, g_skip;
            split_channels_backward(g, g.dim(1) - cfg_.channels_at(l), g_up, g_skip);
            gskips_[static_cast<size_t>(l)] = std::move(g_skip);
            g = std::move(g_up);
        }
        g = mid2.backward(g, gtemb);
        g = mid1.backward(g, gtemb);
        for (int64_t l = cfg_.levels() - 1; l >= 0; --l) {
            add_inplace(g, gskips_[static_cast<size_t>(l)]);
            auto& blocks = down_blocks[static_cast<size_t>(l)];
            for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) g = it->backward(g, gtemb);
            if (l > 0) g = down_samples[static_cast<size_t>(l - 1)].backward(g);
        }
        conv_in.backward(bn_in.backward(g));
        temb_mlp.backward(gtemb);
    }

    const ParamRegistry<T>& registry() const { return registry_; }
    ParamRegistry<T>& registry() { return registry_; }

    std::vector<ParamEntry<T>> trainable_params() {
        std::vector<ParamEntry<T>> out;
        for (auto& e : registry_)
            if (!e.is_buffer) out.push_back(e);
        return out;
    }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto& e : registry_)
            if (!e.is_buffer) n += e.tensor->numel();
        return n;
    }

    void zero_grad() {
        for (auto& e : registry_)
            if (!e.is_buffer) e.tensor->zero_grad();
    }

    // Refresh / restore BN running-stat snapshot views around checkpointing.
    void sync_buffers() { for_each_bn([](BatchNorm2d<T>& bn) { bn.sync_views(); }); }
    void load_buffers() { for_each_bn([](BatchNorm2d<T>& bn) { bn.load_views(); }); }

    // Per-layer MAC counts and cost classes for the energy profile, per image
    // and per time step.
    std::vector<LayerDesc> describe() const {
        std::vector<LayerDesc> out;
        int64_t hw = cfg_.image_size;
        auto conv_macs = [](const Conv2d<T>& c, int64_t size) {
            int64_t os = c.stride() == 2 ? size / 2 : size;
            return c.macs_per_image(os, os);
        };
        out.push_back({"conv_in", conv_macs(conv_in, hw), LayerDesc::Cost::Encode, ""});
        auto block_desc = [&](const PreSpikeResblock<T>& b, const std::string& name, int64_t size) {
            out.push_back({name + ".conv1", b.conv1.macs_per_image(size, size), LayerDesc::Cost::Spike, name + ".neuron1"});
            out.push_back({name + ".conv2", b.conv2.macs_per_image(size, size), LayerDesc::Cost::Spike, name + ".neuron2"});
            if (b.has_shortcut())
                out.push_back({name + ".shortcut", b.shortcut->macs_per_image(size, size), LayerDesc::Cost::AnalogPerStep, ""});
            out.push_back({name + ".temb_proj", b.temb_proj.macs(), LayerDesc::Cost::AnalogOnce, ""});
        };
        int64_t size = hw;
        for (size_t l = 0; l < down_blocks.size(); ++l) {
            for (size_t k = 0; k < down_blocks[l].size(); ++k)
                block_desc(down_blocks[l][k], strfmt("down.%zu.block.%zu", l, k), size);
            if (l + 1 < down_blocks.size()) {
                out.push_back({strfmt("down.%zu.downsample", l), conv_macs(down_samples[l].conv, size),
                               LayerDesc::Cost::Spike, strfmt("down.%zu.downsample.neuron", l)});
                size /= 2;
            }
        }
        block_desc(mid1, "mid.0", size);
        block_desc(mid2, "mid.1", size);
        for (int64_t l = cfg_.levels() - 1; l >= 0; --l) {
            for (size_t k = 0; k < up_blocks[static_cast<size_t>(l)].size(); ++k)
                block_desc(up_blocks[static_cast<size_t>(l)][k], strfmt("up.%lld.block.%zu", static_cast<long long>(l), k), size);
            if (l > 0) {
                size *= 2;
                out.push_back({strfmt("up.%lld.upsample", static_cast<long long>(l)),
                               up_samples[static_cast<size_t>(l - 1)].conv.macs_per_image(size, size),
                               LayerDesc::Cost::Spike, strfmt("up.%lld.upsample.neuron", static_cast<long long>(l))});
            }
        }
        out.push_back({"conv_out", conv_macs(conv_out, hw), LayerDesc::Cost::AnalogOnce, ""});
        out.push_back({"temb_mlp.l1", temb_mlp.l1.macs(), LayerDesc::Cost::AnalogOnce, ""});
        out.push_back({"temb_mlp.l2", temb_mlp.l2.macs(), LayerDesc::Cost::AnalogOnce, ""});
        return out;
    }

    // Firing rates recorded by the last collect_rates forward, keyed like
    // LayerDesc::rate_source.
    std::vector<std::pair<std::string, double>> firing_rates() const {
        std::vector<std::pair<std::string, double>> out;
        auto block_rates = [&](const PreSpikeResblock<T>& b, const std::string& name) {
            out.emplace_back(name + ".neuron1", b.neuron1.rate());
            out.emplace_back(name + ".neuron2", b.neuron2.rate());
        };
        for (size_t l = 0; l < down_blocks.size(); ++l) {
            for (size_t k = 0; k < down_blocks[l].size(); ++k)
                block_rates(down_blocks[l][k], strfmt("down.%zu.block.%zu", l, k));
            if (l + 1 < down_blocks.size())
                out.emplace_back(strfmt("down.%zu.downsample.neuron", l), down_samples[l].neuron.rate());
        }
        block_rates(mid1, "mid.0");
        block_rates(mid2, "mid.1");
        for (int64_t l = cfg_.levels() - 1; l >= 0; --l) {
            for (size_t k = 0; k < up_blocks[static_cast<size_t>(l)].size(); ++k)
                block_rates(up_blocks[static_cast<size_t>(l)][k], strfmt("up.%lld.block.%zu", static_cast<long long>(l), k));
            if (l > 0)
                out.emplace_back(strfmt("up.%lld.upsample.neuron", static_cast<long long>(l)),
                                 up_samples[static_cast<size_t>(l - 1)].neuron.rate());
        }
        out.emplace_back("out.neuron", out_neuron.rate());
        return out;
    }

    double min_threshold_distance() const {
        double best = std::numeric_limits<double>::infinity();
        auto upd = [&](const SpikeNeuron<T>& n) { best = std::min(best, n.min_threshold_distance()); };
        for (const auto& lvl : down_blocks)
            for (const auto& b : lvl) {
                upd(b.neuron1);
                upd(b.neuron2);
            }
        for (const auto& d : down_samples) upd(d.neuron);
        upd(mid1.neuron1); upd(mid1.neuron2);
        upd(mid2.neuron1); upd(mid2.neuron2);
        for (const auto& lvl : up_blocks)
            for (const auto& b : lvl) {
                upd(b.neuron1);
                upd(b.neuron2);
            }
        for (const auto& u : up_samples) upd(u.neuron);
        upd(out_neuron);
        return best;
    }

    const UNetConfig& config() const { return cfg_; }

    TimeEmbeddingMlp<T> temb_mlp;
    Conv2d<T> conv_in;
    BatchNorm2d<T> bn_in;
    std::vector<std::vector<PreSpikeResblock<T>>> down_blocks;
    std::vector<Downsample<T>> down_samples;
    PreSpikeResblock<T> mid1, mid2;
    std::vector<std::vector<PreSpikeResblock<T>>> up_blocks;
    std::vector<Upsample<T>> up_samples;
    SpikeNeuron<T> out_neuron;
    Conv2d<T> conv_out;

  private:
    void build_registry() {
        registry_.clear();
        temb_mlp.register_params(registry_, "temb_mlp");
        conv_in.register_params(registry_, "conv_in");
        bn_in.register_params(registry_, "bn_in");
        for (size_t l = 0; l < down_blocks.size(); ++l) {
            for (size_t k = 0; k < down_blocks[l].size(); ++k)
                down_blocks[l][k].register_params(registry_, strfmt("down.%zu.block.%zu", l, k));
            if (l + 1 < down_blocks.size()) down_samples[l].register_params(registry_, strfmt("down.%zu.downsample", l));
        }
        mid1.register_params(registry_, "mid.0");
        mid2.register_params(registry_, "mid.1");
        for (size_t l = 0; l < up_blocks.size(); ++l) {
            for (size_t k = 0; k < up_blocks[l].size(); ++k)
                up_blocks[l][k].register_params(registry_, strfmt("up.%zu.block.%zu", l, k));
            if (l > 0) up_samples[l - 1].register_params(registry_, strfmt("up.%zu.upsample", l));
        }
        conv_out.register_params(registry_, "conv_out");
        gskips_.resize(static_cast<size_t>(cfg_.levels()));
    }

    template <typename Fn>
    void for_each_bn(Fn fn) {
        fn(bn_in);
        for (auto& lvl : down_blocks)
            for (auto& b : lvl) {
                fn(b.bn1);
                fn(b.bn2);
            }
        for (auto& d : down_samples) fn(d.bn);
        fn(mid1.bn1); fn(mid1.bn2);
        fn(mid2.bn1); fn(mid2.bn2);
        for (auto& lvl : up_blocks)
            for (auto& b : lvl) {
                fn(b.bn1);
                fn(b.bn2);
            }
        for (auto& u : up_samples) fn(u.bn);
    }

    UNetConfig cfg_;
    LifParams<T> lif_{};
    ParamRegistry<T> registry_;
    std::vector<TensorT<T>> skips_;
    std::vector<TensorT<T>> gskips_;
    size_t last_batch_ = 0;
};

}  // namespace sddpm
