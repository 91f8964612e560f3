#include "sddpm/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sddpm/checkpoint.hpp"
#include "sddpm/energy.hpp"
#include "sddpm/gradcheck.hpp"
#include "sddpm/image_io.hpp"
#include "sddpm/trainer.hpp"

namespace sddpm {

namespace fs = std::filesystem;

namespace {

Dataset build_dataset(const RunConfig& cfg) {
    Dataset ds;
    if (cfg.dataset_kind == "idx") {
        std::optional<std::string> labels;
        if (!cfg.dataset_labels.empty()) labels = cfg.dataset_labels;
        ds = load_idx(cfg.dataset_path, labels, cfg.image_size);
    } else {
        SynthKind kind = cfg.dataset_kind == "blobs" ? SynthKind::Blobs : SynthKind::TwoMode;
        ds = synth_dataset(kind, cfg.dataset_n, cfg.image_size, cfg.seed, cfg.dataset_noise_sigma);
    }
    if (ds.images.dim(1) != cfg.in_channels || ds.images.dim(2) != cfg.image_size || ds.images.dim(3) != cfg.image_size)
        throw DataError(strfmt("dataset %s has shape %s, config wants C=%lld size=%lld", ds.source.c_str(),
                               shape_str(ds.images.shape).c_str(), static_cast<long long>(cfg.in_channels),
                               static_cast<long long>(cfg.image_size)));
    return ds;
}

void write_effective_config(const RunConfig& cfg) {
    std::ofstream f(fs::path(cfg.out_dir) / "effective_config.txt");
    if (!f) throw DataError(strfmt("%s: cannot write effective config", cfg.out_dir.c_str()));
    f << cfg.to_text();
}

std::vector<RngState> stream_states(const RngStream& data, const RngStream& dsm) {
    return {{data.seed(), data.stream_id(), data.counter()}, {dsm.seed(), dsm.stream_id(), dsm.counter()}};
}

std::string vth_tag(double v) { return strfmt("%.4f", v); }

}  // namespace

void cmd_train(const RunConfig& cfg, const std::optional<std::string>& resume_checkpoint) {
    fs::create_directories(cfg.out_dir);
    write_effective_config(cfg);
    Dataset ds = build_dataset(cfg);
    NoiseSchedule sched = make_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);

    SpikingUNet<float> net(cfg.unet_config());
    AdamConfig<float> adam_cfg;
    adam_cfg.lr = cfg.lr;
    AdamOptimizer<float> opt(net.trainable_params(), adam_cfg);

    RngStream data_rng(cfg.seed, streams::kData), dsm_rng(cfg.seed, streams::kDsm);
    int64_t start_step = 0;
    if (resume_checkpoint) {
        Checkpoint ck = load_checkpoint(*resume_checkpoint);
        apply_checkpoint(ck, net, &opt);
        if (ck.rng_states.size() != 2) throw DataError("checkpoint: expected two rng stream states");
        data_rng = RngStream(ck.rng_states[0].seed, ck.rng_states[0].stream_id, ck.rng_states[0].counter);
        dsm_rng = RngStream(ck.rng_states[1].seed, ck.rng_states[1].stream_id, ck.rng_states[1].counter);
        start_step = static_cast<int64_t>(ck.step);
        std::cout << "resumed from " << *resume_checkpoint << " at step " << start_step << "\n";
    } else {
        RngStream init_rng(cfg.seed, streams::kInit);
        net.init_params(init_rng);
    }

    std::ofstream loss_log(fs::path(cfg.out_dir) / "loss.csv");
    if (!loss_log) throw DataError(strfmt("%s: cannot write loss log", cfg.out_dir.c_str()));
    loss_log << "step,loss\n";

    auto save = [&](int64_t step, const std::string& name) {
        Checkpoint ck = make_checkpoint(net, static_cast<uint64_t>(step), stream_states(data_rng, dsm_rng), &opt);
        save_checkpoint((fs::path(cfg.out_dir) / name).string(), ck);
    };

    auto t0 = std::chrono::steady_clock::now();
    run_training<float>(net, opt, ds, sched, cfg.batch, start_step, cfg.train_steps, data_rng, dsm_rng,
                        [&](int64_t step, double loss) {
                            loss_log << step << "," << strfmt("%.9g", loss) << "\n";
                            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count();
                            std::cout << step << "," << strfmt("%.9g", loss) << "," << ms << "\n";
                            if (step % cfg.checkpoint_every == 0)
                                save(step, strfmt("ckpt_%08lld.sddpm", static_cast<long long>(step)));
                        });
    save(cfg.train_steps, "ckpt_final.sddpm");
    std::cout << "final checkpoint: " << (fs::path(cfg.out_dir) / "ckpt_final.sddpm").string() << "\n";
}

void cmd_sample(const RunConfig& cfg, const std::string& checkpoint_path) {
    fs::create_directories(cfg.out_dir);
    write_effective_config(cfg);
    Checkpoint ck = load_checkpoint(checkpoint_path);
    if (!(ck.config == cfg.unet_config()))
        throw DataError("sample: checkpoint architecture does not match the requested config");
    SpikingUNet<float> net(ck.config);
    apply_checkpoint(ck, net);
    NoiseSchedule sched = make_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);

    std::vector<double> thresholds = cfg.sweep_thresholds();
    if (thresholds.empty()) thresholds.push_back(cfg.guidance_v_th);

    std::ofstream summary(fs::path(cfg.out_dir) / "sample_summary.csv");
    summary << "v_th,mode,grid_file,mean_firing_rate,pixel_mean,pixel_min,pixel_max\n";

    for (double vth : thresholds) {
        GuidanceConfig guidance = GuidanceConfig::with_threshold(vth, cfg.v_th);
        RngStream rng(cfg.seed, streams::kSample);
        TensorT<float> x = ancestral_sample(net, sched, {cfg.sample_count, cfg.in_channels, cfg.image_size,
                                                         cfg.image_size}, rng, guidance);
        std::string tag = vth_tag(vth);
        std::string grid_name = "samples_vth" + tag + ".pgm";
        write_image_grid(x, cfg.grid_cols, (fs::path(cfg.out_dir) / grid_name).string());
        write_npy(x, (fs::path(cfg.out_dir) / ("samples_vth" + tag + ".npy")).string());

        // probe forward at t=1 with the same override, for the rate summary
        ForwardOptions probe;
        probe.collect_rates = true;
        probe.v_th_override = vth;
        net.forward(x, 1, probe);
        double rate_sum = 0.0;
        auto rates = net.firing_rates();
        for (auto& [name, r] : rates) rate_sum += r;
        double mean_rate = rates.empty() ? 0.0 : rate_sum / static_cast<double>(rates.size());

        double mn = x.data[0], mx = x.data[0], mean = 0.0;
        for (float v : x.data) {
            mn = std::min<double>(mn, v);
            mx = std::max<double>(mx, v);
            mean += v;
        }
        mean /= static_cast<double>(x.numel());
        const char* mode = guidance.mode() == GuidanceConfig::Mode::Off
                               ? "off"
                               : (guidance.mode() == GuidanceConfig::Mode::Inhibitory ? "inhibitory" : "excitatory");
        summary << strfmt("%.6g,%s,%s,%.6f,%.6f,%.6f,%.6f\n", vth, mode, grid_name.c_str(), mean_rate, mean, mn, mx);
        std::cout << "v_th'=" << tag << " mode=" << mode << " mean_rate=" << strfmt("%.4f", mean_rate) << " -> "
                  << grid_name << "\n";
    }
}

void cmd_profile(const RunConfig& cfg, const std::string& checkpoint_path) {
    fs::create_directories(cfg.out_dir);
    write_effective_config(cfg);
    Checkpoint ck = load_checkpoint(checkpoint_path);
    if (!(ck.config == cfg.unet_config()))
        throw DataError("profile: checkpoint architecture does not match the requested config");
    SpikingUNet<float> net(ck.config);
    apply_checkpoint(ck, net);
    NoiseSchedule sched = make_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);

    Dataset ds = build_dataset(cfg);
    RngStream probe_rng(cfg.seed, streams::kProbe);
    TensorT<float> probe = gather_batch<float>(ds, std::min(cfg.probe_batch, ds.count()), probe_rng);
    auto rates = measure_firing_rates(net, probe, sched, probe_rng);

    EnergyConstants constants{cfg.e_mac_pj, cfg.e_ac_pj};
    auto counts = net.describe();
    AuxOpCounts aux = count_aux_ops(ck.config);
    EnergyReport snn = energy_report_snn(counts, rates, ck.config.t_steps, constants);
    EnergyReport ann = energy_report_ann(counts, constants);
    snn.bn_element_ops = ann.bn_element_ops = aux.bn_elements;
    snn.add_element_ops = ann.add_element_ops = aux.add_elements;

    {
        std::ofstream txt(fs::path(cfg.out_dir) / "energy_report.txt");
        write_energy_text(snn, txt);
        txt << "\n";
        write_energy_text(ann, txt);
    }
    {
        std::ofstream csv(fs::path(cfg.out_dir) / "energy_report.csv");
        write_energy_csv_header(csv);
        write_energy_csv(snn, csv);
        write_energy_csv(ann, csv);
    }
    std::cout << strfmt("snn total: %.3f pJ (T=%lld)\n", snn.total_pj, static_cast<long long>(snn.t_steps));
    std::cout << strfmt("ann total: %.3f pJ\n", ann.total_pj);
    std::cout << strfmt("snn/ann ratio: %.4f\n", snn.total_pj / ann.total_pj);
}

bool cmd_gradcheck(uint64_t seed) {
    ModelGradCheckOptions opts;
    opts.seed = seed;
    GradCheckReport rep = model_gradcheck(opts);

    auto worst = rep.per_param_worst;
    std::sort(worst.begin(), worst.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::cout << "relaxed-mode finite-difference check, " << rep.checked << " parameters\n";
    std::cout << "worst offenders:\n";
    for (size_t i = 0; i < worst.size() && i < 8; ++i)
        std::cout << strfmt("  %-32s rel err %.3e\n", worst[i].first.c_str(), worst[i].second);
    std::cout << strfmt("min |U - v_th| during forward: %.3e\n", rep.min_threshold_distance);
    std::cout << strfmt("max rel err: %.3e at %s[%lld]\n", rep.max_rel_err, rep.worst_param.c_str(),
                        static_cast<long long>(rep.worst_index));
    bool ok = rep.pass(1e-4);
    std::cout << (ok ? "PASS" : "FAIL") << " (tolerance 1e-4)\n";
    return ok;
}

}  // namespace sddpm
