#pragma once

#include <string>
#include <vector>

#include "sddpm/unet_config.hpp"

namespace sddpm {

// Flat key=value run configuration ('#' comments, no nesting). Parsing is
// strict: unknown keys are errors. The effective config echoes back through
// to_text() and re-parses to the same run.
struct RunConfig {
    // model
    int64_t in_channels = 1;
    int64_t image_size = 8;
    int64_t base_channels = 16;
    std::vector<int64_t> ch_mult = {1, 2};
    int64_t blocks_per_level = 1;
    int64_t temb_dim = 64;
    int64_t time_steps = 4;
    double v_th = 1.0;
    double decay = 1.0;
    double surrogate_alpha = 2.0;

    // schedule
    int64_t schedule_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    // training
    double lr = 1e-5;
    int64_t batch = 128;
    int64_t train_steps = 100;
    int64_t checkpoint_every = 500;
    uint64_t seed = 0;

    // data
    std::string dataset_kind = "two_mode";  // two_mode | blobs | idx
    std::string dataset_path;
    std::string dataset_labels;
    int64_t dataset_n = 512;
    double dataset_noise_sigma = 0.05;

    // sampling
    int64_t sample_count = 16;
    int64_t grid_cols = 4;
    double guidance_v_th = 1.0;
    std::string guidance_sweep;  // "lo:hi:step", empty = single threshold

    // profiling
    double e_mac_pj = 4.6;
    double e_ac_pj = 0.9;
    int64_t probe_batch = 8;

    // misc
    int64_t threads = 1;
    std::string out_dir = "out";

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_text(const std::string& text, const std::string& origin);

    std::string to_text() const;
    UNetConfig unet_config() const;
    std::vector<double> sweep_thresholds() const;  // empty when no sweep configured
    void validate() const;
};

}  // namespace sddpm
