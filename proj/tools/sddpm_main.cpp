#include <CLI11.hpp>
#include <iostream>

#include "sddpm/commands.hpp"
#include "sddpm/common.hpp"

using namespace sddpm;

int main(int argc, char** argv) {
    CLI::App app{"spiking denoising-diffusion engine"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_ckpt) {
        cmd->add_option("--config", config_path, "run configuration file")->required();
        auto* ck = cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file");
        if (needs_ckpt) ck->required();
        cmd->add_option("--out", out_dir, "output directory override");
        cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "kernel thread count override");
    };

    auto* train = app.add_subcommand("train", "run the DSM training loop");
    add_common(train, false);
    auto* sample = app.add_subcommand("sample", "generate images from a checkpoint");
    add_common(sample, true);
    auto* profile = app.add_subcommand("profile", "estimate energy for a checkpoint");
    add_common(profile, true);
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference verification of the backward passes");
    gradcheck->add_option("--seed", seed, "seed for the check")->each([&](const std::string&) { seed_set = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (gradcheck->parsed()) {
            return cmd_gradcheck(seed_set ? seed : 42) ? 0 : 3;
        }
        RunConfig cfg = RunConfig::parse_file(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads > 0) cfg.threads = threads;
        set_num_threads(static_cast<int>(cfg.threads));

        if (train->parsed()) {
            std::optional<std::string> resume;
            if (!checkpoint_path.empty()) resume = checkpoint_path;
            cmd_train(cfg, resume);
        } else if (sample->parsed()) {
            cmd_sample(cfg, checkpoint_path);
        } else if (profile->parsed()) {
            cmd_profile(cfg, checkpoint_path);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const VerificationError& e) {
        std::cerr << "verification error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
