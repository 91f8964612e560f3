#include "sddpm/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sddpm {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int64_t parse_i64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        int64_t x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(strfmt("config: %s expects an integer, got \"%s\"", key.c_str(), v.c_str()));
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        uint64_t x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(strfmt("config: %s expects an unsigned integer, got \"%s\"", key.c_str(), v.c_str()));
    }
}

double parse_f64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(strfmt("config: %s expects a number, got \"%s\"", key.c_str(), v.c_str()));
    }
}

std::vector<int64_t> parse_i64_list(const std::string& key, const std::string& v) {
    std::vector<int64_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_i64(key, trim(item)));
    if (out.empty()) throw ConfigError(strfmt("config: %s expects a comma-separated list", key.c_str()));
    return out;
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(strfmt("config: cannot open %s", path.c_str()));
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str(), path);
}

RunConfig RunConfig::parse_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(strfmt("%s:%d: expected key=value, got \"%s\"", origin.c_str(), lineno, line.c_str()));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "in_channels") cfg.in_channels = parse_i64(key, value);
        else if (key == "image_size") cfg.image_size = parse_i64(key, value);
        else if (key == "base_channels") cfg.base_channels = parse_i64(key, value);
        else if (key == "ch_mult") cfg.ch_mult = parse_i64_list(key, value);
        else if (key == "blocks_per_level") cfg.blocks_per_level = parse_i64(key, value);
        else if (key == "temb_dim") cfg.temb_dim = parse_i64(key, value);
        else if (key == "time_steps") cfg.time_steps = parse_i64(key, value);
        else if (key == "v_th") cfg.v_th = parse_f64(key, value);
        else if (key == "decay") cfg.decay = parse_f64(key, value);
        else if (key == "surrogate_alpha") cfg.surrogate_alpha = parse_f64(key, value);
        else if (key == "schedule_steps") cfg.schedule_steps = parse_i64(key, value);
        else if (key == "beta_start") cfg.beta_start = parse_f64(key, value);
        else if (key == "beta_end") cfg.beta_end = parse_f64(key, value);
        else if (key == "lr") cfg.lr = parse_f64(key, value);
        else if (key == "batch") cfg.batch = parse_i64(key, value);
        else if (key == "train_steps") cfg.train_steps = parse_i64(key, value);
        else if (key == "checkpoint_every") cfg.checkpoint_every = parse_i64(key, value);
        else if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "dataset_kind") cfg.dataset_kind = value;
        else if (key == "dataset_path") cfg.dataset_path = value;
        else if (key == "dataset_labels") cfg.dataset_labels = value;
        else if (key == "dataset_n") cfg.dataset_n = parse_i64(key, value);
        else if (key == "dataset_noise_sigma") cfg.dataset_noise_sigma = parse_f64(key, value);
        else if (key == "sample_count") cfg.sample_count = parse_i64(key, value);
        else if (key == "grid_cols") cfg.grid_cols = parse_i64(key, value);
        else if (key == "guidance_v_th") cfg.guidance_v_th = parse_f64(key, value);
        else if (key == "guidance_sweep") cfg.guidance_sweep = value;
        else if (key == "e_mac_pj") cfg.e_mac_pj = parse_f64(key, value);
        else if (key == "e_ac_pj") cfg.e_ac_pj = parse_f64(key, value);
        else if (key == "probe_batch") cfg.probe_batch = parse_i64(key, value);
        else if (key == "threads") cfg.threads = parse_i64(key, value);
        else if (key == "out_dir") cfg.out_dir = value;
        else throw ConfigError(strfmt("%s:%d: unknown key \"%s\"", origin.c_str(), lineno, key.c_str()));
    }
    cfg.validate();
    return cfg;
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    os << "# model\n";
    os << "in_channels=" << in_channels << "\n";
    os << "image_size=" << image_size << "\n";
    os << "base_channels=" << base_channels << "\n";
    os << "ch_mult=";
    for (size_t i = 0; i < ch_mult.size(); ++i) os << (i ? "," : "") << ch_mult[i];
    os << "\n";
    os << "blocks_per_level=" << blocks_per_level << "\n";
    os << "temb_dim=" << temb_dim << "\n";
    os << "time_steps=" << time_steps << "\n";
    os << strfmt("v_th=%.17g\n", v_th);
    os << strfmt("decay=%.17g\n", decay);
    os << strfmt("surrogate_alpha=%.17g\n", surrogate_alpha);
    os << "# schedule\n";
    os << "schedule_steps=" << schedule_steps << "\n";
    os << strfmt("beta_start=%.17g\n", beta_start);
    os << strfmt("beta_end=%.17g\n", beta_end);
    os << "# training\n";
    os << strfmt("lr=%.17g\n", lr);
    os << "batch=" << batch << "\n";
    os << "train_steps=" << train_steps << "\n";
    os << "checkpoint_every=" << checkpoint_every << "\n";
    os << "seed=" << seed << "\n";
    os << "# data\n";
    os << "dataset_kind=" << dataset_kind << "\n";
    os << "dataset_path=" << dataset_path << "\n";
    os << "dataset_labels=" << dataset_labels << "\n";
    os << "dataset_n=" << dataset_n << "\n";
    os << strfmt("dataset_noise_sigma=%.17g\n", dataset_noise_sigma);
    os << "# sampling\n";
    os << "sample_count=" << sample_count << "\n";
    os << "grid_cols=" << grid_cols << "\n";
    os << strfmt("guidance_v_th=%.17g\n", guidance_v_th);
    os << "guidance_sweep=" << guidance_sweep << "\n";
    os << "# profiling\n";
    os << strfmt("e_mac_pj=%.17g\n", e_mac_pj);
    os << strfmt("e_ac_pj=%.17g\n", e_ac_pj);
    os << "probe_batch=" << probe_batch << "\n";
    os << "# misc\n";
    os << "threads=" << threads << "\n";
    os << "out_dir=" << out_dir << "\n";
    return os.str();
}

UNetConfig RunConfig::unet_config() const {
    UNetConfig u;
    u.in_channels = in_channels;
    u.image_size = image_size;
    u.base_channels = base_channels;
    u.ch_mult = ch_mult;
    u.blocks_per_level = blocks_per_level;
    u.t_steps = time_steps;
    u.temb_dim = temb_dim;
    u.lif_decay = decay;
    u.lif_v_th = v_th;
    u.lif_surrogate_alpha = surrogate_alpha;
    return u;
}

std::vector<double> RunConfig::sweep_thresholds() const {
    if (guidance_sweep.empty()) return {};
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(guidance_sweep.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw ConfigError(strfmt("config: guidance_sweep expects lo:hi:step, got \"%s\"", guidance_sweep.c_str()));
    if (step <= 0 || hi < lo) throw ConfigError("config: guidance_sweep needs step > 0 and hi >= lo");
    int64_t n = static_cast<int64_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> out;
    for (int64_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

void RunConfig::validate() const {
    unet_config().validate();
    if (schedule_steps < 1) throw ConfigError("config: schedule_steps must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ConfigError(strfmt("config: invalid beta range [%g, %g]", beta_start, beta_end));
    if (lr <= 0.0) throw ConfigError("config: lr must be positive");
    if (batch < 1) throw ConfigError("config: batch must be >= 1");
    if (train_steps < 0) throw ConfigError("config: train_steps must be >= 0");
    if (checkpoint_every < 1) throw ConfigError("config: checkpoint_every must be >= 1");
    if (dataset_kind != "two_mode" && dataset_kind != "blobs" && dataset_kind != "idx")
        throw ConfigError(strfmt("config: dataset_kind must be two_mode, blobs or idx, got \"%s\"", dataset_kind.c_str()));
    if (dataset_kind == "idx" && dataset_path.empty()) throw ConfigError("config: dataset_kind=idx requires dataset_path");
    if (dataset_n < 1) throw ConfigError("config: dataset_n must be >= 1");
    if (sample_count < 1) throw ConfigError("config: sample_count must be >= 1");
    if (grid_cols < 1) throw ConfigError("config: grid_cols must be >= 1");
    if (guidance_v_th <= 0.0) throw ConfigError("config: guidance_v_th must be positive");
    if (e_mac_pj < 0.0 || e_ac_pj < 0.0) throw ConfigError("config: energy constants must be nonnegative");
    if (probe_batch < 1) throw ConfigError("config: probe_batch must be >= 1");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    sweep_thresholds();  // validates the sweep expression
}

}  // namespace sddpm
