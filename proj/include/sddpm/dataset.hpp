#pragma once

#include <optional>
#include <string>

#include "sddpm/rng.hpp"
#include "sddpm/tensor.hpp"

namespace sddpm {

// Images normalized to [-1, 1], layout [N, C, H, W].
struct Dataset {
    Tensor images;
    std::vector<uint8_t> labels;  // optional, empty when absent
    std::string source;

    int64_t count() const { return images.dim(0); }
};

// IDX (big-endian header) reader. Pixels map through x / 127.5 - 1.
// target_size 0 keeps the native resolution; otherwise images are
// center-padded with -1 (target larger) or nearest-resized (target smaller).
Dataset load_idx(const std::string& images_path, const std::optional<std::string>& labels_path = std::nullopt,
                 int64_t target_size = 0);

enum class SynthKind { Blobs, TwoMode };

// Deterministic synthetic datasets. "blobs" draws 1-3 Gaussian bumps per
// image; "two_mode" picks one of two fixed templates and adds Gaussian pixel
// noise of the given sigma.
Dataset synth_dataset(SynthKind kind, int64_t n, int64_t size, uint64_t seed, double noise_sigma = 0.05);

}  // namespace sddpm
