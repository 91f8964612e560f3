#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sddpm/common.hpp"

namespace sddpm {

// Architecture description for the spiking U-Net. Plain data; validated at
// model build time.
struct UNetConfig {
    int64_t in_channels = 1;
    int64_t image_size = 8;
    int64_t base_channels = 16;
    std::vector<int64_t> ch_mult = {1, 2};
    int64_t blocks_per_level = 1;
    int64_t t_steps = 4;  // spiking simulation steps
    int64_t temb_dim = 64;
    double lif_decay = 1.0;
    double lif_v_th = 1.0;
    double lif_surrogate_alpha = 2.0;

    int64_t levels() const { return static_cast<int64_t>(ch_mult.size()); }
    int64_t channels_at(int64_t level) const { return base_channels * ch_mult[static_cast<size_t>(level)]; }

    void validate() const {
        check_arg(in_channels >= 1, "unet config: in_channels must be >= 1");
        check_arg(base_channels >= 1, "unet config: base_channels must be >= 1");
        check_arg(!ch_mult.empty(), "unet config: at least one resolution level required");
        for (int64_t m : ch_mult) check_arg(m >= 1, "unet config: channel multipliers must be >= 1");
        check_arg(blocks_per_level >= 1, "unet config: blocks_per_level must be >= 1");
        check_arg(t_steps >= 1, "unet config: t_steps must be >= 1");
        check_arg(temb_dim >= 4 && temb_dim % 2 == 0, "unet config: temb_dim must be even and >= 4");
        int64_t div = int64_t(1) << (levels() - 1);
        check_arg(image_size % div == 0,
                  strfmt("unet config: image_size %lld not divisible by %lld for %zu levels",
                         static_cast<long long>(image_size), static_cast<long long>(div), ch_mult.size()));
        check_arg(image_size / div >= 1, "unet config: image collapses below 1 px at the deepest level");
        check_arg(lif_v_th > 0.0, "unet config: spike threshold must be positive");
        check_arg(lif_decay > 0.0 && lif_decay <= 1.0, "unet config: decay must lie in (0, 1]");
        check_arg(lif_surrogate_alpha > 0.0, "unet config: surrogate alpha must be positive");
    }

    bool operator==(const UNetConfig&) const = default;
};

}  // namespace sddpm
