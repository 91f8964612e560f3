#include "sddpm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace sddpm {

namespace {

uint32_t read_be_u32(std::istream& in, const std::string& path, const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw DataError(strfmt("%s: truncated while reading %s", path.c_str(), what));
    return (static_cast<uint32_t>(buf[0]) << 24) | (static_cast<uint32_t>(buf[1]) << 16) |
           (static_cast<uint32_t>(buf[2]) << 8) | static_cast<uint32_t>(buf[3]);
}

// Center-pad with -1 or nearest-resize a single [h,w] image into [target,target].
void fit_image(const float* src, int64_t h, int64_t w, float* dst, int64_t target) {
    if (h == target && w == target) {
        std::memcpy(dst, src, sizeof(float) * static_cast<size_t>(h * w));
        return;
    }
    if (target >= h && target >= w) {
        std::fill(dst, dst + target * target, -1.0f);
        int64_t oy = (target - h) / 2, ox = (target - w) / 2;
        for (int64_t y = 0; y < h; ++y)
            std::memcpy(dst + (oy + y) * target + ox, src + y * w, sizeof(float) * static_cast<size_t>(w));
        return;
    }
    for (int64_t y = 0; y < target; ++y) {
        int64_t sy = std::min<int64_t>(h - 1, (y * h + h / 2) / target);
        for (int64_t x = 0; x < target; ++x) {
            int64_t sx = std::min<int64_t>(w - 1, (x * w + w / 2) / target);
            dst[y * target + x] = src[sy * w + sx];
        }
    }
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::optional<std::string>& labels_path, int64_t target_size) {
    std::ifstream in(images_path, std::ios::binary);
    if (!in) throw DataError(strfmt("%s: cannot open", images_path.c_str()));
    uint32_t magic = read_be_u32(in, images_path, "magic");
    if (magic != 0x00000803u)
        throw DataError(strfmt("%s: bad IDX image magic 0x%08x (expected 0x00000803)", images_path.c_str(), magic));
    int64_t n = read_be_u32(in, images_path, "image count");
    int64_t h = read_be_u32(in, images_path, "rows");
    int64_t w = read_be_u32(in, images_path, "cols");
    if (n < 1 || h < 1 || w < 1)
        throw DataError(strfmt("%s: degenerate dims (%lld, %lld, %lld)", images_path.c_str(), static_cast<long long>(n),
                               static_cast<long long>(h), static_cast<long long>(w)));
    std::vector<unsigned char> raw(static_cast<size_t>(n * h * w));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        throw DataError(strfmt("%s: truncated payload, expected %zu pixel bytes, got %lld", images_path.c_str(),
                               raw.size(), static_cast<long long>(in.gcount())));

    int64_t out_size = target_size > 0 ? target_size : std::max(h, w);
    Dataset ds;
    ds.source = images_path;
    ds.images = Tensor({n, 1, out_size, out_size});
    std::vector<float> tmp(static_cast<size_t>(h * w));
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t p = 0; p < h * w; ++p)
            tmp[static_cast<size_t>(p)] = static_cast<float>(raw[static_cast<size_t>(i * h * w + p)]) / 127.5f - 1.0f;
        fit_image(tmp.data(), h, w, ds.images.ptr() + i * out_size * out_size, out_size);
    }

    if (labels_path) {
        std::ifstream lin(*labels_path, std::ios::binary);
        if (!lin) throw DataError(strfmt("%s: cannot open", labels_path->c_str()));
        uint32_t lmagic = read_be_u32(lin, *labels_path, "magic");
        if (lmagic != 0x00000801u)
            throw DataError(strfmt("%s: bad IDX label magic 0x%08x (expected 0x00000801)", labels_path->c_str(), lmagic));
        int64_t ln = read_be_u32(lin, *labels_path, "label count");
        if (ln != n)
            throw DataError(strfmt("%s: label count %lld != image count %lld", labels_path->c_str(),
                                   static_cast<long long>(ln), static_cast<long long>(n)));
        ds.labels.resize(static_cast<size_t>(ln));
        lin.read(reinterpret_cast<char*>(ds.labels.data()), static_cast<std::streamsize>(ds.labels.size()));
        if (static_cast<size_t>(lin.gcount()) != ds.labels.size())
            throw DataError(strfmt("%s: truncated label payload", labels_path->c_str()));
    }
    return ds;
}

namespace {

// Two fixed 2-d templates on a [-1, 1] canvas: a filled disc and a diagonal
// cross.
void render_disc(float* img, int64_t size) {
    double c = (static_cast<double>(size) - 1.0) / 2.0;
    double r = static_cast<double>(size) / 3.0;
    for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
            double d = std::hypot(static_cast<double>(y) - c, static_cast<double>(x) - c);
            img[y * size + x] = d <= r ? 1.0f : -1.0f;
        }
}

void render_cross(float* img, int64_t size) {
    for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
            bool on = std::llabs(x - y) <= 0 || std::llabs(x + y - (size - 1)) <= 0;
            img[y * size + x] = on ? 1.0f : -1.0f;
        }
}

}  // namespace

Dataset synth_dataset(SynthKind kind, int64_t n, int64_t size, uint64_t seed, double noise_sigma) {
    check_arg(n >= 1, "synth_dataset: need at least one image");
    check_arg(size >= 4, "synth_dataset: size must be >= 4");
    Dataset ds;
    ds.images = Tensor({n, 1, size, size});
    RngStream rng(seed, /*stream_id=*/0x5D47A5E7ULL);

    std::vector<float> disc(static_cast<size_t>(size * size)), cross(static_cast<size_t>(size * size));
    render_disc(disc.data(), size);
    render_cross(cross.data(), size);

    for (int64_t i = 0; i < n; ++i) {
        float* img = ds.images.ptr() + i * size * size;
        if (kind == SynthKind::TwoMode) {
            bool first = rng.bounded(2) == 0;
            const float* tpl = first ? disc.data() : cross.data();
            for (int64_t p = 0; p < size * size; ++p) {
                double v = tpl[p] + noise_sigma * rng.normal();
                img[p] = static_cast<float>(std::clamp(v, -1.0, 1.0));
            }
            ds.labels.push_back(first ? 0 : 1);
        } else {
            std::fill(img, img + size * size, -1.0f);
            int64_t bumps = 1 + static_cast<int64_t>(rng.bounded(3));
            for (int64_t b = 0; b < bumps; ++b) {
                double cy = 1.0 + rng.uniform() * static_cast<double>(size - 3);
                double cx = 1.0 + rng.uniform() * static_cast<double>(size - 3);
                double sg = static_cast<double>(size) / 8.0 + rng.uniform() * static_cast<double>(size) / 8.0;
                double amp = 0.5 + 0.5 * rng.uniform();
                for (int64_t y = 0; y < size; ++y)
                    for (int64_t x = 0; x < size; ++x) {
                        double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                        img[y * size + x] += static_cast<float>(2.0 * amp * std::exp(-d2 / (2.0 * sg * sg)));
                    }
            }
            for (int64_t p = 0; p < size * size; ++p) img[p] = std::clamp(img[p], -1.0f, 1.0f);
        }
    }
    ds.source = kind == SynthKind::TwoMode ? "synth:two_mode" : "synth:blobs";
    return ds;
}

}  // namespace sddpm
