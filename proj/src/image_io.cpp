#include "sddpm/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace sddpm {

namespace {
constexpr int64_t kSep = 2;
constexpr unsigned char kSepValue = 128;

unsigned char to_byte(float v) {
    float x = std::clamp(v, -1.0f, 1.0f);
    return static_cast<unsigned char>(std::lround((x + 1.0f) * 127.5f));
}
}  // namespace

GridDims image_grid_dims(int64_t k, int64_t cols, int64_t h, int64_t w) {
    check_arg(k >= 1 && cols >= 1, "image grid: need at least one tile and one column");
    GridDims d;
    cols = std::min(cols, k);
    d.rows = (k + cols - 1) / cols;
    d.width = cols * w + (cols - 1) * kSep;
    d.height = d.rows * h + (d.rows - 1) * kSep;
    return d;
}

void write_image_grid(const Tensor& samples, int64_t cols, const std::string& path) {
    check_arg(samples.ndim() == 4, "image grid: samples must be [K,C,H,W]");
    int64_t k = samples.dim(0), c = samples.dim(1), h = samples.dim(2), w = samples.dim(3);
    check_arg(c == 1 || c == 3, strfmt("image grid: unsupported channel count %lld (PGM needs 1, PPM needs 3)",
                                       static_cast<long long>(c)));
    cols = std::min(cols, k);
    GridDims d = image_grid_dims(k, cols, h, w);

    std::vector<unsigned char> canvas(static_cast<size_t>(d.width * d.height * c), kSepValue);
    for (int64_t i = 0; i < k; ++i) {
        int64_t row = i / cols, col = i % cols;
        int64_t oy = row * (h + kSep), ox = col * (w + kSep);
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                for (int64_t ch = 0; ch < c; ++ch) {
                    float v = samples.data[static_cast<size_t>(((i * c + ch) * h + y) * w + x)];
                    canvas[static_cast<size_t>(((oy + y) * d.width + (ox + x)) * c + ch)] = to_byte(v);
                }
    }
    // blank tiles in a ragged last row stay at the separator value

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(strfmt("%s: cannot open for writing", path.c_str()));
    out << (c == 1 ? "P5" : "P6") << "\n" << d.width << " " << d.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.data()), static_cast<std::streamsize>(canvas.size()));
    if (!out) throw DataError(strfmt("%s: write failed", path.c_str()));
}

void write_npy(const Tensor& t, const std::string& path) {
    std::string shape;
    for (size_t i = 0; i < t.shape.size(); ++i) shape += strfmt("%lld, ", static_cast<long long>(t.shape[i]));
    std::string dict = strfmt("{'descr': '<f4', 'fortran_order': False, 'shape': (%s), }", shape.c_str());
    size_t header_len = 10 + dict.size() + 1;  // magic + trailing newline
    size_t padded = (header_len + 63) / 64 * 64;
    dict.append(padded - header_len, ' ');
    dict += '\n';

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(strfmt("%s: cannot open for writing", path.c_str()));
    out.write("\x93NUMPY\x01\x00", 8);
    uint16_t hlen = static_cast<uint16_t>(dict.size());
    unsigned char lenbuf[2] = {static_cast<unsigned char>(hlen & 0xff), static_cast<unsigned char>(hlen >> 8)};
    out.write(reinterpret_cast<const char*>(lenbuf), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(t.ptr()), static_cast<std::streamsize>(t.numel() * 4));
    if (!out) throw DataError(strfmt("%s: write failed", path.c_str()));
}

}  // namespace sddpm
