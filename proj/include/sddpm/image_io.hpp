#pragma once

#include <string>

#include "sddpm/tensor.hpp"

namespace sddpm {

// Tiles K samples row-major into a grid with 2 px separators and writes
// binary PGM (C=1) or PPM (C=3). Values map [-1,1] -> [0,255] with clamping.
void write_image_grid(const Tensor& samples, int64_t cols, const std::string& path);

// Grid pixel dimensions for K tiles of size hxw in the given column count.
struct GridDims {
    int64_t width = 0, height = 0, rows = 0;
};
GridDims image_grid_dims(int64_t k, int64_t cols, int64_t h, int64_t w);

// Little-endian float32 .npy (version 1.0) dump of a tensor.
void write_npy(const Tensor& t, const std::string& path);

}  // namespace sddpm
