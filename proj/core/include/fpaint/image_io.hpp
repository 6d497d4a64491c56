#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpaint/tensor.hpp"

namespace fpaint {

// Binary PPM (P6) for RGB and binary PGM (P5) for grayscale, maxval 255.
// Float images use [0,1]; writers round-clamp, readers divide by 255.

void write_ppm(const std::string& path, const Tensor<float>& image);  // [3,H,W]
Tensor<float> read_ppm(const std::string& path);

void write_pgm(const std::string& path, const Tensor<float>& image);  // [1,H,W]
void write_pgm_u8(const std::string& path, const std::vector<std::uint8_t>& pixels, int h, int w);
Tensor<float> read_pgm(const std::string& path);

// write-temp-then-rename so interrupted runs never leave truncated files
void atomic_write_file(const std::string& path, const std::string& bytes);
std::string read_file_bytes(const std::string& path);

}  // namespace fpaint
