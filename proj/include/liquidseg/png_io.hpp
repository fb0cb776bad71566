#pragma once

#include <string>

#include "liquidseg/image.hpp"

namespace liquidseg {

// 8-bit RGB PNG. Float values are quantized with round(v*255).
void save_png(const std::string& path, const Image& img);
Image load_png(const std::string& path);

// 8-bit grayscale PNG, 0 = background, 255 = liquid.
void save_mask_png(const std::string& path, const BinaryMask& mask);
BinaryMask load_mask_png(const std::string& path);

}  // namespace liquidseg
