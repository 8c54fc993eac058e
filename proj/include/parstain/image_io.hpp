#pragma once

#include <string>

#include "parstain/image.hpp"

namespace parstain {

// Lossless PNG I/O. Channels are 8- or 16-bit grayscale, RGB is 8-bit color.
// In-memory values are unit range; quantization on save is round-half-up.
// Pixel pitch travels in the PNG pHYs chunk (pixels per metre).

ChannelImage load_channel(const std::string& path);
RGBImage load_rgb(const std::string& path);

void save_image(const ChannelImage& img, const std::string& path, int bit_depth = 16);
void save_image(const RGBImage& img, const std::string& path);

}  // namespace parstain
