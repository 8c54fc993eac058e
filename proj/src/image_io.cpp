#include "parstain/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace parstain {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

struct Raw {
  int height = 0, width = 0, channels = 0, bit_depth = 0;
  double pitch_nm = 0.0;
  std::vector<std::uint16_t> data;  // widened to 16 bits per sample
};

Raw read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw BadInputError("cannot open image: " + path);

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw std::runtime_error("png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) throw BadInputError("corrupt PNG: " + path);

  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);

  Raw raw;
  raw.width = static_cast<int>(png_get_image_width(r.png, r.info));
  raw.height = static_cast<int>(png_get_image_height(r.png, r.info));
  raw.bit_depth = png_get_bit_depth(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);

  if (color == PNG_COLOR_TYPE_GRAY) {
    raw.channels = 1;
    if (raw.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  } else if (color == PNG_COLOR_TYPE_RGB) {
    raw.channels = 3;
  } else if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(r.png);
    raw.channels = 3;
  } else {
    throw BadInputError("unsupported PNG color type in " + path);
  }
  if (raw.bit_depth == 16) png_set_swap(r.png);  // stored big-endian
  png_read_update_info(r.png, r.info);
  raw.bit_depth = png_get_bit_depth(r.png, r.info);
  if (raw.bit_depth != 8 && raw.bit_depth != 16)
    throw BadInputError("unsupported PNG bit depth in " + path);

  png_uint_32 res_x = 0, res_y = 0;
  int unit = 0;
  if (png_get_pHYs(r.png, r.info, &res_x, &res_y, &unit) && unit == PNG_RESOLUTION_METER && res_x > 0) {
    raw.pitch_nm = 1e9 / static_cast<double>(res_x);
  }

  const std::size_t samples = static_cast<std::size_t>(raw.height) * raw.width * raw.channels;
  raw.data.resize(samples);
  const std::size_t row_samples = static_cast<std::size_t>(raw.width) * raw.channels;
  std::vector<std::uint8_t> row8;
  if (raw.bit_depth == 8) row8.resize(row_samples);
  for (int y = 0; y < raw.height; ++y) {
    if (raw.bit_depth == 16) {
      png_read_row(r.png, reinterpret_cast<png_bytep>(raw.data.data() + y * row_samples), nullptr);
    } else {
      png_read_row(r.png, row8.data(), nullptr);
      for (std::size_t i = 0; i < row_samples; ++i) raw.data[y * row_samples + i] = row8[i];
    }
  }
  png_read_end(r.png, nullptr);
  return raw;
}

void write_png(const std::string& path, int height, int width, int channels, int bit_depth,
               double pitch_nm, const std::uint16_t* data) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw BadInputError("cannot write image: " + path);

  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw std::runtime_error("png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("PNG write failed: " + path);

  png_init_io(w.png, fp.get());
  const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(w.png, w.info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (pitch_nm > 0) {
    const auto ppm = static_cast<png_uint_32>(std::lround(1e9 / pitch_nm));
    png_set_pHYs(w.png, w.info, ppm, ppm, PNG_RESOLUTION_METER);
  }
  png_write_info(w.png, w.info);
  if (bit_depth == 16) png_set_swap(w.png);

  const std::size_t row_samples = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> row8;
  if (bit_depth == 8) row8.resize(row_samples);
  for (int y = 0; y < height; ++y) {
    if (bit_depth == 16) {
      png_write_row(w.png, reinterpret_cast<png_const_bytep>(data + y * row_samples));
    } else {
      for (std::size_t i = 0; i < row_samples; ++i)
        row8[i] = static_cast<std::uint8_t>(data[y * row_samples + i]);
      png_write_row(w.png, row8.data());
    }
  }
  png_write_end(w.png, nullptr);
}

inline std::uint16_t quantize(float v, int maxval) {
  // round-half-up, fixed quantization rule
  const double q = std::floor(static_cast<double>(v) * maxval + 0.5);
  return static_cast<std::uint16_t>(q < 0 ? 0 : (q > maxval ? maxval : q));
}

}  // namespace

ChannelImage load_channel(const std::string& path) {
  Raw raw = read_png(path);
  if (raw.channels != 1)
    throw BadInputError("expected grayscale image for channel kind: " + path);
  ChannelImage img(raw.height, raw.width, raw.pitch_nm > 0 ? raw.pitch_nm : kDefaultPitchNm);
  const float scale = raw.bit_depth == 16 ? 65535.0f : 255.0f;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = raw.data[i] / scale;
  return img;
}

RGBImage load_rgb(const std::string& path) {
  Raw raw = read_png(path);
  if (raw.channels != 3) throw BadInputError("expected 3-channel image for rgb kind: " + path);
  if (raw.bit_depth != 8) throw BadInputError("rgb images must be 8-bit: " + path);
  RGBImage img(raw.height, raw.width, raw.pitch_nm);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = raw.data[i] / 255.0f;
  return img;
}

void save_image(const ChannelImage& img, const std::string& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw BadInputError("channel bit depth must be 8 or 16");
  const int maxval = bit_depth == 16 ? 65535 : 255;
  std::vector<std::uint16_t> data(img.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = quantize(img.pixels[i], maxval);
  write_png(path, img.height, img.width, 1, bit_depth, img.pitch_nm, data.data());
}

void save_image(const RGBImage& img, const std::string& path) {
  std::vector<std::uint16_t> data(img.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = quantize(img.pixels[i], 255);
  write_png(path, img.height, img.width, 3, 8, img.pitch_nm, data.data());
}

}  // namespace parstain
