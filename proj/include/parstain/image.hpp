#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace parstain {

// Error taxonomy used by the CLI to pick exit codes.
struct BadInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kDefaultPitchNm = 250.0;

// Single-channel unit-range image. Row-major, pixel (y, x) at y * width + x.
struct ChannelImage {
  int height = 0;
  int width = 0;
  double pitch_nm = kDefaultPitchNm;
  std::vector<float> pixels;

  ChannelImage() = default;
  ChannelImage(int h, int w, double pitch = kDefaultPitchNm, float fill = 0.0f)
      : height(h), width(w), pitch_nm(pitch), pixels(static_cast<std::size_t>(h) * w, fill) {
    if (h < 1 || w < 1) throw BadInputError("ChannelImage: dimensions must be >= 1");
    if (!(pitch > 0)) throw BadInputError("ChannelImage: pitch must be > 0");
  }

  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }

  // Checks the unit-range invariant; call after external data is filled in.
  void validate() const;
};

// Three intrinsically co-registered contrast channels, fixed order:
// (non-radiative, radiative, scattering).
struct MultiChannelImage {
  ChannelImage non_radiative;
  ChannelImage radiative;
  ChannelImage scattering;

  int height() const { return non_radiative.height; }
  int width() const { return non_radiative.width; }
  double pitch_nm() const { return non_radiative.pitch_nm; }

  const ChannelImage& channel(int i) const {
    return i == 0 ? non_radiative : (i == 1 ? radiative : scattering);
  }
  ChannelImage& channel(int i) {
    return i == 0 ? non_radiative : (i == 1 ? radiative : scattering);
  }

  void validate() const;
};

// Interleaved RGB, unit-range in memory, 8-bit on disk.
struct RGBImage {
  int height = 0;
  int width = 0;
  double pitch_nm = 0.0;  // 0 means no pitch metadata
  std::vector<float> pixels;  // h * w * 3, rgb interleaved

  RGBImage() = default;
  RGBImage(int h, int w, double pitch = 0.0, float fill = 0.0f)
      : height(h), width(w), pitch_nm(pitch), pixels(static_cast<std::size_t>(h) * w * 3, fill) {
    if (h < 1 || w < 1) throw BadInputError("RGBImage: dimensions must be >= 1");
  }

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  void validate() const;
};

// Planar CIE Lab image: L in [0,100], a/b signed. Metric math runs in double.
struct LabImage {
  int height = 0;
  int width = 0;
  std::vector<double> l, a, b;

  LabImage() = default;
  LabImage(int h, int w)
      : height(h), width(w),
        l(static_cast<std::size_t>(h) * w),
        a(static_cast<std::size_t>(h) * w),
        b(static_cast<std::size_t>(h) * w) {}
};

std::string sha256_hex(const void* data, std::size_t n);
std::string sha256_hex(const std::string& s);
std::string digest_pixels(const ChannelImage& img);
std::string digest_pixels(const RGBImage& img);
std::string digest_file(const std::string& path);

}  // namespace parstain
