#include "parstain/image.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <fstream>

namespace parstain {

void ChannelImage::validate() const {
  if (height < 1 || width < 1) throw BadInputError("ChannelImage: dimensions must be >= 1");
  if (!(pitch_nm > 0)) throw BadInputError("ChannelImage: pitch must be > 0");
  if (pixels.size() != static_cast<std::size_t>(height) * width)
    throw BadInputError("ChannelImage: pixel buffer size mismatch");
  for (float v : pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw BadInputError("ChannelImage: pixel outside [0,1]");
  }
}

void MultiChannelImage::validate() const {
  non_radiative.validate();
  radiative.validate();
  scattering.validate();
  for (int i = 1; i < 3; ++i) {
    const ChannelImage& c = channel(i);
    if (c.height != non_radiative.height || c.width != non_radiative.width ||
        c.pitch_nm != non_radiative.pitch_nm) {
      throw BadInputError("MultiChannelImage: channels must share shape and pitch");
    }
  }
}

void RGBImage::validate() const {
  if (height < 1 || width < 1) throw BadInputError("RGBImage: dimensions must be >= 1");
  if (pixels.size() != static_cast<std::size_t>(height) * width * 3)
    throw BadInputError("RGBImage: pixel buffer size mismatch");
  for (float v : pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw BadInputError("RGBImage: pixel outside [0,1]");
  }
}

std::string sha256_hex(const void* data, std::size_t n) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  EVP_Digest(data, n, md, &md_len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string digest_pixels(const ChannelImage& img) {
  return sha256_hex(img.pixels.data(), img.pixels.size() * sizeof(float));
}

std::string digest_pixels(const RGBImage& img) {
  return sha256_hex(img.pixels.data(), img.pixels.size() * sizeof(float));
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInputError("cannot open file for digest: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

}  // namespace parstain
