#include <cstdint>
#include <cstring>
#include <fstream>

#include "parstain/train.hpp"

namespace parstain {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'T', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw BadInputError("truncated checkpoint file");
  return v;
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ull << 20)) throw BadInputError("corrupt checkpoint string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw BadInputError("truncated checkpoint file");
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BadInputError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::int32_t>(out, ckpt.generator.in_channels);
  put<std::int32_t>(out, ckpt.generator.out_channels);
  put<std::int32_t>(out, ckpt.generator.base_width);
  put<std::int32_t>(out, ckpt.generator.depth);
  put<std::int32_t>(out, static_cast<std::int32_t>(ckpt.generator.norm));
  put<std::int32_t>(out, ckpt.epoch);
  put<double>(out, ckpt.best_val_loss);
  put_string(out, ckpt.config_digest);
  put<std::int32_t>(out, ckpt.has_ref_cdf ? 1 : 0);
  if (ckpt.has_ref_cdf)
    out.write(reinterpret_cast<const char*>(ckpt.ref_cdf.data()), 256 * sizeof(double));
  put<std::uint64_t>(out, ckpt.params.size());
  for (const auto& [name, data] : ckpt.params) {
    put_string(out, name);
    put<std::uint64_t>(out, data.size());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!out) throw BadInputError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInputError("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw BadInputError("not a checkpoint file: " + path);
  Checkpoint ckpt;
  ckpt.generator.in_channels = get<std::int32_t>(in);
  ckpt.generator.out_channels = get<std::int32_t>(in);
  ckpt.generator.base_width = get<std::int32_t>(in);
  ckpt.generator.depth = get<std::int32_t>(in);
  ckpt.generator.norm = static_cast<NormKind>(get<std::int32_t>(in));
  ckpt.epoch = get<std::int32_t>(in);
  ckpt.best_val_loss = get<double>(in);
  ckpt.config_digest = get_string(in);
  ckpt.has_ref_cdf = get<std::int32_t>(in) != 0;
  if (ckpt.has_ref_cdf) {
    in.read(reinterpret_cast<char*>(ckpt.ref_cdf.data()), 256 * sizeof(double));
    if (!in) throw BadInputError("truncated checkpoint file");
  }
  const auto n_params = get<std::uint64_t>(in);
  if (n_params > (1ull << 16)) throw BadInputError("corrupt checkpoint parameter count");
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = get_string(in);
    const auto len = get<std::uint64_t>(in);
    if (len > (1ull << 31)) throw BadInputError("corrupt checkpoint parameter size");
    std::vector<float> data(len);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(len * sizeof(float)));
    if (!in) throw BadInputError("truncated checkpoint file");
    ckpt.params.emplace_back(std::move(name), std::move(data));
  }
  return ckpt;
}

}  // namespace parstain
