#include "parstain/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace parstain {

namespace {

std::vector<int> axis_origins(int size, int patch, int stride) {
  std::vector<int> out;
  for (int p = 0; p + patch <= size; p += stride) out.push_back(p);
  if (out.empty() || out.back() != size - patch) out.push_back(size - patch);
  return out;
}

}  // namespace

PatchGrid plan_patches(int height, int width, int patch, int stride) {
  if (patch < 1 || stride < 1 || stride > patch)
    throw BadInputError("plan_patches: need 1 <= stride <= patch");
  if (patch > height || patch > width)
    throw BadInputError("plan_patches: image smaller than patch");
  PatchGrid grid;
  grid.patch = patch;
  grid.stride = stride;
  grid.image_h = height;
  grid.image_w = width;
  const auto rows = axis_origins(height, patch, stride);
  const auto cols = axis_origins(width, patch, stride);
  grid.origins.reserve(rows.size() * cols.size());
  for (const int r : rows)
    for (const int c : cols) grid.origins.emplace_back(r, c);
  return grid;
}

std::vector<std::vector<float>> extract_patches(const float* pixels, int height, int width,
                                                int channels, const PatchGrid& grid) {
  if (grid.image_h != height || grid.image_w != width)
    throw BadInputError("extract_patches: grid does not match image shape");
  const int p = grid.patch;
  std::vector<std::vector<float>> out(grid.origins.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(grid.origins.size()); ++i) {
    const auto [r, c] = grid.origins[i];
    std::vector<float>& dst = out[i];
    dst.resize(static_cast<std::size_t>(channels) * p * p);
    for (int ch = 0; ch < channels; ++ch) {
      const float* src = pixels + static_cast<std::size_t>(ch) * height * width;
      for (int y = 0; y < p; ++y) {
        const float* row = src + static_cast<std::size_t>(r + y) * width + c;
        std::copy(row, row + p, dst.data() + (static_cast<std::size_t>(ch) * p + y) * p);
      }
    }
  }
  return out;
}

std::vector<std::vector<float>> extract_patches(const ChannelImage& img, const PatchGrid& grid) {
  return extract_patches(img.pixels.data(), img.height, img.width, 1, grid);
}

Split SplitAssignment::for_patch(const PatchGrid& grid, std::size_t origin_index) const {
  const auto [r, c] = grid.origins[origin_index];
  const int cy = r + grid.patch / 2;
  const int cx = c + grid.patch / 2;
  const int by = std::min(cy / block_px, blocks_y - 1);
  const int bx = std::min(cx / block_px, blocks_x - 1);
  return blocks[static_cast<std::size_t>(by) * blocks_x + bx];
}

SplitAssignment split_dataset(const PatchGrid& grid, double train_ratio, double val_ratio,
                              int block_px, std::uint64_t seed) {
  if (train_ratio <= 0 || val_ratio <= 0 || train_ratio + val_ratio > 1.0 + 1e-12)
    throw BadInputError("split_dataset: ratios must be positive and sum to <= 1");
  if (block_px < grid.patch) throw BadInputError("split_dataset: block_px must be >= patch");
  SplitAssignment s;
  s.block_px = block_px;
  s.seed = seed;
  s.blocks_y = (grid.image_h + block_px - 1) / block_px;
  s.blocks_x = (grid.image_w + block_px - 1) / block_px;
  const int nb = s.blocks_x * s.blocks_y;
  if (nb < 2) throw BadInputError("split_dataset: fewer blocks than splits");
  std::vector<int> order(nb);
  for (int i = 0; i < nb; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  int n_train = static_cast<int>(std::lround(train_ratio * nb));
  n_train = std::clamp(n_train, 1, nb - 1);
  int n_val = static_cast<int>(std::lround(val_ratio * nb));
  n_val = std::clamp(n_val, 1, nb - n_train);
  s.blocks.assign(nb, Split::test);
  for (int i = 0; i < n_train; ++i) s.blocks[order[i]] = Split::train;
  for (int i = n_train; i < n_train + n_val; ++i) s.blocks[order[i]] = Split::val;
  return s;
}

void save_split(const SplitAssignment& s, const std::string& image_digest,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadInputError("cannot write split file: " + path);
  out << "# block split assignment\n";
  out << "image_digest: " << image_digest << "\n";
  out << "block_px: " << s.block_px << "\n";
  out << "seed: " << s.seed << "\n";
  out << "blocks_x: " << s.blocks_x << "\n";
  out << "blocks_y: " << s.blocks_y << "\n";
  out << "blocks:";
  for (const Split b : s.blocks) out << ' ' << static_cast<int>(b);
  out << "\n";
}

SplitAssignment load_split(const std::string& path, std::string* image_digest) {
  std::ifstream in(path);
  if (!in) throw BadInputError("cannot read split file: " + path);
  SplitAssignment s;
  std::string key;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ss >> key;
    if (key == "image_digest:") {
      std::string v;
      ss >> v;
      if (image_digest) *image_digest = v;
    } else if (key == "block_px:") {
      ss >> s.block_px;
    } else if (key == "seed:") {
      ss >> s.seed;
    } else if (key == "blocks_x:") {
      ss >> s.blocks_x;
    } else if (key == "blocks_y:") {
      ss >> s.blocks_y;
    } else if (key == "blocks:") {
      int v;
      while (ss >> v) s.blocks.push_back(static_cast<Split>(v));
    } else {
      throw BadInputError("malformed split file: " + path);
    }
  }
  if (static_cast<int>(s.blocks.size()) != s.blocks_x * s.blocks_y)
    throw BadInputError("split file block count mismatch: " + path);
  return s;
}

std::vector<double> stitch_window(int patch, Blend blend) {
  std::vector<double> w(patch, 1.0);
  if (blend == Blend::hann) {
    constexpr double eps = 1e-3;  // keeps snapped edge patches contributing at borders
    for (int i = 0; i < patch; ++i) {
      const double s = std::sin(std::numbers::pi * (i + 0.5) / patch);
      w[i] = std::max(s * s, eps);
    }
  }
  return w;
}

void stitch(const std::vector<std::vector<float>>& patches, const PatchGrid& grid, int channels,
            Blend blend, float* out_pixels) {
  if (patches.size() != grid.origins.size())
    throw BadInputError("stitch: one patch required per origin");
  const int p = grid.patch;
  const std::size_t patch_len = static_cast<std::size_t>(channels) * p * p;
  for (const auto& pt : patches)
    if (pt.size() != patch_len) throw BadInputError("stitch: patch size mismatch");
  const auto window = stitch_window(p, blend);

  const int h = grid.image_h, w = grid.image_w;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<double> acc(plane * channels, 0.0);
  std::vector<double> wsum(plane, 0.0);

  // per output row: every covering patch contributes in grid order, so the
  // accumulation order is fixed regardless of who produced the patches
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (std::size_t i = 0; i < grid.origins.size(); ++i) {
      const auto [r, c] = grid.origins[i];
      if (y < r || y >= r + p) continue;
      const int py = y - r;
      const double wy = window[py];
      const std::vector<float>& patch = patches[i];
      for (int px = 0; px < p; ++px) {
        const double wgt = wy * window[px];
        const std::size_t out_i = static_cast<std::size_t>(y) * w + c + px;
        wsum[out_i] += wgt;
        for (int ch = 0; ch < channels; ++ch) {
          acc[ch * plane + out_i] +=
              wgt * patch[(static_cast<std::size_t>(ch) * p + py) * p + px];
        }
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      for (int ch = 0; ch < channels; ++ch)
        out_pixels[ch * plane + i] = static_cast<float>(acc[ch * plane + i] / wsum[i]);
    }
  }
}

ChannelImage stitch_channel(const std::vector<std::vector<float>>& patches, const PatchGrid& grid,
                            Blend blend, double pitch_nm) {
  ChannelImage out(grid.image_h, grid.image_w, pitch_nm);
  stitch(patches, grid, 1, blend, out.pixels.data());
  return out;
}

}  // namespace parstain
