// Deterministic overlapping patch plans shared by extraction, training,
// inference and stitching, plus the blocked train/val split and the
// partition-of-unity stitcher.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parstain/image.hpp"

namespace parstain {

struct PatchGrid {
  int patch = 256;
  int stride = 128;
  int image_h = 0;
  int image_w = 0;
  std::vector<std::pair<int, int>> origins;  // (row, col), row-major order
};

// Origins at multiples of stride plus a snapped final origin per axis when
// the regular grid does not reach the edge; covers the image exactly.
PatchGrid plan_patches(int height, int width, int patch, int stride);

// Generic planar patch copy; pixels indexed y * width + x, `channels` planes.
std::vector<std::vector<float>> extract_patches(const float* pixels, int height, int width,
                                                int channels, const PatchGrid& grid);

std::vector<std::vector<float>> extract_patches(const ChannelImage& img, const PatchGrid& grid);

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

struct SplitAssignment {
  int block_px = 512;
  std::uint64_t seed = 0;
  int blocks_x = 0, blocks_y = 0;
  std::vector<Split> blocks;  // row-major over blocks

  // A patch belongs to the split of the block containing its center.
  Split for_patch(const PatchGrid& grid, std::size_t origin_index) const;
};

SplitAssignment split_dataset(const PatchGrid& grid, double train_ratio, double val_ratio,
                              int block_px, std::uint64_t seed);

void save_split(const SplitAssignment& s, const std::string& image_digest, const std::string& path);
SplitAssignment load_split(const std::string& path, std::string* image_digest = nullptr);

enum class Blend { hann, uniform };

// Weighted overlap-average of per-patch outputs back onto the image grid.
// Accumulation runs in fixed grid order, so the result is independent of the
// order patches were produced in.
void stitch(const std::vector<std::vector<float>>& patches, const PatchGrid& grid, int channels,
            Blend blend, float* out_pixels);

ChannelImage stitch_channel(const std::vector<std::vector<float>>& patches, const PatchGrid& grid,
                            Blend blend, double pitch_nm);

// Separable stitch weight profile along one axis of a patch (floored Hann or
// uniform), exposed for tests.
std::vector<double> stitch_window(int patch, Blend blend);

}  // namespace parstain
