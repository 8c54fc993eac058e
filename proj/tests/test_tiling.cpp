#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "parstain/tiling.hpp"

using namespace parstain;

namespace {

// brute-force origin enumeration oracle
std::vector<int> axis_oracle(int size, int patch, int stride) {
  std::vector<int> out;
  for (int p = 0; p + patch <= size; p += stride) out.push_back(p);
  if (out.back() + patch < size) out.push_back(size - patch);
  return out;
}

ChannelImage random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ChannelImage img(h, w);
  for (auto& v : img.pixels) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("single-patch plan for an exact fit") {
  const PatchGrid g = plan_patches(256, 256, 256, 128);
  REQUIRE(g.origins.size() == 1);
  CHECK(g.origins[0] == std::pair{0, 0});
}

TEST_CASE("4000x6500 at patch 256 stride 128 yields exactly 1550 origins") {
  const PatchGrid g = plan_patches(4000, 6500, 256, 128);
  const auto rows = axis_oracle(4000, 256, 128);
  const auto cols = axis_oracle(6500, 256, 128);
  CHECK(rows.size() == 31);
  CHECK(cols.size() == 50);
  CHECK(g.origins.size() == 1550);
  CHECK(g.origins.size() == rows.size() * cols.size());
  // snapped final origins present
  CHECK(std::count(g.origins.begin(), g.origins.end(), std::pair{3744, 6244}) == 1);
}

TEST_CASE("300x300 at patch 256 stride 128 snaps to origins {0, 44}") {
  const PatchGrid g = plan_patches(300, 300, 256, 128);
  REQUIRE(g.origins.size() == 4);
  CHECK(g.origins[0] == std::pair{0, 0});
  CHECK(g.origins[1] == std::pair{0, 44});
  CHECK(g.origins[2] == std::pair{44, 0});
  CHECK(g.origins[3] == std::pair{44, 44});
}

TEST_CASE("coverage invariant: every pixel is inside at least one patch") {
  for (const auto& [h, w, p, s] : {std::tuple{300, 300, 256, 128}, {310, 530, 64, 48}}) {
    const PatchGrid g = plan_patches(h, w, p, s);
    std::vector<int> cover(static_cast<std::size_t>(h) * w, 0);
    for (const auto& [r, c] : g.origins)
      for (int y = r; y < r + p; ++y)
        for (int x = c; x < c + p; ++x) ++cover[static_cast<std::size_t>(y) * w + x];
    CHECK(*std::min_element(cover.begin(), cover.end()) >= 1);
  }
}

TEST_CASE("interior pixels are covered by exactly 4 patches at half-overlap") {
  const PatchGrid g = plan_patches(1024, 1024, 256, 128);
  std::vector<int> cover(1024 * 1024, 0);
  for (const auto& [r, c] : g.origins)
    for (int y = r; y < r + 256; ++y)
      for (int x = c; x < c + 256; ++x) ++cover[static_cast<std::size_t>(y) * 1024 + x];
  CHECK(cover[512 * 1024 + 512] == 4);
  CHECK(cover[400 * 1024 + 700] == 4);
}

TEST_CASE("plan_patches rejects bad geometry") {
  CHECK_THROWS_AS(plan_patches(100, 100, 256, 128), BadInputError);
  CHECK_THROWS_AS(plan_patches(512, 512, 256, 0), BadInputError);
  CHECK_THROWS_AS(plan_patches(512, 512, 256, 512), BadInputError);
}

TEST_CASE("extraction: single-origin grid returns the whole image; snapped patch equals slice") {
  const ChannelImage img = random_image(256, 256, 21);
  const PatchGrid g1 = plan_patches(256, 256, 256, 128);
  const auto whole = extract_patches(img, g1);
  REQUIRE(whole.size() == 1);
  CHECK(std::equal(whole[0].begin(), whole[0].end(), img.pixels.begin()));

  const ChannelImage img2 = random_image(300, 300, 22);
  const PatchGrid g2 = plan_patches(300, 300, 256, 128);
  const auto patches = extract_patches(img2, g2);
  // manual slice at the snapped origin (44, 44)
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      CHECK(patches[3][static_cast<std::size_t>(y) * 256 + x] == img2.at(44 + y, 44 + x));
}

TEST_CASE("split: 100 blocks at (0.7, 0.3) gives 70/30 and is seed-deterministic") {
  const PatchGrid g = plan_patches(1280, 1280, 128, 128);
  const SplitAssignment s = split_dataset(g, 0.7, 0.3, 128, 99);
  REQUIRE(s.blocks.size() == 100);
  CHECK(std::count(s.blocks.begin(), s.blocks.end(), Split::train) == 70);
  CHECK(std::count(s.blocks.begin(), s.blocks.end(), Split::val) == 30);
  const SplitAssignment again = split_dataset(g, 0.7, 0.3, 128, 99);
  CHECK(s.blocks == again.blocks);
  const SplitAssignment other = split_dataset(g, 0.7, 0.3, 128, 100);
  CHECK(s.blocks != other.blocks);
}

TEST_CASE("no patch lands in both train and val (exhaustive membership check)") {
  const PatchGrid g = plan_patches(768, 768, 256, 128);
  const SplitAssignment s = split_dataset(g, 0.6, 0.4, 256, 7);
  std::set<std::size_t> train_ids, val_ids;
  for (std::size_t i = 0; i < g.origins.size(); ++i) {
    const Split sp = s.for_patch(g, i);
    if (sp == Split::train) train_ids.insert(i);
    if (sp == Split::val) val_ids.insert(i);
  }
  std::vector<std::size_t> both;
  std::set_intersection(train_ids.begin(), train_ids.end(), val_ids.begin(), val_ids.end(),
                        std::back_inserter(both));
  CHECK(both.empty());
  CHECK(train_ids.size() + val_ids.size() == g.origins.size());
}

TEST_CASE("split sidecar file round trip") {
  namespace fs = std::filesystem;
  const PatchGrid g = plan_patches(512, 512, 128, 128);
  const SplitAssignment s = split_dataset(g, 0.7, 0.3, 128, 5);
  const auto path = (fs::temp_directory_path() / "parstain_split_test.txt").string();
  save_split(s, "deadbeef", path);
  std::string digest;
  const SplitAssignment back = load_split(path, &digest);
  CHECK(digest == "deadbeef");
  CHECK(back.blocks == s.blocks);
  CHECK(back.block_px == s.block_px);
  fs::remove(path);
}

TEST_CASE("extract-then-stitch reproduces the image under both blends") {
  const ChannelImage img = random_image(300, 300, 31);
  const PatchGrid g = plan_patches(300, 300, 128, 64);
  const auto patches = extract_patches(img, g);
  for (const Blend blend : {Blend::hann, Blend::uniform}) {
    const ChannelImage out = stitch_channel(patches, g, blend, img.pitch_nm);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      CHECK(std::abs(out.pixels[i] - img.pixels[i]) < 1e-6f);
  }
}

TEST_CASE("single-patch stitch returns the patch unchanged") {
  const ChannelImage img = random_image(128, 128, 32);
  const PatchGrid g = plan_patches(128, 128, 128, 64);
  const auto patches = extract_patches(img, g);
  const ChannelImage out = stitch_channel(patches, g, Blend::hann, img.pitch_nm);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(out.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-7));
}

TEST_CASE("two half-overlapping constant patches blend to the window ratio") {
  // 128x256 image, patch 128, stride 64: origins at columns {0, 64, 128};
  // make the three patches constant 0, 0.5, 1
  PatchGrid g = plan_patches(128, 256, 128, 64);
  REQUIRE(g.origins.size() == 3);
  std::vector<std::vector<float>> patches(3);
  patches[0].assign(128 * 128, 0.0f);
  patches[1].assign(128 * 128, 0.5f);
  patches[2].assign(128 * 128, 1.0f);

  SUBCASE("uniform blend midline") {
    ChannelImage out = stitch_channel(patches, g, Blend::uniform, 250.0);
    // column 96 is covered by patches 0 and 1 equally -> (0 + 0.5)/2
    CHECK(out.at(64, 96) == doctest::Approx(0.25).epsilon(1e-6));
    // column 128 is covered by patches 1 and 2 -> (0.5 + 1)/2
    CHECK(out.at(64, 128) == doctest::Approx(0.75).epsilon(1e-6));
  }

  SUBCASE("hann blend matches the closed-form window ratio") {
    ChannelImage out = stitch_channel(patches, g, Blend::hann, 250.0);
    const auto win = stitch_window(128, Blend::hann);
    for (const int x : {70, 96, 120}) {
      // patch 0 contributes at offset x, patch 1 at offset x - 64
      const double w0 = win[x], w1 = win[x - 64];
      const double expect = (w0 * 0.0 + w1 * 0.5) / (w0 + w1);
      CHECK(out.at(30, x) == doctest::Approx(expect).epsilon(1e-5));
    }
  }
}

TEST_CASE("stitch result does not depend on patch production order") {
  const ChannelImage img = random_image(384, 384, 33);
  const PatchGrid g = plan_patches(384, 384, 128, 64);
  auto patches = extract_patches(img, g);

  // simulate shuffled worker completion: produce patches in random order,
  // storing each at its origin index
  std::vector<std::vector<float>> shuffled(patches.size());
  std::vector<std::size_t> order(patches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(44);
  std::shuffle(order.begin(), order.end(), rng);
  for (const std::size_t i : order) shuffled[i] = patches[i];

  const ChannelImage a = stitch_channel(patches, g, Blend::hann, 250.0);
  const ChannelImage b = stitch_channel(shuffled, g, Blend::hann, 250.0);
  CHECK(a.pixels == b.pixels);  // bit-identical
}

TEST_CASE("stitch rejects missing or misshapen patches") {
  const PatchGrid g = plan_patches(256, 256, 128, 64);
  std::vector<std::vector<float>> too_few(g.origins.size() - 1,
                                          std::vector<float>(128 * 128, 0.0f));
  CHECK_THROWS_AS(stitch_channel(too_few, g, Blend::hann, 250.0), BadInputError);
  std::vector<std::vector<float>> wrong(g.origins.size(), std::vector<float>(64 * 64, 0.0f));
  CHECK_THROWS_AS(stitch_channel(wrong, g, Blend::hann, 250.0), BadInputError);
}

TEST_CASE("hann window is floored at 1e-3 so edges still contribute") {
  const auto win = stitch_window(256, Blend::hann);
  CHECK(win.front() == doctest::Approx(1e-3));
  CHECK(win.back() == doctest::Approx(1e-3));
  CHECK(win[128] == doctest::Approx(1.0).epsilon(1e-3));
}
