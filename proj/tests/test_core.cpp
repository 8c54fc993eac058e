#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "parstain/config.hpp"
#include "parstain/image.hpp"
#include "parstain/image_io.hpp"
#include "parstain/manifest.hpp"

using namespace parstain;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("parstain_core_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("8-bit full-scale grayscale loads as all 1.0") {
  TempDir td;
  ChannelImage img(4, 5);
  std::fill(img.pixels.begin(), img.pixels.end(), 1.0f);
  save_image(img, td.file("a.png"), 8);
  const ChannelImage back = load_channel(td.file("a.png"));
  for (const float v : back.pixels) CHECK(v == 1.0f);
}

TEST_CASE("16-bit all-zero grayscale loads as all 0.0") {
  TempDir td;
  ChannelImage img(3, 3);
  save_image(img, td.file("z.png"), 16);
  const ChannelImage back = load_channel(td.file("z.png"));
  for (const float v : back.pixels) CHECK(v == 0.0f);
}

TEST_CASE("round-trip of a random 8-bit rgb image is bit-identical") {
  TempDir td;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> u8(0, 255);
  RGBImage img(17, 23);
  for (auto& v : img.pixels) v = u8(rng) / 255.0f;
  save_image(img, td.file("rgb.png"));
  const RGBImage back = load_rgb(td.file("rgb.png"));
  REQUIRE(back.height == img.height);
  REQUIRE(back.width == img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(back.pixels[i] == img.pixels[i]);
}

TEST_CASE("save quantization is round-half-up") {
  TempDir td;
  ChannelImage img(1, 2);
  img.pixels = {0.5f, 0.0f};
  save_image(img, td.file("q.png"), 8);
  const ChannelImage back = load_channel(td.file("q.png"));
  CHECK(back.pixels[0] == doctest::Approx(128.0 / 255.0));  // 0.5 * 255 = 127.5 -> 128
  CHECK(back.pixels[1] == 0.0f);
}

TEST_CASE("round trip error bounded by one quantization step per bit depth") {
  TempDir td;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ChannelImage img(31, 29);
  for (auto& v : img.pixels) v = u(rng);
  for (const int bits : {8, 16}) {
    save_image(img, td.file("rt.png"), bits);
    const ChannelImage back = load_channel(td.file("rt.png"));
    const double tol = 1.0 / ((1 << bits) - 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= tol);
  }
}

TEST_CASE("pixel pitch survives the PNG round trip") {
  TempDir td;
  ChannelImage img(4, 4, 250.0);
  save_image(img, td.file("p.png"));
  CHECK(load_channel(td.file("p.png")).pitch_nm == doctest::Approx(250.0));
}

TEST_CASE("load errors: missing file and wrong channel count") {
  TempDir td;
  CHECK_THROWS_AS(load_channel(td.file("missing.png")), BadInputError);
  ChannelImage gray(4, 4);
  save_image(gray, td.file("gray.png"));
  CHECK_THROWS_AS(load_rgb(td.file("gray.png")), BadInputError);
  RGBImage rgb(4, 4);
  save_image(rgb, td.file("rgb.png"));
  CHECK_THROWS_AS(load_channel(td.file("rgb.png")), BadInputError);
}

TEST_CASE("channel invariant validation rejects out-of-range pixels") {
  ChannelImage img(2, 2);
  img.pixels[0] = 1.5f;
  CHECK_THROWS_AS(img.validate(), BadInputError);
  CHECK_THROWS_AS(ChannelImage(0, 4), BadInputError);
}

TEST_CASE("manifest write/read round trip") {
  TempDir td;
  RunManifest m;
  m.seed = 42;
  m.config_digest = sha256_hex("config text");
  m.created = now_iso8601();
  m.put("input_digest.nr", sha256_hex("nr"));
  m.put("stage", std::string("phantom"));
  m.put("noise_sigma", 0.01);
  write_manifest(m, td.file("manifest.txt"));
  const RunManifest back = read_manifest(td.file("manifest.txt"));
  CHECK(back == m);
}

TEST_CASE("malformed manifest is rejected") {
  TempDir td;
  std::FILE* f = std::fopen(td.file("bad.txt").c_str(), "w");
  std::fprintf(f, "no separator here\n");
  std::fclose(f);
  CHECK_THROWS_AS(read_manifest(td.file("bad.txt")), BadInputError);
}

TEST_CASE("config digest changes with content and ignores formatting") {
  PipelineConfig a;
  PipelineConfig b;
  CHECK(a.digest() == b.digest());
  b.train.lambda_l1 = 50.0;
  CHECK(a.digest() != b.digest());

  const PipelineConfig c = parse_config_text("{\"seed\": 7}");
  const PipelineConfig d = parse_config_text("{\n  \"seed\":   7\n}");
  CHECK(c.digest() == d.digest());
  CHECK(c.digest() != a.digest());
}

TEST_CASE("unknown config keys are rejected") {
  CHECK_THROWS_AS(parse_config_text("{\"sede\": 1}"), BadInputError);
  CHECK_THROWS_AS(parse_config_text("{\"train\": {\"lamda\": 1}}"), BadInputError);
}

TEST_CASE("config validation enforces spec bounds") {
  CHECK_THROWS_AS(parse_config_text("{\"train\": {\"max_epochs\": 501}}"), BadInputError);
  CHECK_THROWS_AS(parse_config_text("{\"train\": {\"patience\": 0}}"), BadInputError);
  CHECK_THROWS_AS(parse_config_text("{\"preprocess\": {\"low_saturate_pct\": 60, \"high_saturate_pct\": 41}}"),
                  BadInputError);
}

TEST_CASE("rerun with the same seed and inputs records identical digests") {
  std::mt19937_64 rng_a(99), rng_b(99);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ChannelImage a(8, 8), b(8, 8);
  for (auto& v : a.pixels) v = u(rng_a);
  for (auto& v : b.pixels) v = u(rng_b);
  CHECK(digest_pixels(a) == digest_pixels(b));
  b.pixels[0] += 0.25f;
  CHECK(digest_pixels(a) != digest_pixels(b));
}
