#include "salclass/augment.hpp"
#include "salclass/blur.hpp"
#include "salclass/dataset.hpp"
#include "salclass/fixation.hpp"
#include "salclass/image_io.hpp"
#include "salclass/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

using namespace salclass;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("salclass_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

Image random_image(Rng& rng, Index c, Index h, Index w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(c, h, w);
  for (auto& ch : img.channels)
    for (Index k = 0; k < ch.size(); ++k) ch.data()[k] = u(rng);
  return img;
}

std::pair<Index, Index> argmax(const Plane& p) {
  Index r = 0, c = 0;
  p.maxCoeff(&r, &c);
  return {r, c};
}

}  // namespace

TEST(Fixations, NearestPixelRoundsAndClamps) {
  EXPECT_EQ(nearest_pixel({2.4, 3.6, 0}, 10, 10), (std::pair<Index, Index>{4, 2}));
  EXPECT_EQ(nearest_pixel({9.7, 0.2, 0}, 10, 10), (std::pair<Index, Index>{0, 9}));
}

TEST(Fixations, IngestRejectsOutOfBounds) {
  const FixationSet raw = {{0, 0, 100}, {9.99, 4.5, 100}, {10, 1, 100}, {-0.1, 1, 100}, {1, 5, 100}, {1, 1, -5}};
  const auto ingest = ingest_fixations(raw, 5, 10);
  EXPECT_EQ(ingest.kept.size(), 2u);
  EXPECT_EQ(ingest.rejected, 4u);
}

TEST(Fixations, DefaultSigma) { EXPECT_NEAR(default_sigma_px(480, 640), 16.8, 1e-12); }

TEST(Heatmap, SingleCentreFixation) {
  const auto map = fixations_to_heatmap({{10, 7, 0}}, 15, 21, 2.0);
  EXPECT_EQ(argmax(map), (std::pair<Index, Index>{7, 10}));
  EXPECT_EQ(map(7, 10), 1.0);
  EXPECT_EQ(map.minCoeff(), 0.0);
}

TEST(Heatmap, DuplicateFixationsNormalizeAway) {
  const auto one = fixations_to_heatmap({{5, 6, 0}}, 20, 20, 3.0);
  const auto two = fixations_to_heatmap({{5, 6, 0}, {5, 6, 0}}, 20, 20, 3.0);
  EXPECT_LE((one - two).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Heatmap, TwoPeaksMatchGaussianSum) {
  const FixationSet f = {{8, 10, 0}, {30, 20, 0}};
  const double sigma = 2.0;
  const auto map = fixations_to_heatmap(f, 32, 40, sigma);
  SaliencyMap oracle = SaliencyMap::Zero(32, 40);
  for (Index i = 0; i < 32; ++i)
    for (Index j = 0; j < 40; ++j)
      for (const auto& p : f) {
        const double d2 = (j - p.x) * (j - p.x) + (i - p.y) * (i - p.y);
        if (d2 <= 9.0 * sigma * sigma) oracle(i, j) += std::exp(-d2 / (2.0 * sigma * sigma));
      }
  oracle = (oracle.array() - oracle.minCoeff()) / (oracle.maxCoeff() - oracle.minCoeff());
  EXPECT_LE((map - oracle).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(map(10, 8), 1.0);
  EXPECT_EQ(map(20, 30), 1.0);
  EXPECT_GT(map(10, 8), map(10, 9));
  EXPECT_GT(map(20, 30), map(20, 29));
}

TEST(Heatmap, DurationWeighting) {
  const FixationSet f = {{5, 5, 100}, {25, 5, 300}};
  const auto uniform = fixations_to_heatmap(f, 10, 30, 2.0, FixationWeighting::uniform);
  const auto weighted = fixations_to_heatmap(f, 10, 30, 2.0, FixationWeighting::duration);
  EXPECT_EQ(uniform(5, 5), uniform(5, 25));
  EXPECT_NEAR(weighted(5, 5), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(weighted(5, 25), 1.0);
}

TEST(Heatmap, Errors) {
  EXPECT_THROW(fixations_to_heatmap({}, 10, 10, 2.0), ContractError);
  EXPECT_THROW(fixations_to_heatmap({{50, 50, 0}}, 10, 10, 2.0), ContractError);
  EXPECT_THROW(fixations_to_heatmap({{5, 5, 0}}, 10, 10, 0.0), ContractError);
}

TEST(FixationCsv, RoundTrip) {
  const auto dir = temp_dir("fixcsv");
  const FixationSet f = {{1.5, 2.25, 180}, {0.1, 63.9, 0}};
  write_fixations_csv(dir / "f.csv", f);
  EXPECT_EQ(read_fixations_csv(dir / "f.csv"), f);
  EXPECT_EQ(slurp(dir / "f.csv").rfind("x,y,duration_ms\n", 0), 0u);
  write_text(dir / "bare.csv", "3,4,5\n");
  EXPECT_EQ(read_fixations_csv(dir / "bare.csv"), (FixationSet{{3, 4, 5}}));
  write_text(dir / "bad.csv", "x,y,duration_ms\n1,two,3\n");
  EXPECT_THROW(read_fixations_csv(dir / "bad.csv"), std::runtime_error);
}

TEST(BlurSchedule, PaperDefaults) {
  const auto steps = blur_schedule();
  ASSERT_EQ(steps.size(), 11u);
  EXPECT_EQ(steps.front(), (BlurStep{0.0, 10.0}));
  EXPECT_EQ(steps.back().variance, 0.0);
  EXPECT_DOUBLE_EQ(steps.back().time_s, 5.0);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    EXPECT_DOUBLE_EQ(steps[k].time_s, 0.5 * static_cast<double>(k));
    EXPECT_DOUBLE_EQ(steps[k].variance, 10.0 - static_cast<double>(k));
  }
}

TEST(BlurSchedule, ClampsFinalStep) {
  const auto steps = blur_schedule(2.5, 1.0, 1.0);
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_EQ(steps.back(), (BlurStep{3.0, 0.0}));
}

TEST(GaussianBlur, ZeroVarianceIsIdentity) {
  Rng rng(1);
  const Image img = random_image(rng, 3, 12, 17);
  const Image out = apply_gaussian_blur(img, 0.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.channels[c], img.channels[c]);
}

TEST(GaussianBlur, PreservesMean) {
  Rng rng(2);
  for (double variance : {0.5, 1.0, 4.0, 10.0}) {
    const Image img = random_image(rng, 1, 40, 33);
    const Plane out = apply_gaussian_blur(img.channels[0], variance);
    EXPECT_NEAR(out.mean(), img.channels[0].mean(), 1e-6) << variance;
    EXPECT_LT(out.maxCoeff() - out.minCoeff(), img.channels[0].maxCoeff() - img.channels[0].minCoeff());
  }
}

TEST(GaussianBlur, ConstantStaysConstant) {
  const Plane p = Plane::Constant(9, 9, 0.25);
  EXPECT_LE((apply_gaussian_blur(p, 3.0).array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(Augment, RescaledExtent) {
  EXPECT_EQ(rescaled_extent(400, 300, 340), (std::pair<Index, Index>{453, 340}));
  EXPECT_EQ(rescaled_extent(300, 600, 340), (std::pair<Index, Index>{340, 680}));
  EXPECT_EQ(rescaled_extent(64, 64, 72), (std::pair<Index, Index>{72, 72}));
}

TEST(Augment, FullSizeCropIsWholeImage) {
  Rng rng(3);
  const Image img = random_image(rng, 3, 340, 340);
  const SaliencyMap heat = random_image(rng, 1, 340, 340).channels[0];
  AugmentConfig config;
  config.crop_size = 340;
  Rng aug(4);
  const auto crops = augment(img, heat, config, aug);
  ASSERT_EQ(crops.size(), 10u);
  EXPECT_EQ(crops[0].image.channels[1], img.channels[1]);
  EXPECT_EQ(crops[0].heatmap, heat);
  EXPECT_EQ(crops[5].heatmap, flip_horizontal(heat));
}

TEST(Augment, FlipIsInvolution) {
  Rng rng(5);
  const Image img = random_image(rng, 3, 7, 11);
  const Image back = flip_horizontal(flip_horizontal(img));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(back.channels[c], img.channels[c]);
  EXPECT_EQ(flip_horizontal(flip_horizontal(img.channels[0])), img.channels[0]);
}

TEST(Augment, GoldenCropOffsets) {
  struct Expected {
    Index top, left;
    bool flipped;
  };
  const std::vector<Expected> paper = {{1, 4, false},   {44, 30, false}, {115, 31, false}, {43, 28, false},
                                       {140, 22, false}, {1, 4, true},    {44, 30, true},   {115, 31, true},
                                       {43, 28, true},   {140, 22, true}};
  Rng rng = make_rng(42, "augment", 0);
  const auto geometries = sample_crop_geometries(400, 300, AugmentConfig{}, rng);
  ASSERT_EQ(geometries.size(), paper.size());
  for (std::size_t k = 0; k < paper.size(); ++k) {
    EXPECT_EQ(geometries[k].top, paper[k].top) << k;
    EXPECT_EQ(geometries[k].left, paper[k].left) << k;
    EXPECT_EQ(geometries[k].flipped, paper[k].flipped) << k;
    EXPECT_EQ(geometries[k].scaled_height, 453);
    EXPECT_EQ(geometries[k].scaled_width, 340);
    EXPECT_EQ(geometries[k].size, 299);
  }
  const std::vector<Expected> desk = {{1, 4, false}, {7, 8, false}, {4, 4, false}, {4, 1, false}, {3, 3, false}};
  Rng rng2 = make_rng(42, "augment", 1);
  const auto small = sample_crop_geometries(64, 64, AugmentConfig::desk(), rng2);
  for (std::size_t k = 0; k < desk.size(); ++k) {
    EXPECT_EQ(small[k].top, desk[k].top) << k;
    EXPECT_EQ(small[k].left, desk[k].left) << k;
  }
}

TEST(Augment, LockstepDeltaPeaks) {
  Rng rng(6);
  std::uniform_int_distribution<Index> pos(20, 43);
  for (int trial = 0; trial < 100; ++trial) {
    // A bright dot in every image channel and a delta in the heatmap at the
    // same pixel must land on the same crop pixel.
    const Index r = pos(rng), c = pos(rng);
    Image img(3, 64, 64);
    SaliencyMap heat = SaliencyMap::Zero(64, 64);
    for (auto& ch : img.channels) ch(r, c) = 1.0;
    heat(r, c) = 1.0;
    Rng aug = make_rng(9, "augment", static_cast<std::uint64_t>(trial));
    for (const auto& crop : augment(img, heat, AugmentConfig::desk(), aug)) {
      const auto peak = argmax(crop.heatmap);
      for (const auto& ch : crop.image.channels) ASSERT_EQ(argmax(ch), peak) << trial;
      const auto mapped = crop.geometry.apply({static_cast<double>(c), static_cast<double>(r), 0});
      ASSERT_LE(std::abs(mapped.x - static_cast<double>(peak.second)), 1.0) << trial;
      ASSERT_LE(std::abs(mapped.y - static_cast<double>(peak.first)), 1.0) << trial;
    }
  }
}

TEST(Augment, TransformFixationsDropsOutside) {
  CropGeometry g{100, 100, 100, 100, 10, 20, 50, false};
  const auto out = transform_fixations({{25, 15, 1}, {5, 5, 1}, {69, 59, 1}}, g);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].x, 5.0);
  EXPECT_EQ(out[0].y, 5.0);
  g.flipped = true;
  EXPECT_EQ(g.apply({25, 15, 1}).x, 44.0);
}

TEST(Augment, CenterCrop) {
  const auto g = center_crop_geometry(400, 300, AugmentConfig{});
  EXPECT_EQ(g.top, (453 - 299) / 2);
  EXPECT_EQ(g.left, (340 - 299) / 2);
  EXPECT_FALSE(g.flipped);
}

TEST(Augment, TooSmallForCrop) {
  AugmentConfig config;
  config.rescale_target = 100;
  EXPECT_THROW(config.validate(), std::exception);
}

TEST(Manifest, SaveLoadRoundTrip) {
  const auto dir = temp_dir("manifest");
  Manifest m;
  m.classes = {"cat", "dog"};
  m.fractions = std::array<double, 3>{0.5, 0.25, 0.25};
  m.train = {{"a", "img/a.png", 0, "fix/a.csv"}, {"b", "img/b.png", 1, "fix/b.csv"}};
  m.val = {{"c", "img/c.png", 1, "fix/c.csv"}};
  m.test = {{"d", "img/d.png", 0, "fix/d.csv"}};
  save_manifest(m, dir / "m.tsv");
  const Manifest back = load_manifest(dir / "m.tsv");
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.root, dir);
  save_manifest(back, dir / "again.tsv");
  EXPECT_EQ(slurp(dir / "m.tsv"), slurp(dir / "again.tsv"));
}

TEST(Manifest, MalformedLineNamesLineNumber) {
  const auto dir = temp_dir("manifest_bad");
  write_text(dir / "m.tsv", "@class\t0\ta\n@class\t1\tb\n@split\ttrain\nx\timg.png\tone\tf.csv\n");
  try {
    load_manifest(dir / "m.tsv");
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos) << e.what();
  }
  write_text(dir / "short.tsv", "@class\t0\ta\n@class\t1\tb\n@split\ttrain\nx\timg.png\n");
  EXPECT_THROW(load_manifest(dir / "short.tsv"), ManifestError);
}

TEST(Manifest, Validation) {
  Manifest m;
  m.classes = {"a", "b"};
  m.train = {{"x", "x.png", 2, "x.csv"}};
  EXPECT_THROW(m.validate(), ManifestError);
  m.train = {{"x", "x.png", 0, "x.csv"}};
  m.val = {{"x", "y.png", 1, "y.csv"}};
  EXPECT_THROW(m.validate(), ManifestError);
  m.val = {{"y", "y.png", 1, "y.csv"}};
  EXPECT_NO_THROW(m.validate());
  m.fractions = std::array<double, 3>{0.5, 0.6, 0.1};
  EXPECT_THROW(m.validate(), ManifestError);
  for (int k = 0; k < 20; ++k) m.train.push_back({"t" + std::to_string(k), "t.png", k % 2, "t.csv"});
  m.fractions = std::array<double, 3>{0.1, 0.1, 0.8};
  EXPECT_THROW(m.validate(), ManifestError);
  m.fractions = std::array<double, 3>{0.9, 0.05, 0.05};
  EXPECT_NO_THROW(m.validate());
  m.classes = {"a"};
  m.fractions.reset();
  EXPECT_THROW(m.validate(), ManifestError);
}

TEST(Synth, BalancedAndSplit) {
  const auto dir = temp_dir("synth");
  SynthConfig config;
  const Manifest m = synth_dataset(config, dir);
  EXPECT_EQ(m.total(), 128u);
  EXPECT_EQ(m.train.size(), 104u);
  EXPECT_EQ(m.val.size(), 12u);
  EXPECT_EQ(m.test.size(), 12u);
  std::vector<int> counts(4, 0);
  for (Split s : {Split::train, Split::val, Split::test})
    for (const auto& e : m.entries(s)) ++counts[static_cast<std::size_t>(e.class_index)];
  EXPECT_EQ(counts, (std::vector<int>{32, 32, 32, 32}));
  EXPECT_EQ(load_manifest(dir / "manifest.tsv"), m);
}

TEST(Synth, SameSeedSameBytes) {
  SynthConfig config;
  config.n_per_class = 4;
  const auto a = temp_dir("synth_a"), b = temp_dir("synth_b");
  synth_dataset(config, a);
  synth_dataset(config, b);
  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    ASSERT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 1 + 2 * 16);
  config.seed = 8;
  const auto c = temp_dir("synth_c");
  synth_dataset(config, c);
  EXPECT_NE(slurp(a / "images/img00000.png"), slurp(c / "images/img00000.png"));
}

TEST(Synth, FixationsClusterOnTargetPatch) {
  SynthConfig config;
  const Sample s = synth_sample(config, 2, 17);
  ASSERT_EQ(s.fixations.size(), 8u);
  EXPECT_EQ(s.heatmap.rows(), 64);
  EXPECT_EQ(s.image.n_channels(), 3);
  double mx = 0, my = 0;
  for (const auto& f : s.fixations) mx += f.x / 8, my += f.y / 8;
  for (const auto& f : s.fixations) EXPECT_LT(std::hypot(f.x - mx, f.y - my), 16.0);
}

TEST(Synth, ConfigValidation) {
  SynthConfig config;
  config.n_classes = 1;
  EXPECT_THROW(config.validate(), std::exception);
  config = SynthConfig{};
  config.fractions = {0.5, 0.5, 0.5};
  EXPECT_THROW(config.validate(), std::exception);
}

TEST(LoadSplit, ReadsImagesAndRendersHeatmaps) {
  const auto dir = temp_dir("load_split");
  SynthConfig config;
  config.n_per_class = 5;
  const Manifest m = synth_dataset(config, dir);
  LoadReport report;
  const Dataset train = load_split(m, Split::train, {}, &report);
  EXPECT_EQ(train.size(), m.train.size());
  EXPECT_EQ(report.samples, train.size());
  EXPECT_EQ(train.n_classes, 4);
  const Sample& s = train.samples[0];
  const int index = std::stoi(s.image_id.substr(3));
  const Sample ref = synth_sample(config, s.label, static_cast<std::uint64_t>(index));
  EXPECT_LE((s.image.channels[0] - ref.image.channels[0]).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
  EXPECT_EQ(s.fixations, ref.fixations);
  EXPECT_EQ(s.heatmap.maxCoeff(), 1.0);
}

TEST(ImageIo, PgmRoundTripWithinQuantization) {
  const auto dir = temp_dir("pgm");
  Rng rng(7);
  const Plane p = random_image(rng, 1, 9, 13).channels[0];
  write_pgm(dir / "a.pgm", p, 8);
  EXPECT_LE((read_pgm(dir / "a.pgm") - p).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
  write_pgm(dir / "b.pgm", p, 16);
  EXPECT_LE((read_pgm(dir / "b.pgm") - p).cwiseAbs().maxCoeff(), 0.5 / 65535.0 + 1e-12);
}

TEST(ImageIo, PngRoundTrip) {
  const auto dir = temp_dir("png");
  Rng rng(8);
  const Image img = random_image(rng, 3, 6, 5);
  write_png(dir / "a.png", img, 8);
  const Image back = read_image(dir / "a.png");
  ASSERT_EQ(back.n_channels(), 3);
  for (std::size_t c = 0; c < 3; ++c)
    EXPECT_LE((back.channels[c] - img.channels[c]).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
}

TEST(ImageIo, ExportMapNormalizes) {
  const auto dir = temp_dir("export");
  SaliencyMap m(2, 3);
  m << -1, 0, 1, 2, 3, 4;
  export_map(dir / "m.pgm", m);
  const Plane back = read_pgm(dir / "m.pgm");
  EXPECT_EQ(back(0, 0), 0.0);
  EXPECT_EQ(back(1, 2), 1.0);
  EXPECT_LE(std::abs(back(0, 2) - 0.4), 0.5 / 255.0 + 1e-12);
  EXPECT_THROW(export_map(dir / "m.bmp", m), IoError);
}

TEST(ImageIo, Errors) {
  const auto dir = temp_dir("io_err");
  EXPECT_THROW(read_image(dir / "missing.png"), IoError);
  write_text(dir / "bad.pgm", "P2\n1 1\n255\n0\n");
  EXPECT_THROW(read_pgm(dir / "bad.pgm"), IoError);
  write_text(dir / "short.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(read_pgm(dir / "short.pgm"), IoError);
  write_text(dir / "junk.png", "not a png");
  EXPECT_THROW(read_png(dir / "junk.png"), IoError);
}
