#include "salclass/metrics.hpp"
#include "support/fixtures.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace salclass;

namespace {

// Every positive/negative pair compared directly; ties count one half.
double pairwise_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double score = 0.0;
  for (double p : pos)
    for (double n : neg) score += p > n ? 1.0 : p == n ? 0.5 : 0.0;
  return score / static_cast<double>(pos.size() * neg.size());
}

SaliencyMap random_map(Rng& rng, Index h, Index w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SaliencyMap m(h, w);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

FixationSet random_fixations(Rng& rng, int n, Index h, Index w) {
  std::uniform_int_distribution<Index> row(0, h - 1), col(0, w - 1);
  FixationSet f;
  for (int k = 0; k < n; ++k) f.push_back({static_cast<double>(col(rng)), static_cast<double>(row(rng)), 200.0});
  return f;
}

}  // namespace

TEST(AucFromScores, MatchesPairwiseOracle) {
  Rng rng(1);
  std::uniform_int_distribution<int> count(1, 20), level(0, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> pos(static_cast<std::size_t>(count(rng))), neg(static_cast<std::size_t>(count(rng)));
    // Coarse levels force plenty of ties.
    for (auto& v : pos) v = level(rng) * 0.1;
    for (auto& v : neg) v = level(rng) * 0.1;
    ASSERT_NEAR(auc_from_scores(pos, neg), pairwise_auc(pos, neg), 1e-12) << trial;
  }
}

TEST(AucFromScores, FiveByFiveToyCase) {
  const std::vector<double> pos = {0.9, 0.5, 0.5, 0.3, 0.8};
  const std::vector<double> neg = {0.5, 0.1, 0.3, 0.95, 0.2};
  // 0.9:4 0.5:3.5 0.5:3.5 0.3:2.5 0.8:4 = 17.5 of 25
  EXPECT_NEAR(auc_from_scores(pos, neg), 17.5 / 25.0, 1e-12);
  EXPECT_NEAR(pairwise_auc(pos, neg), 17.5 / 25.0, 1e-12);
}

TEST(AucFromScores, Extremes) {
  EXPECT_EQ(auc_from_scores(std::vector<double>{2, 3}, std::vector<double>{0, 1}), 1.0);
  EXPECT_EQ(auc_from_scores(std::vector<double>{0, 1}, std::vector<double>{2, 3}), 0.0);
  EXPECT_EQ(auc_from_scores(std::vector<double>{1, 1}, std::vector<double>{1}), 0.5);
  EXPECT_THROW(auc_from_scores(std::vector<double>{}, std::vector<double>{1}), ContractError);
}

TEST(PearsonCc, IdenticalMapsGiveOne) {
  Rng rng(2);
  const SaliencyMap t = random_map(rng, 10, 10);
  EXPECT_EQ(pearson_cc(t, t), 1.0);
}

TEST(PearsonCc, NegatedMapGivesMinusOne) {
  Rng rng(3);
  const SaliencyMap t = random_map(rng, 10, 10);
  const SaliencyMap y = 2.0 - t.array();
  EXPECT_NEAR(pearson_cc(y, t), -1.0, 1e-15);
}

TEST(PearsonCc, CovarianceFormulaOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const SaliencyMap y = random_map(rng, 10, 10), t = random_map(rng, 10, 10);
    double my = 0, mt = 0;
    for (Index k = 0; k < 100; ++k) my += y.data()[k], mt += t.data()[k];
    my /= 100, mt /= 100;
    double cov = 0, vy = 0, vt = 0;
    for (Index k = 0; k < 100; ++k) {
      cov += (y.data()[k] - my) * (t.data()[k] - mt);
      vy += (y.data()[k] - my) * (y.data()[k] - my);
      vt += (t.data()[k] - mt) * (t.data()[k] - mt);
    }
    ASSERT_NEAR(pearson_cc(y, t), cov / std::sqrt(vy * vt), 1e-12);
  }
}

TEST(PearsonCc, Degenerate) {
  EXPECT_THROW(pearson_cc(SaliencyMap::Constant(3, 3, 1.0), SaliencyMap::Random(3, 3)), DegenerateError);
  EXPECT_THROW(pearson_cc(SaliencyMap::Random(3, 3), SaliencyMap::Random(3, 4)), ShapeError);
}

TEST(Nss, HandZScore) {
  SaliencyMap m(2, 2);
  m << 0, 0, 0, 1;
  const double value = nss(m, {{1.0, 1.0, 0.0}});
  EXPECT_NEAR(value, 0.75 / std::sqrt(0.1875), 1e-12);
  EXPECT_NEAR(value, 1.732, 1e-3);
}

TEST(Nss, EveryPixelOnceGivesZero) {
  Rng rng(5);
  const SaliencyMap m = random_map(rng, 6, 5);
  FixationSet all;
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 5; ++j) all.push_back({static_cast<double>(j), static_cast<double>(i), 0.0});
  EXPECT_NEAR(nss(m, all), 0.0, 1e-12);
}

TEST(Nss, DirectFormulaOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const SaliencyMap m = random_map(rng, 8, 9);
    const FixationSet f = random_fixations(rng, 7, 8, 9);
    double mean = 0;
    for (Index k = 0; k < m.size(); ++k) mean += m.data()[k];
    mean /= static_cast<double>(m.size());
    double var = 0;
    for (Index k = 0; k < m.size(); ++k) var += (m.data()[k] - mean) * (m.data()[k] - mean);
    const double sd = std::sqrt(var / static_cast<double>(m.size()));
    double acc = 0;
    for (const auto& p : f) acc += (m(static_cast<Index>(p.y), static_cast<Index>(p.x)) - mean) / sd;
    ASSERT_NEAR(nss(m, f), acc / 7.0, 1e-12);
  }
}

TEST(Nss, AffineInvariance) {
  Rng rng(7);
  std::uniform_real_distribution<double> a(0.1, 10.0), b(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const SaliencyMap m = random_map(rng, 12, 12);
    const FixationSet f = random_fixations(rng, 5, 12, 12);
    const SaliencyMap t = a(rng) * m.array() + b(rng);
    ASSERT_NEAR(nss(t, f), nss(m, f), 1e-10);
  }
}

TEST(Nss, PositiveAboveMean) {
  SaliencyMap m = SaliencyMap::Zero(4, 4);
  m(1, 2) = 3.0;
  EXPECT_GT(nss(m, {{2.0, 1.0, 0.0}}), 0.0);
}

TEST(Nss, Degenerate) {
  EXPECT_THROW(nss(SaliencyMap::Constant(3, 3, 0.5), {{1, 1, 0}}), DegenerateError);
  EXPECT_THROW(nss(SaliencyMap::Random(3, 3), {}), DegenerateError);
}

TEST(ShuffledAuc, PerfectSeparation) {
  SaliencyMap m = SaliencyMap::Zero(5, 5);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  const FixationSet pos = {{0, 0, 0}, {1, 1, 0}};
  const FixationSet neg = {{3, 3, 0}, {4, 4, 0}, {2, 3, 0}};
  EXPECT_EQ(shuffled_auc(m, pos, neg, 10, 1), 1.0);
}

TEST(ShuffledAuc, ConstantMapIsChance) {
  Rng rng(8);
  const auto pos = random_fixations(rng, 6, 10, 10), neg = random_fixations(rng, 30, 10, 10);
  EXPECT_EQ(shuffled_auc(SaliencyMap::Constant(10, 10, 0.3), pos, neg, 20, 1), 0.5);
}

TEST(ShuffledAuc, SingleSplitWithWholePoolIsPairwiseAuc) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const SaliencyMap m = random_map(rng, 10, 10);
    const auto pos = random_fixations(rng, 5, 10, 10), neg = random_fixations(rng, 5, 10, 10);
    std::vector<double> p, n;
    for (const auto& f : pos) p.push_back(m(static_cast<Index>(f.y), static_cast<Index>(f.x)));
    for (const auto& f : neg) n.push_back(m(static_cast<Index>(f.y), static_cast<Index>(f.x)));
    ASSERT_NEAR(shuffled_auc(m, pos, neg, 1, static_cast<std::uint64_t>(trial)), pairwise_auc(p, n), 1e-12);
  }
}

TEST(ShuffledAuc, MonotoneTransformInvariance) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const SaliencyMap m = random_map(rng, 10, 10);
    const auto pos = random_fixations(rng, 6, 10, 10), neg = random_fixations(rng, 40, 10, 10);
    const SaliencyMap t = (3.0 * m.array()).exp() + 2.0;
    ASSERT_NEAR(shuffled_auc(t, pos, neg, 10, 5), shuffled_auc(m, pos, neg, 10, 5), 1e-12);
  }
}

TEST(ShuffledAuc, SeededAndSplitSensitive) {
  Rng rng(11);
  const SaliencyMap m = random_map(rng, 10, 10);
  const auto pos = random_fixations(rng, 5, 10, 10), neg = random_fixations(rng, 50, 10, 10);
  EXPECT_EQ(shuffled_auc(m, pos, neg, 100, 3), shuffled_auc(m, pos, neg, 100, 3));
  EXPECT_NE(shuffled_auc(m, pos, neg, 1, 3), shuffled_auc(m, pos, neg, 1, 4));
}

TEST(ShuffledAuc, SmallPoolDrawsWithReplacement) {
  SaliencyMap m = SaliencyMap::Zero(4, 4);
  m(0, 0) = 1.0;
  const FixationSet pos = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  EXPECT_EQ(shuffled_auc(m, pos, {{3, 3, 0}}, 5, 1), 1.0);
}

TEST(ShuffledAuc, ContractErrors) {
  const SaliencyMap m = SaliencyMap::Random(4, 4);
  EXPECT_THROW(shuffled_auc(m, {}, {{1, 1, 0}}, 1, 1), ContractError);
  EXPECT_THROW(shuffled_auc(m, {{1, 1, 0}}, {}, 1, 1), ContractError);
  EXPECT_THROW(shuffled_auc(m, {{4, 1, 0}}, {{1, 1, 0}}, 1, 1), ContractError);
  EXPECT_THROW(shuffled_auc(m, {{1, 1, 0}}, {{1, 1, 0}}, 0, 1), ContractError);
}

namespace {

std::vector<MapPair> random_pairs(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<MapPair> pairs;
  for (int i = 0; i < n; ++i) {
    pairs.push_back({"im" + std::to_string(i), random_map(rng, 16, 16), random_map(rng, 16, 16),
                     random_fixations(rng, 6, 16, 16)});
  }
  return pairs;
}

}  // namespace

TEST(EvaluateMaps, ReportsPerImageAndMeans) {
  const auto pairs = random_pairs(12, 5);
  const auto report = evaluate_maps(pairs, {});
  ASSERT_EQ(report.per_image.size(), 5u);
  double s = 0, c = 0;
  for (const auto& m : report.per_image) {
    EXPECT_GE(m.s_auc, 0.0);
    EXPECT_LE(m.s_auc, 1.0);
    EXPECT_GE(m.cc, -1.0);
    EXPECT_LE(m.cc, 1.0);
    s += m.s_auc, c += m.cc;
  }
  EXPECT_NEAR(report.s_auc, s / 5, 1e-15);
  EXPECT_NEAR(report.cc, c / 5, 1e-15);
  EXPECT_EQ(report.per_image[2].image_id, "im2");
}

TEST(EvaluateMaps, ThreadCountDoesNotChangeResults) {
  const auto pairs = random_pairs(13, 7);
  ::setenv("SALCLASS_THREADS", "1", 1);
  const auto one = evaluate_maps(pairs, {});
  ::setenv("SALCLASS_THREADS", "4", 1);
  const auto many = evaluate_maps(pairs, {});
  ::unsetenv("SALCLASS_THREADS");
  EXPECT_EQ(one.s_auc, many.s_auc);
  EXPECT_EQ(one.nss, many.nss);
  EXPECT_EQ(metric_summary_json(one), metric_summary_json(many));
}

TEST(EvaluateMaps, ThreadCapFromEnvironment) {
  ::setenv("SALCLASS_THREADS", "1", 1);
  EXPECT_EQ(worker_threads(), 1u);
  ::setenv("SALCLASS_THREADS", "junk", 1);
  EXPECT_GE(worker_threads(), 1u);
  ::unsetenv("SALCLASS_THREADS");
}

TEST(EvaluateMaps, ConstantPredictionFlaggedDegenerate) {
  auto pairs = random_pairs(14, 4);
  for (auto& p : pairs) p.predicted.setConstant(0.5);
  const auto report = evaluate_maps(pairs, {});
  EXPECT_EQ(report.s_auc, 0.5);
  EXPECT_EQ(report.skipped_cc, 4);
  EXPECT_EQ(report.skipped_nss, 4);
  EXPECT_TRUE(std::isnan(report.cc));
  const auto json = nlohmann::json::parse(metric_summary_json(report));
  EXPECT_TRUE(json["cc"].is_null());
  EXPECT_EQ(json["skipped"]["cc"], 4);
}

TEST(EvaluateMaps, OutOfBoundsFixationsIgnored) {
  auto pairs = random_pairs(15, 3);
  auto clean = evaluate_maps(pairs, {});
  for (auto& p : pairs) p.fixations.push_back({-3.0, 100.0, 0.0});
  auto noisy = evaluate_maps(pairs, {});
  EXPECT_EQ(clean.s_auc, noisy.s_auc);
  EXPECT_EQ(clean.nss, noisy.nss);
}

TEST(HumanBaseline, CcIsOneAndSaucHigh) {
  SynthConfig synth;
  const Dataset data = salclass::testing::synth_set(synth, 4);
  const auto report = human_baseline(data, {});
  for (const auto& m : report.per_image) EXPECT_EQ(m.cc, 1.0) << m.image_id;
  EXPECT_EQ(report.cc, 1.0);
  EXPECT_GT(report.s_auc, 0.9);
  EXPECT_GT(report.nss, 0.0);
}

TEST(MetricFiles, CsvAndJson) {
  const auto report = evaluate_maps(random_pairs(16, 2), {});
  const auto dir = std::filesystem::temp_directory_path() / "salclass_metric_files";
  std::filesystem::create_directories(dir);
  write_metric_csv(dir / "m.csv", report);
  write_metric_json(dir / "m.json", report);
  std::ifstream csv(dir / "m.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "image_id,s_auc,nss,cc");
  EXPECT_EQ(row.rfind("im0,", 0), 0u);
  std::ifstream js(dir / "m.json");
  const auto json = nlohmann::json::parse(js);
  EXPECT_EQ(json["n_images"], 2);
  EXPECT_DOUBLE_EQ(json["s_auc"].get<double>(), report.s_auc);
}
