#include "salclass/metrics.hpp"

#include "salclass/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

namespace salclass {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double value_at(const SaliencyMap& map, const Fixation& f) {
  const auto [r, c] = nearest_pixel(f, map.rows(), map.cols());
  return map(r, c);
}

void require_in_bounds(const FixationSet& points, const SaliencyMap& map, const char* what) {
  if (points.empty()) throw ContractError(std::string("shuffled_auc: no ") + what);
  for (const auto& p : points) {
    if (!in_bounds(p, map.rows(), map.cols())) {
      throw ContractError(std::string("shuffled_auc: ") + what + " point out of bounds");
    }
  }
}

}  // namespace

double auc_from_scores(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw ContractError("auc_from_scores: empty score set");
  std::vector<double> pos(positives.begin(), positives.end());
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  // Lower the threshold through every distinct score; counts stay integral
  // so the area is exact until the final division.
  double tp = 0.0, fp = 0.0, area2 = 0.0;
  std::size_t i = 0, j = 0;
  while (i < pos.size() || j < neg.size()) {
    double t = -std::numeric_limits<double>::infinity();
    if (i < pos.size()) t = std::max(t, pos[i]);
    if (j < neg.size()) t = std::max(t, neg[j]);
    const double tp_prev = tp, fp_prev = fp;
    while (i < pos.size() && pos[i] == t) ++i, tp += 1.0;
    while (j < neg.size() && neg[j] == t) ++j, fp += 1.0;
    area2 += (fp - fp_prev) * (tp + tp_prev);
  }
  return area2 / (2.0 * tp * fp);
}

double pearson_cc(const SaliencyMap& predicted, const SaliencyMap& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw ShapeError("pearson_cc: map shapes differ");
  }
  const auto a = predicted.array() - predicted.mean();
  const auto b = truth.array() - truth.mean();
  const double sxx = (a * a).sum();
  const double syy = (b * b).sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateError("pearson_cc: constant map");
  const double r = (a * b).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double nss(const SaliencyMap& map, const FixationSet& fixations) {
  if (fixations.empty()) throw DegenerateError("nss: no fixations");
  const double mean = map.mean();
  const double var = (map.array() - mean).square().mean();
  if (!(var > 0.0)) throw DegenerateError("nss: constant map");
  const double sd = std::sqrt(var);
  double sum = 0.0;
  for (const auto& f : fixations) sum += (value_at(map, f) - mean) / sd;
  return sum / static_cast<double>(fixations.size());
}

double shuffled_auc(const SaliencyMap& map, const FixationSet& positives, const FixationSet& negatives, int n_splits,
                    std::uint64_t rng_seed) {
  if (n_splits < 1) throw ContractError("shuffled_auc: n_splits must be at least 1");
  require_in_bounds(positives, map, "positive");
  require_in_bounds(negatives, map, "negative");
  std::vector<double> pos;
  for (const auto& p : positives) pos.push_back(value_at(map, p));
  std::vector<double> pool;
  for (const auto& n : negatives) pool.push_back(value_at(map, n));

  Rng rng(rng_seed);
  const std::size_t k = pos.size();
  std::vector<double> neg(k);
  std::vector<std::size_t> idx(pool.size());
  double total = 0.0;
  for (int s = 0; s < n_splits; ++s) {
    if (pool.size() >= k) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t m = 0; m < k; ++m) {
        std::uniform_int_distribution<std::size_t> pick(m, idx.size() - 1);
        std::swap(idx[m], idx[pick(rng)]);
        neg[m] = pool[idx[m]];
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t m = 0; m < k; ++m) neg[m] = pool[pick(rng)];
    }
    total += auc_from_scores(pos, neg);
  }
  return total / static_cast<double>(n_splits);
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SALCLASS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

MetricReport evaluate_maps(std::span<const MapPair> pairs, const MetricConfig& config) {
  MetricReport report;
  report.per_image.resize(pairs.size());

  auto score = [&](std::size_t i) {
    const MapPair& p = pairs[i];
    ImageMetrics m{p.image_id, kNaN, kNaN, kNaN};
    const auto kept = ingest_fixations(p.fixations, p.predicted.rows(), p.predicted.cols()).kept;
    FixationSet pool;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      if (j == i) continue;
      for (const auto& f : pairs[j].fixations) {
        if (in_bounds(f, p.predicted.rows(), p.predicted.cols())) pool.push_back(f);
      }
    }
    if (!kept.empty() && !pool.empty()) {
      m.s_auc = shuffled_auc(p.predicted, kept, pool, config.n_splits,
                             stream_seed(config.seed, "metric-splits", static_cast<std::uint64_t>(i)));
    }
    try {
      m.nss = nss(p.predicted, kept);
    } catch (const DegenerateError&) {
    }
    try {
      m.cc = pearson_cc(p.predicted, p.truth);
    } catch (const DegenerateError&) {
    }
    report.per_image[i] = std::move(m);
  };

  const unsigned n_workers = std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max<std::size_t>(1, pairs.size())));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) score(i);
  } else {
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < n_workers; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < pairs.size(); i += n_workers) score(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  double s = 0.0, n = 0.0, c = 0.0;
  int ns = 0, nn = 0, nc = 0;
  for (const auto& m : report.per_image) {
    if (std::isnan(m.s_auc)) ++report.skipped_s_auc; else s += m.s_auc, ++ns;
    if (std::isnan(m.nss)) ++report.skipped_nss; else n += m.nss, ++nn;
    if (std::isnan(m.cc)) ++report.skipped_cc; else c += m.cc, ++nc;
  }
  report.s_auc = ns ? s / ns : kNaN;
  report.nss = nn ? n / nn : kNaN;
  report.cc = nc ? c / nc : kNaN;
  return report;
}

MetricReport human_baseline(const Dataset& dataset, const MetricConfig& config) {
  std::vector<MapPair> pairs;
  pairs.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    if (s.heatmap.size() == 0) throw ContractError("human_baseline: sample " + s.image_id + " has no heatmap");
    pairs.push_back({s.image_id, s.heatmap, s.heatmap, s.fixations});
  }
  return evaluate_maps(pairs, config);
}

void write_metric_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "image_id,s_auc,nss,cc\n";
  char line[256];
  for (const auto& m : report.per_image) {
    std::snprintf(line, sizeof line, ",%.17g,%.17g,%.17g\n", m.s_auc, m.nss, m.cc);
    out << m.image_id << line;
  }
}

std::string metric_summary_json(const MetricReport& report) {
  auto number = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j;
  j["n_images"] = report.per_image.size();
  j["s_auc"] = number(report.s_auc);
  j["nss"] = number(report.nss);
  j["cc"] = number(report.cc);
  j["skipped"] = {{"s_auc", report.skipped_s_auc}, {"nss", report.skipped_nss}, {"cc", report.skipped_cc}};
  return j.dump(2);
}

void write_metric_json(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << metric_summary_json(report) << '\n';
}

}  // namespace salclass
