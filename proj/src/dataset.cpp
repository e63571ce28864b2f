#include "salclass/dataset.hpp"

#include "salclass/image_io.hpp"
#include "salclass/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace salclass {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ManifestError(path.string() + ":" + std::to_string(line) + ": malformed number '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ManifestError("unknown split '" + name + "'");
}

const std::vector<ManifestEntry>& Manifest::entries(Split split) const {
  switch (split) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

std::vector<ManifestEntry>& Manifest::entries(Split split) {
  return const_cast<std::vector<ManifestEntry>&>(std::as_const(*this).entries(split));
}

namespace {

template <typename Fail>
void check_fractions(const std::array<double, 3>& f, Fail fail) {
  if (f[0] < 0.0 || f[1] < 0.0 || f[2] < 0.0) fail("split fractions must be non-negative");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) fail("split fractions must sum to 1");
}

}  // namespace

void Manifest::validate() const {
  if (classes.size() < 2) throw ManifestError("manifest needs at least 2 classes");
  std::set<std::string> seen;
  for (Split s : {Split::train, Split::val, Split::test}) {
    for (const auto& e : entries(s)) {
      if (e.class_index < 0 || static_cast<std::size_t>(e.class_index) >= classes.size()) {
        throw ManifestError("sample " + e.image_id + " has class index " + std::to_string(e.class_index) +
                            " outside the class list");
      }
      if (!seen.insert(e.image_id).second) {
        throw ManifestError("image_id " + e.image_id + " appears more than once across splits");
      }
    }
  }
  if (fractions) {
    check_fractions(*fractions, [](const std::string& what) { throw ManifestError(what); });
    const double n = static_cast<double>(total());
    const double slack = static_cast<double>(classes.size());  // per-class rounding
    std::size_t k = 0;
    for (Split s : {Split::train, Split::val, Split::test}) {
      const double expected = (*fractions)[k++] * n;
      if (std::abs(static_cast<double>(entries(s).size()) - expected) > slack) {
        throw ManifestError(std::string("split ") + split_name(s) + " holds " +
                            std::to_string(entries(s).size()) + " samples, recorded fraction implies " +
                            format_double(expected));
      }
    }
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::vector<ManifestEntry>* current = nullptr;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ManifestError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f[0] == "@class") {
      if (f.size() != 3) fail("expected @class<TAB>index<TAB>name");
      const auto idx = parse_number<int>(f[1], path, lineno);
      if (idx != static_cast<int>(m.classes.size())) fail("class indices must be listed in order from 0");
      m.classes.push_back(f[2]);
    } else if (f[0] == "@fractions") {
      if (f.size() != 4) fail("expected @fractions<TAB>train<TAB>val<TAB>test");
      m.fractions = std::array<double, 3>{parse_number<double>(f[1], path, lineno),
                                          parse_number<double>(f[2], path, lineno),
                                          parse_number<double>(f[3], path, lineno)};
    } else if (f[0] == "@split") {
      if (f.size() != 2) fail("expected @split<TAB>name");
      try {
        current = &m.entries(parse_split(f[1]));
      } catch (const ManifestError&) {
        fail("unknown split '" + f[1] + "'");
      }
    } else if (!f[0].empty() && f[0][0] == '@') {
      fail("unknown directive " + f[0]);
    } else {
      if (f.size() != 4) fail("expected image_id<TAB>relative_path<TAB>class_index<TAB>fixation_file");
      if (!current) fail("sample line before any @split directive");
      if (f[0].empty() || f[1].empty()) fail("empty image_id or path");
      current->push_back({f[0], f[1], parse_number<int>(f[2], path, lineno), f[3]});
    }
  }
  m.validate();
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot open " + path.string() + " for writing");
  out << "# salclass manifest v1\n";
  for (std::size_t i = 0; i < manifest.classes.size(); ++i) out << "@class\t" << i << '\t' << manifest.classes[i] << '\n';
  if (manifest.fractions) {
    const auto& fr = *manifest.fractions;
    out << "@fractions\t" << format_double(fr[0]) << '\t' << format_double(fr[1]) << '\t' << format_double(fr[2])
        << '\n';
  }
  for (Split s : {Split::train, Split::val, Split::test}) {
    out << "@split\t" << split_name(s) << '\n';
    for (const auto& e : manifest.entries(s)) {
      out << e.image_id << '\t' << e.relative_path << '\t' << e.class_index << '\t' << e.fixation_file << '\n';
    }
  }
  if (!out) throw ManifestError("write failed for " + path.string());
}

Dataset load_split(const Manifest& manifest, Split split, const HeatmapOptions& options, LoadReport* report) {
  Dataset data;
  data.n_classes = static_cast<Index>(manifest.classes.size());
  LoadReport local;
  for (const auto& e : manifest.entries(split)) {
    Sample s;
    s.image_id = e.image_id;
    s.label = e.class_index;
    s.image = read_image(manifest.root / e.relative_path);
    if (s.image.n_channels() == 1) s.image.channels.resize(3, s.image.channels[0]);
    const Index h = s.image.height(), w = s.image.width();
    auto ingest = ingest_fixations(read_fixations_csv(manifest.root / e.fixation_file), h, w);
    local.rejected_fixations += ingest.rejected;
    if (ingest.kept.empty()) throw ManifestError("sample " + e.image_id + " has no in-bounds fixation");
    s.fixations = std::move(ingest.kept);
    const double sigma = options.sigma_px > 0.0 ? options.sigma_px : default_sigma_px(h, w);
    s.heatmap = fixations_to_heatmap(s.fixations, h, w, sigma, options.weighting);
    data.samples.push_back(std::move(s));
    ++local.samples;
  }
  if (report) *report = local;
  return data;
}

void SynthConfig::validate() const {
  if (n_classes < 2) throw ContractError("synth: need at least 2 classes");
  if (n_per_class < 1) throw ContractError("synth: need at least 1 sample per class");
  const Index p = patch_size > 0 ? patch_size : image_size / 4;
  if (image_size < 16 || 2 * p + 4 > image_size) throw ContractError("synth: image too small for two patches");
  if (fixations_per_image < 1) throw ContractError("synth: need at least one fixation per image");
  if (target_amplitude < 0.0 || distractor_amplitude < 0.0 || noise_std < 0.0) {
    throw ContractError("synth: amplitudes and noise must be non-negative");
  }
  check_fractions(fractions, [](const std::string& what) { throw ContractError("synth: " + what); });
}

namespace {

struct Box {
  Index top, left, size;
  double cy() const { return static_cast<double>(top) + 0.5 * static_cast<double>(size - 1); }
  double cx() const { return static_cast<double>(left) + 0.5 * static_cast<double>(size - 1); }
};

void paint_grating(Image& img, const Box& box, double angle, double amplitude, double period, double phase) {
  const double c = std::cos(angle), s = std::sin(angle);
  for (Index i = box.top; i < box.top + box.size; ++i) {
    for (Index j = box.left; j < box.left + box.size; ++j) {
      const double v = amplitude * std::sin(2.0 * std::numbers::pi * (static_cast<double>(j) * c + static_cast<double>(i) * s) / period + phase);
      for (auto& ch : img.channels) ch(i, j) += v;
    }
  }
}

}  // namespace

Sample synth_sample(const SynthConfig& config, int label, std::uint64_t index) {
  config.validate();
  Rng rng = make_rng(config.seed, "synth", index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index size = config.image_size;
  const Index p = config.patch_size > 0 ? config.patch_size : size / 4;
  const Index margin = size / 16;
  std::uniform_int_distribution<Index> place(margin, size - p - margin);

  Box target{place(rng), place(rng), p};
  Box distractor{0, 0, p};
  do {
    distractor.top = place(rng);
    distractor.left = place(rng);
  } while (std::abs(distractor.top - target.top) < p + 2 && std::abs(distractor.left - target.left) < p + 2);

  Image img(3, size, size);
  for (auto& ch : img.channels) {
    const double base = 0.4 + 0.2 * unit(rng);
    for (Index k = 0; k < ch.size(); ++k) ch.data()[k] = base + config.noise_std * normal(rng);
  }
  const double step = std::numbers::pi / static_cast<double>(config.n_classes);
  std::uniform_int_distribution<int> other(1, static_cast<int>(config.n_classes) - 1);
  const int distractor_class = (label + other(rng)) % static_cast<int>(config.n_classes);
  paint_grating(img, target, step * label, config.target_amplitude, config.grating_period,
                2.0 * std::numbers::pi * unit(rng));
  paint_grating(img, distractor, step * distractor_class, config.distractor_amplitude, config.grating_period,
                2.0 * std::numbers::pi * unit(rng));
  for (auto& ch : img.channels) ch = ch.cwiseMax(0.0).cwiseMin(1.0);

  const double scatter = config.fixation_scatter > 0.0 ? config.fixation_scatter : static_cast<double>(p) / 4.0;
  Sample s;
  s.label = label;
  s.image = std::move(img);
  for (int k = 0; k < config.fixations_per_image; ++k) {
    const Box& box = unit(rng) < config.distractor_fixation_prob ? distractor : target;
    Fixation f;
    do {
      f.x = box.cx() + scatter * normal(rng);
      f.y = box.cy() + scatter * normal(rng);
    } while (!in_bounds(f, size, size));
    f.duration_ms = std::round(150.0 + 250.0 * unit(rng));
    s.fixations.push_back(f);
  }
  s.heatmap = fixations_to_heatmap(s.fixations, size, size, default_sigma_px(size, size));
  return s;
}

Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "fixations");
  Manifest m;
  m.root = out_dir;
  m.fractions = config.fractions;
  for (Index c = 0; c < config.n_classes; ++c) m.classes.push_back("class_" + std::to_string(c));

  for (Index c = 0; c < config.n_classes; ++c) {
    std::vector<ManifestEntry> entries;
    for (Index k = 0; k < config.n_per_class; ++k) {
      const auto index = static_cast<std::uint64_t>(c * config.n_per_class + k);
      char id[32];
      std::snprintf(id, sizeof id, "img%05llu", static_cast<unsigned long long>(index));
      Sample s = synth_sample(config, static_cast<int>(c), index);
      const std::string image_rel = std::string("images/") + id + ".png";
      const std::string fix_rel = std::string("fixations/") + id + ".csv";
      write_png(out_dir / image_rel, s.image, 8);
      write_fixations_csv(out_dir / fix_rel, s.fixations);
      entries.push_back({id, image_rel, static_cast<int>(c), fix_rel});
    }
    Rng rng = make_rng(config.seed, "split", static_cast<std::uint64_t>(c));
    std::shuffle(entries.begin(), entries.end(), rng);
    const auto n = static_cast<double>(entries.size());
    const auto n_train = static_cast<std::size_t>(std::lround(config.fractions[0] * n));
    const auto n_val = static_cast<std::size_t>(std::lround(config.fractions[1] * n));
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& dst = i < n_train ? m.train : (i < n_train + n_val ? m.val : m.test);
      dst.push_back(entries[i]);
    }
  }
  for (Split s : {Split::train, Split::val, Split::test}) {
    auto& e = m.entries(s);
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  }
  save_manifest(m, out_dir / "manifest.tsv");
  return m;
}

}  // namespace salclass
