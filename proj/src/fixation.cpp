#include "salclass/fixation.hpp"

#include "salclass/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace salclass {

namespace {

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  while (begin != end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + field + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::pair<Index, Index> nearest_pixel(const Fixation& f, Index height, Index width) {
  const Index row = std::clamp<Index>(static_cast<Index>(std::lround(f.y)), 0, height - 1);
  const Index col = std::clamp<Index>(static_cast<Index>(std::lround(f.x)), 0, width - 1);
  return {row, col};
}

FixationIngest ingest_fixations(const FixationSet& raw, Index height, Index width) {
  FixationIngest out;
  for (const auto& f : raw) {
    if (in_bounds(f, height, width) && f.duration_ms >= 0.0) {
      out.kept.push_back(f);
    } else {
      ++out.rejected;
    }
  }
  return out;
}

double default_sigma_px(Index height, Index width) { return 0.035 * static_cast<double>(std::min(height, width)); }

SaliencyMap fixations_to_heatmap(const FixationSet& fixations, Index height, Index width, double sigma_px,
                                 FixationWeighting weighting) {
  if (height < 1 || width < 1) throw ShapeError("fixations_to_heatmap: empty map size");
  if (!(sigma_px > 0.0)) throw ContractError("fixations_to_heatmap: sigma must be positive");
  const auto points = ingest_fixations(fixations, height, width).kept;
  if (points.empty()) throw ContractError("fixations_to_heatmap: no in-bounds fixation");

  bool use_duration = weighting == FixationWeighting::duration;
  if (use_duration) {
    use_duration = std::any_of(points.begin(), points.end(), [](const Fixation& f) { return f.duration_ms > 0.0; });
  }

  SaliencyMap map = SaliencyMap::Zero(height, width);
  const double radius = 3.0 * sigma_px;
  const double inv_two_var = 1.0 / (2.0 * sigma_px * sigma_px);
  for (const auto& f : points) {
    const double w = use_duration ? f.duration_ms : 1.0;
    const Index r0 = std::max<Index>(0, static_cast<Index>(std::ceil(f.y - radius)));
    const Index r1 = std::min<Index>(height - 1, static_cast<Index>(std::floor(f.y + radius)));
    const Index c0 = std::max<Index>(0, static_cast<Index>(std::ceil(f.x - radius)));
    const Index c1 = std::min<Index>(width - 1, static_cast<Index>(std::floor(f.x + radius)));
    for (Index i = r0; i <= r1; ++i) {
      const double dy = static_cast<double>(i) - f.y;
      for (Index j = c0; j <= c1; ++j) {
        const double dx = static_cast<double>(j) - f.x;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= radius * radius) map(i, j) += w * std::exp(-d2 * inv_two_var);
      }
    }
  }
  return normalize_map(map);
}

FixationSet read_fixations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fixation file " + path.string());
  FixationSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("x,", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 2 && fields.size() != 3) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected x,y[,duration_ms]");
    }
    Fixation f;
    f.x = parse_double(fields[0], path, lineno);
    f.y = parse_double(fields[1], path, lineno);
    if (fields.size() == 3) f.duration_ms = parse_double(fields[2], path, lineno);
    out.push_back(f);
  }
  return out;
}

void write_fixations_csv(const std::filesystem::path& path, const FixationSet& fixations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "x,y,duration_ms\n";
  for (const auto& f : fixations) {
    out << format_double(f.x) << ',' << format_double(f.y) << ',' << format_double(f.duration_ms) << '\n';
  }
}

}  // namespace salclass
