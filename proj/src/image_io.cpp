#include "salclass/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace salclass {

namespace {

unsigned quantize(double v, unsigned maxval) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned>(std::lround(clamped * maxval));
}

unsigned max_for_depth(int bit_depth) {
  if (bit_depth == 8) return 255u;
  if (bit_depth == 16) return 65535u;
  throw IoError("unsupported bit depth " + std::to_string(bit_depth));
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_pgm(const std::filesystem::path& path, const Plane& values, int bit_depth) {
  const unsigned maxval = max_for_depth(bit_depth);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << values.cols() << ' ' << values.rows() << '\n' << maxval << '\n';
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(values.size()) * (bit_depth / 8));
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      const unsigned q = quantize(values(i, j), maxval);
      if (bit_depth == 16) bytes.push_back(static_cast<unsigned char>(q >> 8));
      bytes.push_back(static_cast<unsigned char>(q & 0xff));
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Plane read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  Index width = 0, height = 0;
  unsigned maxval = 0;
  skip_pnm_space(in);
  in >> width;
  skip_pnm_space(in);
  in >> height;
  skip_pnm_space(in);
  in >> maxval;
  in.get();
  if (!in || width <= 0 || height <= 0 || maxval == 0 || maxval > 65535) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(width * height) * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw IoError(path.string() + ": truncated PGM payload");
  Plane out(height, width);
  for (Index k = 0; k < width * height; ++k) {
    const std::size_t b = static_cast<std::size_t>(k) * bytes_per;
    const unsigned q = bytes_per == 2 ? (raw[b] << 8) | raw[b + 1] : raw[b];
    out.data()[k] = static_cast<double>(q) / maxval;
  }
  return out;
}

namespace {

void emit_png(png_structp png, png_infop info, std::FILE* file, const Image& image, int bit_depth) {
  const unsigned maxval = max_for_depth(bit_depth);
  const Index channels = image.n_channels();
  const Index h = image.height(), w = image.width();
  const std::size_t bytes_per = static_cast<std::size_t>(bit_depth / 8);
  std::vector<unsigned char> row(static_cast<std::size_t>(w * channels) * bytes_per);
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index y = 0; y < h; ++y) {
    std::size_t b = 0;
    for (Index x = 0; x < w; ++x) {
      for (Index c = 0; c < channels; ++c) {
        const unsigned q = quantize(image.channels[static_cast<std::size_t>(c)](y, x), maxval);
        if (bit_depth == 16) row[b++] = static_cast<unsigned char>(q >> 8);
        row[b++] = static_cast<unsigned char>(q & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  max_for_depth(bit_depth);
  const Index channels = image.n_channels();
  if (channels != 1 && channels != 3) throw IoError("write_png supports 1 or 3 channels");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng error while writing " + path.string());
  }
  emit_png(png, info, file.get(), image, bit_depth);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng error while reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto w = static_cast<Index>(png_get_image_width(png, info));
  const auto h = static_cast<Index>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const auto channels = static_cast<Index>(png_get_channels(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(h));
  rows.resize(static_cast<std::size_t>(h));
  for (Index y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const double maxval = depth == 16 ? 65535.0 : 255.0;
  const std::size_t bytes_per = depth == 16 ? 2 : 1;
  Image out(channels, h, w);
  for (Index y = 0; y < h; ++y) {
    const unsigned char* row = rows[static_cast<std::size_t>(y)];
    for (Index x = 0; x < w; ++x) {
      for (Index c = 0; c < channels; ++c) {
        const std::size_t b = static_cast<std::size_t>(x * channels + c) * bytes_per;
        const unsigned q = bytes_per == 2 ? (row[b] << 8) | row[b + 1] : row[b];
        out.channels[static_cast<std::size_t>(c)](y, x) = static_cast<double>(q) / maxval;
      }
    }
  }
  return out;
}

Image read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return read_png(path);
  if (ext == ".pgm" || ext == ".PGM") {
    Image img;
    img.channels.push_back(read_pgm(path));
    return img;
  }
  throw IoError("unsupported image format: " + path.string());
}

void export_map(const std::filesystem::path& path, const SaliencyMap& map) {
  const SaliencyMap normalized = normalize_map(map);
  const auto ext = path.extension().string();
  if (ext == ".pgm") {
    write_pgm(path, normalized, 8);
  } else if (ext == ".png") {
    Image img;
    img.channels.push_back(normalized);
    write_png(path, img, 16);
  } else {
    throw IoError("map export supports .pgm and .png, got " + path.string());
  }
}

}  // namespace salclass
