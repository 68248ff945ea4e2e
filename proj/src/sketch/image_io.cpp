#include "p2s/sketch/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "p2s/errors.hpp"

namespace p2s::sketch {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return s.substr(start, pos - start);
}

int pgm_int(const std::string& s, std::size_t& pos, const fs::path& path) {
  const std::string tok = pgm_token(s, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used == tok.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("bad PGM header field '" + tok + "' in " + path.string());
}

RasterImage read_pgm(const std::string& s, const fs::path& path) {
  std::size_t pos = 0;
  const std::string magic = pgm_token(s, pos);
  const int w = pgm_int(s, pos, path), h = pgm_int(s, pos, path), maxval = pgm_int(s, pos, path);
  if (maxval > 65535) throw ParseError("PGM maxval above 65535 in " + path.string());
  RasterImage img = RasterImage::blank(h, w);
  const std::size_t n = img.data.size();
  if (magic == "P5") {
    ++pos;  // single whitespace byte before the raster
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (s.size() < pos + n * bpp) throw ParseError("truncated PGM raster in " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      const auto* b = reinterpret_cast<const unsigned char*>(s.data() + pos + i * bpp);
      const int v = bpp == 1 ? b[0] : (b[0] << 8 | b[1]);
      img.data[i] = std::min(1.0, static_cast<double>(v) / maxval);
    }
  } else if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = pgm_token(s, pos);
      if (tok.empty()) throw ParseError("truncated PGM raster in " + path.string());
      img.data[i] = std::min(1.0, std::stod(tok) / maxval);
    }
  } else {
    throw ParseError("unsupported image format in " + path.string());
  }
  return img;
}

RasterImage read_png(const std::string& bytes, const fs::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw ParseError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ParseError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  RasterImage img = RasterImage::blank(static_cast<int>(png.height), static_cast<int>(png.width), color ? 3 : 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = buf[i] / 255.0;
  return img;
}

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

RasterImage read_image(const fs::path& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return read_png(bytes, path);
  }
  return read_pgm(bytes, path);
}

void write_image(const fs::path& path, const RasterImage& img) {
  require_valid(img);
  if (path.extension() == ".png") {
    if (img.channels > 4) throw DataError("PNG supports at most 4 channels");
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    const png_uint_32 formats[] = {PNG_FORMAT_GRAY, PNG_FORMAT_GA, PNG_FORMAT_RGB, PNG_FORMAT_RGBA};
    png.format = formats[img.channels - 1];
    std::vector<unsigned char> buf(img.data.size());
    std::transform(img.data.begin(), img.data.end(), buf.begin(), to_byte);
    if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr)) {
      throw DataError("cannot write PNG " + path.string() + ": " + png.message);
    }
    return;
  }
  const RasterImage gray = to_grayscale(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P5\n" << gray.width << " " << gray.height << "\n255\n";
  std::string raster(gray.data.size(), '\0');
  std::transform(gray.data.begin(), gray.data.end(), raster.begin(), [](double v) { return static_cast<char>(to_byte(v)); });
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw DataError("cannot write image " + path.string());
}

}  // namespace p2s::sketch
