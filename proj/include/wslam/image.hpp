#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "wslam/types.hpp"

#ifdef WSLAM_HAVE_PNG
#include <png.h>
#endif

namespace wslam {

// 8-bit grayscale raster stored as float for subpixel work. Pixel centers sit
// at integer coordinates; (x, y) = (column, row).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  bool empty() const { return width == 0 || height == 0; }

  static Image create(int w, int h, float fill = 0.f) {
    Image img;
    img.width = w;
    img.height = h;
    img.data.assign(static_cast<size_t>(w) * h, fill);
    return img;
  }

  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  bool contains(double x, double y, double margin = 0.0) const {
    return x >= margin && y >= margin && x <= width - 1 - margin && y <= height - 1 - margin;
  }

  // Bilinear interpolation with clamp-to-edge padding.
  float sample(double x, double y) const {
    const int fx = static_cast<int>(std::floor(x));
    const int fy = static_cast<int>(std::floor(y));
    const int x0 = std::clamp(fx, 0, width - 1);
    const int x1 = std::clamp(fx + 1, 0, width - 1);
    const int y0 = std::clamp(fy, 0, height - 1);
    const int y1 = std::clamp(fy + 1, 0, height - 1);
    const double ax = x - fx;
    const double ay = y - fy;
    const double v00 = at(x0, y0), v10 = at(x1, y0), v01 = at(x0, y1), v11 = at(x1, y1);
    return static_cast<float>((1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 +
                              (1 - ax) * ay * v01 + ax * ay * v11);
  }
};

// [1 2 1]/4 separable smoothing followed by factor-2 decimation.
inline Image downsample_half(const Image& src) {
  Image dst = Image::create(std::max(1, src.width / 2), std::max(1, src.height / 2));
  auto clamped = [&src](int x, int y) {
    x = std::clamp(x, 0, src.width - 1);
    y = std::clamp(y, 0, src.height - 1);
    return src.at(x, y);
  };
  for (int y = 0; y < dst.height; ++y)
    for (int x = 0; x < dst.width; ++x) {
      const int sx = 2 * x, sy = 2 * y;
      float acc = 0.f;
      static constexpr float k[3] = {0.25f, 0.5f, 0.25f};
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) acc += k[dx + 1] * k[dy + 1] * clamped(sx + dx, sy + dy);
      dst.at(x, y) = acc;
    }
  return dst;
}

inline std::vector<Image> build_pyramid(const Image& base, int levels) {
  std::vector<Image> pyr;
  pyr.push_back(base);
  for (int l = 1; l < levels; ++l) {
    if (pyr.back().width < 8 || pyr.back().height < 8) break;
    pyr.push_back(downsample_half(pyr.back()));
  }
  return pyr;
}

// --- PGM (P5, 8-bit) ---

inline Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError(path + ": not a binary PGM (P5) file");
  auto next_int = [&in, &path]() {
    int v;
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (!(in >> v)) throw FormatError(path + ": malformed PGM header");
      return v;
    }
  };
  const int w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw FormatError(path + ": unsupported PGM dimensions or maxval");
  in.get();  // single whitespace after header
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw FormatError(path + ": truncated PGM payload");
  Image img = Image::create(w, h);
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i];
  return img;
}

inline void save_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.data.size());
  for (size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::clamp(img.data[i], 0.f, 255.f));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

#ifdef WSLAM_HAVE_PNG
inline Image load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError(path + ": libpng failed to decode");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray(png, PNG_ERROR_ACTION_NONE, -1, -1);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<unsigned char> row(png_get_rowbytes(png, info));
  Image img = Image::create(w, h);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) img.at(x, y) = row[x];
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}
#endif

// Dispatch by extension; PGM always available, PNG when built with libpng.
inline Image load_image(const std::string& path) {
  auto ends_with = [&path](const char* suf) {
    const std::string s(suf);
    return path.size() >= s.size() &&
           std::equal(s.rbegin(), s.rend(), path.rbegin(),
                      [](char a, char b) { return std::tolower(a) == std::tolower(b); });
  };
  if (ends_with(".pgm")) return load_pgm(path);
#ifdef WSLAM_HAVE_PNG
  if (ends_with(".png")) return load_png(path);
#endif
  throw FormatError(path + ": unsupported image format");
}

}  // namespace wslam
