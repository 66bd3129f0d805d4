// Copyright 2026 The ctxreject Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctxreject/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "ctxreject/errors.hpp"

namespace ctxreject {

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1 || channels < 1) throw DataError("raster dimensions must be positive");
  data_.assign(static_cast<size_t>(width) * height * channels, fill);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

/// Decoded 8/16-bit raster normalized to [0, 1].
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;
  std::vector<int> raw;  // integer sample values
};

Decoded decode_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open image '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("libpng initialization failed");
  }
  Decoded out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const size_t count = static_cast<size_t>(out.width) * out.height * out.channels;
  out.raw.resize(count);
  out.data.resize(count);
  const double maxval = out_depth == 16 ? 65535.0 : 255.0;
  for (size_t i = 0; i < count; ++i) {
    int v = 0;
    if (out_depth == 16) {
      v = buffer[2 * i] | (buffer[2 * i + 1] << 8);
    } else {
      v = buffer[i];
    }
    out.raw[i] = v;
    out.data[i] = v / maxval;
  }
  return out;
}

int read_pnm_int(std::istream& in) {
  int value = 0;
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  if (!(in >> value)) throw DataError("malformed PNM header");
  return value;
}

Decoded decode_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path + "'");
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  Decoded out;
  if (magic == "P6")
    out.channels = 3;
  else if (magic == "P5")
    out.channels = 1;
  else
    throw DataError("unsupported image format in '" + path + "' (expected PNG, P5 or P6)");
  out.width = read_pnm_int(in);
  out.height = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  in.get();
  if (out.width < 1 || out.height < 1 || maxval < 1 || maxval > 65535)
    throw DataError("bad PNM header in '" + path + "'");
  const size_t count = static_cast<size_t>(out.width) * out.height * out.channels;
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(count * bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(in.gcount()) != buf.size()) throw DataError("truncated PNM '" + path + "'");
  out.raw.resize(count);
  out.data.resize(count);
  for (size_t i = 0; i < count; ++i) {
    const int v = bytes == 2 ? (buf[2 * i] << 8) | buf[2 * i + 1] : buf[i];
    out.raw[i] = v;
    out.data[i] = static_cast<double>(v) / maxval;
  }
  return out;
}

Decoded decode_any(const std::string& path) {
  return has_png_signature(path) ? decode_png(path) : decode_pnm(path);
}

}  // namespace

Image read_image(const std::string& path) {
  const Decoded d = decode_any(path);
  Image img(d.width, d.height);
  for (int p = 0; p < img.area(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const int src = d.channels >= 3 ? c : 0;
      img.at(p, c) = d.data[static_cast<size_t>(p) * d.channels + src];
    }
  }
  return img;
}

LabelMap read_label_map(const std::string& path) {
  const Decoded d = decode_any(path);
  LabelMap map{d.width, d.height, std::vector<int>(static_cast<size_t>(d.width) * d.height)};
  for (size_t p = 0; p < map.labels.size(); ++p) map.labels[p] = d.raw[p * d.channels];
  return map;
}

void write_png(const std::string& path, const Rgb8Image& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng initialization failed");
  }
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encoding failed for '" + path + "'");
  }
  png_init_io(png, fp.get());
  // Pinned encoder settings keep the output bytes reproducible.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<size_t>(y) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Rgb8Image to_rgb8(const Image& img) {
  Rgb8Image out{img.width(), img.height(), {}};
  out.data.resize(static_cast<size_t>(img.area()) * 3);
  for (size_t i = 0; i < out.data.size(); ++i) {
    const double v = std::clamp(img.data()[i], 0.0, 1.0);
    out.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  const Rgb8Image rgb = to_rgb8(img);
  out << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data.data()),
            static_cast<std::streamsize>(rgb.data.size()));
}

void write_label_map_png(const std::string& path, const LabelMap& map) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng initialization failed");
  }
  std::vector<png_byte> buf(map.labels.size());
  for (size_t i = 0; i < buf.size(); ++i) {
    if (map.labels[i] < 0 || map.labels[i] > 255) {
      png_destroy_write_struct(&png, &info);
      throw DataError("label map values must fit in 8 bits");
    }
    buf[i] = static_cast<png_byte>(map.labels[i]);
  }
  std::vector<png_bytep> rows(map.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encoding failed for '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, map.width, map.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < map.height; ++y) rows[y] = buf.data() + static_cast<size_t>(y) * map.width;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace ctxreject
