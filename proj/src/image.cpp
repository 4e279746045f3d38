/*
 * Copyright 2026 The vqa-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "vqaforge/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "vqaforge/errors.hpp"
#include "vqaforge/util.hpp"

namespace vqaforge {

namespace {

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->size) {
    png_error(png, "read past end of PNG buffer");
  }
  std::memcpy(out, st->data + st->pos, len);
  st->pos += len;
}

RgbImage decode_png(const std::string& bytes, const std::string& origin) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DecodeError("png init failed: " + origin);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DecodeError("png init failed: " + origin);
  }
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("undecodable PNG: " + origin);
  }
  PngReadState st{reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size(), 0};
  png_set_read_fn(png, &st, png_read_cb);
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_16(png);
  png_set_gray_to_rgb(png);
  // Always read an alpha channel so compositing below has one code path.
  png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);

  int width = int(png_get_image_width(png, info));
  int height = int(png_get_image_height(png, info));
  if (width < 1 || height < 1) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("degenerate PNG dimensions: " + origin);
  }
  raw.resize(std::size_t(width) * height * 4);
  row_ptrs.resize(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = raw.data() + std::size_t(y) * width * 4;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(std::size_t(width) * height * 3);
  for (std::size_t i = 0, n = std::size_t(width) * height; i < n; ++i) {
    double a = raw[i * 4 + 3] / 255.0;
    for (int c = 0; c < 3; ++c) {
      double v = a * raw[i * 4 + c] + (1.0 - a) * 255.0;  // composite over white
      img.pixels[i * 3 + c] = std::uint8_t(v + 0.5);
    }
  }
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jmp;
};

void jpeg_error_exit_cb(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  longjmp(mgr->jmp, 1);
}

RgbImage decode_jpeg(const std::string& bytes, const std::string& origin) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit_cb;
  if (setjmp(err.jmp)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("undecodable JPEG: " + origin);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  RgbImage img;
  img.width = int(cinfo.output_width);
  img.height = int(cinfo.output_height);
  if (img.width < 1 || img.height < 1) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("degenerate JPEG dimensions: " + origin);
  }
  img.pixels.resize(std::size_t(img.width) * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + std::size_t(cinfo.output_scanline) * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

ImageFormat sniff_image_format(std::string_view bytes) {
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return ImageFormat::png;
  if (bytes.size() >= 3 && std::uint8_t(bytes[0]) == 0xFF && std::uint8_t(bytes[1]) == 0xD8 &&
      std::uint8_t(bytes[2]) == 0xFF) {
    return ImageFormat::jpeg;
  }
  return ImageFormat::unknown;
}

RgbImage decode_image_bytes(const std::string& bytes, const std::string& origin) {
  switch (sniff_image_format(bytes)) {
    case ImageFormat::png:
      return decode_png(bytes, origin);
    case ImageFormat::jpeg:
      return decode_jpeg(bytes, origin);
    default:
      throw DecodeError("unsupported image format (expect PNG or JPEG): " + origin);
  }
}

RgbImage decode_image(const std::filesystem::path& path) {
  return decode_image_bytes(read_text_file(path), path.string());
}

GrayImage to_grayscale(const RgbImage& rgb) {
  if (rgb.width < 1 || rgb.height < 1) {
    throw DecodeError("grayscale conversion on degenerate image");
  }
  if (rgb.pixels.size() != std::size_t(rgb.width) * rgb.height * 3) {
    throw DecodeError("RGB buffer size does not match dimensions");
  }
  GrayImage g;
  g.width = rgb.width;
  g.height = rgb.height;
  g.pixels.resize(std::size_t(rgb.width) * rgb.height);
  for (std::size_t i = 0, n = g.pixels.size(); i < n; ++i) {
    g.pixels[i] = 0.299 * rgb.pixels[i * 3] + 0.587 * rgb.pixels[i * 3 + 1] +
                  0.114 * rgb.pixels[i * 3 + 2];
  }
  return g;
}

GrayImage decode_gray(const std::filesystem::path& path) {
  return to_grayscale(decode_image(path));
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height, int channels,
               const std::uint8_t* pixels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw StageError("cannot open for write: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw StageError("PNG write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels + std::size_t(y) * width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const RgbImage& img) {
  write_png(path, img.width, img.height, 3, img.pixels.data());
}

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
  write_png(path, width, height, 1, pixels.data());
}

}  // namespace vqaforge
