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
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vqaforge {

// Interleaved 8-bit RGB, row-major. Alpha is composited over white at decode.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3
};

// Real-valued intensities in [0, 255]; no quantization before filtering.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // size = width * height

  double at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
};

enum class ImageFormat { png, jpeg, unknown };

ImageFormat sniff_image_format(std::string_view bytes);

// PNG or JPEG by magic bytes. Throws DecodeError on anything else.
RgbImage decode_image_bytes(const std::string& bytes, const std::string& origin = "");
RgbImage decode_image(const std::filesystem::path& path);

// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B, kept as doubles.
GrayImage to_grayscale(const RgbImage& rgb);

GrayImage decode_gray(const std::filesystem::path& path);

// 8-bit PNG writers, used for fixtures and the bundled demo corpus.
void write_png_rgb(const std::filesystem::path& path, const RgbImage& img);
void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

}  // namespace vqaforge
