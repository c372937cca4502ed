#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nic/tensor.h"

namespace nic {

// 8-bit RGB raster, row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // width * height * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) { return rgb[(std::size_t(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(std::size_t(y) * width + x) * 3 + c];
  }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
  bool operator==(const Image&) const = default;
};

// Binary PPM (P6, maxval <= 255).
Image decode_ppm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_ppm(const Image& image);

// PNG of any color type/bit depth, converted to 8-bit RGB (alpha dropped,
// gray expanded).
Image decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const Image& image);

// Dispatch on file signature when reading and on extension (.png, else PPM)
// when writing.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

bool is_image_file(const std::string& path);
// Sorted list of readable image files (.png, .ppm) in a directory.
std::vector<std::string> list_images(const std::string& dir);

// 1 x 3 x H x W in [0, 1].
template <typename T>
Tensor<T> image_to_tensor(const Image& image);
// Quantizes channel-planar values in [0, 1]: round(v * 255) clamped.
// Accepts 1 x 3 x H x W or 3 x H x W.
template <typename T>
Image tensor_to_image(const Tensor<T>& t);

// Mirror padding (edge pixel not repeated) on the bottom/right to the given
// size. Repeats the reflection when the pad exceeds the image extent.
template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& t, int out_h, int out_w);
// Top-left crop of the trailing two dimensions.
template <typename T>
Tensor<T> crop(const Tensor<T>& t, int h, int w);

// Reflected index into [0, n).
int reflect_index(int i, int n);

}  // namespace nic
