#include "nic/image.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "byte_io.h"
#include "nic/errors.h"

namespace nic {
namespace {

class PpmHeaderParser {
 public:
  explicit PpmHeaderParser(const std::vector<std::uint8_t>& b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000) fail(std::string(what) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) fail(std::string("expected ") + what, start);
    return static_cast<int>(v);
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw FormatError("ppm: " + msg + " at byte offset " + std::to_string(at));
  }

  std::size_t pos_ = 0;
  const std::vector<std::uint8_t>& b_;
};

}  // namespace

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  PpmHeaderParser p(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    p.fail("missing P6 magic", 0);
  }
  p.pos_ = 2;
  const int w = p.number("width");
  const int h = p.number("height");
  const std::size_t maxval_at = p.pos_;
  const int maxval = p.number("maxval");
  if (w <= 0 || h <= 0) p.fail("zero image dimension", maxval_at);
  if (maxval <= 0 || maxval > 255) p.fail("unsupported maxval " + std::to_string(maxval), maxval_at);
  if (p.pos_ >= bytes.size() || !std::isspace(bytes[p.pos_])) {
    p.fail("expected whitespace after maxval", p.pos_);
  }
  ++p.pos_;
  const std::size_t need = std::size_t(w) * h * 3;
  const std::size_t have = bytes.size() - p.pos_;
  if (have < need) {
    throw FormatError("ppm: truncated pixel data: expected " + std::to_string(need) +
                      " bytes, got " + std::to_string(have) + " (data starts at byte offset " +
                      std::to_string(p.pos_) + ")");
  }
  Image img(w, h);
  std::memcpy(img.rgb.data(), bytes.data() + p.pos_, need);
  if (maxval != 255) {
    for (auto& v : img.rgb) {
      v = static_cast<std::uint8_t>(std::min(255, (v * 255 + maxval / 2) / maxval));
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  std::string header = "P6\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("png: " + msg);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.rgb.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.rgb.data(), 0,
                                 nullptr)) {
    throw FormatError(std::string("png: ") + img.message);
  }
  out.resize(size);
  return out;
}

Image read_image(const std::string& path) {
  auto bytes = detail::read_file(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  try {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
      return decode_png(bytes);
    }
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_image(const std::string& path, const Image& image) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  detail::write_file(path, ext == ".png" ? encode_png(image) : encode_ppm(image));
}

bool is_image_file(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".ppm";
}

std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw FormatError("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path().string())) {
      out.push_back(e.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename T>
Tensor<T> image_to_tensor(const Image& image) {
  Tensor<T> t(Shape{1, 3, image.height, image.width});
  auto d = t.mutable_data();
  const std::size_t plane = image.pixel_count();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      d[c * plane + i] = static_cast<T>(image.rgb[i * 3 + c]) / T(255);
    }
  }
  return t;
}

template <typename T>
Image tensor_to_image(const Tensor<T>& t) {
  const int r = t.rank();
  if (!((r == 4 && t.dim(0) == 1 && t.dim(1) == 3) || (r == 3 && t.dim(0) == 3))) {
    throw ShapeError("tensor_to_image: expected 1 x 3 x H x W, got " + shape_str(t.shape()));
  }
  const int h = t.dim(r - 2), w = t.dim(r - 1);
  Image img(w, h);
  const std::size_t plane = img.pixel_count();
  auto d = t.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::round(static_cast<double>(d[c * plane + i]) * 255.0);
      img.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& t, int out_h, int out_w) {
  const int r = t.rank();
  if (r < 2) throw ShapeError("pad_reflect: rank < 2");
  const int h = t.dim(r - 2), w = t.dim(r - 1);
  if (out_h < h || out_w < w || h == 0 || w == 0) {
    throw ShapeError("pad_reflect: cannot pad " + shape_str(t.shape()) + " to " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  Shape s = t.shape();
  s[r - 2] = out_h;
  s[r - 1] = out_w;
  Tensor<T> out(s);
  const std::size_t planes = t.numel() / (std::size_t(h) * w);
  auto src = t.data();
  auto dst = out.mutable_data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (int y = 0; y < out_h; ++y) {
      const int sy = reflect_index(y, h);
      for (int x = 0; x < out_w; ++x) {
        dst[(p * out_h + y) * out_w + x] = src[(p * h + sy) * w + reflect_index(x, w)];
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& t, int out_h, int out_w) {
  const int r = t.rank();
  const int h = t.dim(r - 2), w = t.dim(r - 1);
  if (out_h > h || out_w > w) throw ShapeError("crop: target larger than input");
  Shape s = t.shape();
  s[r - 2] = out_h;
  s[r - 1] = out_w;
  Tensor<T> out(s);
  const std::size_t planes = t.numel() / (std::size_t(h) * w);
  auto src = t.data();
  auto dst = out.mutable_data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        dst[(p * out_h + y) * out_w + x] = src[(p * h + y) * w + x];
      }
    }
  }
  return out;
}

#define NIC_INSTANTIATE(T)                                             \
  template Tensor<T> image_to_tensor<T>(const Image&);                 \
  template Image tensor_to_image<T>(const Tensor<T>&);                 \
  template Tensor<T> pad_reflect<T>(const Tensor<T>&, int, int);       \
  template Tensor<T> crop<T>(const Tensor<T>&, int, int);

NIC_INSTANTIATE(float)
NIC_INSTANTIATE(double)
#undef NIC_INSTANTIATE

}  // namespace nic
