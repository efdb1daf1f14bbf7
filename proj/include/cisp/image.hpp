#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cisp {

/// Row-major interleaved RGB image with double samples, nominal range [0,1].
class ImageBuffer {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height * kChannels, fill) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  std::size_t sample_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> samples() noexcept { return data_; }
  std::span<const double> samples() const noexcept { return data_; }

  double* pixel(std::size_t x, std::size_t y) noexcept {
    return data_.data() + (y * width_ + x) * kChannels;
  }
  const double* pixel(std::size_t x, std::size_t y) const noexcept {
    return data_.data() + (y * width_ + x) * kChannels;
  }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const ImageBuffer&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

}  // namespace cisp
