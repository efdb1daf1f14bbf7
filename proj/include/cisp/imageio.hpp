#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cisp/image.hpp"

namespace cisp {

enum class ImageFormat { kPng, kPpm };

/// 8-bit interleaved RGB as stored on disk.
struct StoredImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // width * height * 3
};

/// v/255 per sample.
ImageBuffer dequantize(const StoredImage& s);
/// Clamp to [0,1], scale by 255, round half to even.
StoredImage quantize(const ImageBuffer& img);

/// Format from magic bytes; throws kUnsupportedFormat otherwise.
ImageFormat sniff_format(std::span<const std::uint8_t> bytes);
/// Format from the file extension (.png, .ppm); kUnsupportedFormat otherwise.
ImageFormat format_from_path(const std::string& path);

StoredImage decode_png(std::span<const std::uint8_t> bytes);
StoredImage decode_ppm(std::span<const std::uint8_t> bytes);
StoredImage decode_image(std::span<const std::uint8_t> bytes);
/// Deterministic encoder: identical pixels always produce identical bytes.
std::vector<std::uint8_t> encode_png(const StoredImage& img);
std::vector<std::uint8_t> encode_ppm(const StoredImage& img);
std::vector<std::uint8_t> encode_image(const StoredImage& img, ImageFormat fmt);

ImageBuffer load_image(const std::string& path);
void save_image(const ImageBuffer& img, const std::string& path, ImageFormat fmt);
/// Format chosen from the extension.
void save_image(const ImageBuffer& img, const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace cisp
