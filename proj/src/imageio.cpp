#include "cisp/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string_view>

#include "cisp/error.hpp"

namespace cisp {

ImageBuffer dequantize(const StoredImage& s) {
  ImageBuffer img(s.width, s.height);
  auto out = img.samples();
  for (std::size_t i = 0; i < s.rgb.size(); ++i) out[i] = s.rgb[i] / 255.0;
  return img;
}

StoredImage quantize(const ImageBuffer& img) {
  StoredImage s{img.width(), img.height(), std::vector<std::uint8_t>(img.sample_count())};
  const auto in = img.samples();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = std::clamp(in[i], 0.0, 1.0);
    // nearbyint honours the default round-to-nearest-even mode.
    s.rgb[i] = static_cast<std::uint8_t>(std::nearbyint(v * 255.0));
  }
  return s;
}

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngMagic, kPngMagic + 8, bytes.begin())) {
    return ImageFormat::kPng;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return ImageFormat::kPpm;
  throw Error(Errc::kUnsupportedFormat, "not a PNG or binary PPM (P6) image");
}

ImageFormat format_from_path(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return ImageFormat::kPng;
  if (ext == ".ppm") return ImageFormat::kPpm;
  throw Error(Errc::kUnsupportedFormat, "unknown image extension '" + ext + "' (use .png or .ppm)");
}

// ---------------------------------------------------------------------------
// PNG via libpng, memory I/O

namespace {

struct PngReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->data + cur->pos, len);
  cur->pos += len;
}

void png_write_mem(png_structp png, png_bytep in, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + len);
}

void png_flush_noop(png_structp) {}

void png_quiet_warning(png_structp, png_const_charp) {}

// libpng reports errors by longjmp; keep every C++ object in the caller and
// touch it only through pointers here.
enum class PngStatus { kOk, kCorrupt, kBadDepth };

PngStatus png_decode_core(png_structp png, png_infop info, PngReadCursor* cursor,
                          StoredImage* result, std::vector<png_bytep>* rows) {
  if (setjmp(png_jmpbuf(png))) return PngStatus::kCorrupt;
  png_set_read_fn(png, cursor, png_read_mem);
  png_read_info(png, info);

  const auto bit_depth = png_get_bit_depth(png, info);
  const auto color_type = png_get_color_type(png, info);
  if (bit_depth > 8) return PngStatus::kBadDepth;
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  result->width = png_get_image_width(png, info);
  result->height = png_get_image_height(png, info);
  result->rgb.resize(result->width * result->height * 3);
  rows->resize(result->height);
  for (std::size_t y = 0; y < result->height; ++y) {
    (*rows)[y] = result->rgb.data() + y * result->width * 3;
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  return PngStatus::kOk;
}

bool png_encode_core(png_structp png, png_infop info, const StoredImage* img,
                     std::vector<png_bytep>* rows, std::vector<std::uint8_t>* out) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, out, png_write_mem, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img->width),
               static_cast<png_uint_32>(img->height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_set_rows(png, info, rows->data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  return true;
}

}  // namespace

StoredImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(Errc::kMalformedHeader, "missing PNG signature");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           png_quiet_warning);
  if (png == nullptr) throw Error(Errc::kIo, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::kIo, "png_create_info_struct failed");
  }
  StoredImage result;
  std::vector<png_bytep> rows;
  PngReadCursor cursor{bytes.data(), bytes.size(), 0};
  const PngStatus status = png_decode_core(png, info, &cursor, &result, &rows);
  png_destroy_read_struct(&png, &info, nullptr);
  switch (status) {
    case PngStatus::kOk: return result;
    case PngStatus::kBadDepth:
      throw Error(Errc::kUnsupportedBitDepth, "only 8-bit PNG images are supported");
    case PngStatus::kCorrupt: break;
  }
  throw Error(Errc::kMalformedPayload, "corrupt PNG data");
}

std::vector<std::uint8_t> encode_png(const StoredImage& img) {
  if (img.rgb.size() != img.width * img.height * 3 || img.width == 0 || img.height == 0) {
    throw Error(Errc::kArgument, "encode_png: inconsistent image");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            png_quiet_warning);
  if (png == nullptr) throw Error(Errc::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::kIo, "png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(img.rgb.data() + y * img.width * 3);
  }
  const bool ok = png_encode_core(png, info, &img, &rows, &out);
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error(Errc::kIo, "PNG encoding failed");
  return out;
}

// ---------------------------------------------------------------------------
// Binary PPM (P6, maxval 255)

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
bool next_token(std::span<const std::uint8_t> b, std::size_t& pos, std::string& tok) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  tok.clear();
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok += static_cast<char>(b[pos++]);
  return !tok.empty();
}

std::size_t parse_dim(const std::string& tok, const char* what) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      tok.size() > 9) {
    throw Error(Errc::kMalformedHeader, std::string("PPM header: bad ") + what + " '" + tok + "'");
  }
  return std::stoul(tok);
}

}  // namespace

StoredImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  std::string tok;
  if (!next_token(bytes, pos, tok) || tok != "P6") {
    throw Error(Errc::kMalformedHeader, "PPM header: expected P6 magic");
  }
  if (!next_token(bytes, pos, tok)) throw Error(Errc::kMalformedHeader, "PPM header: missing width");
  const std::size_t w = parse_dim(tok, "width");
  if (!next_token(bytes, pos, tok)) throw Error(Errc::kMalformedHeader, "PPM header: missing height");
  const std::size_t h = parse_dim(tok, "height");
  if (!next_token(bytes, pos, tok)) throw Error(Errc::kMalformedHeader, "PPM header: missing maxval");
  const std::size_t maxval = parse_dim(tok, "maxval");
  if (w == 0 || h == 0) throw Error(Errc::kMalformedHeader, "PPM header: zero dimension");
  if (maxval != 255) {
    throw Error(Errc::kUnsupportedBitDepth,
                "PPM maxval " + std::to_string(maxval) + " unsupported (need 255)");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(Errc::kMalformedHeader, "PPM header: missing separator before payload");
  }
  ++pos;
  const std::size_t need = w * h * 3;
  if (bytes.size() - pos < need) {
    throw Error(Errc::kMalformedPayload, "PPM payload truncated: need " + std::to_string(need) +
                                             " bytes, have " + std::to_string(bytes.size() - pos));
  }
  StoredImage s{w, h, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.begin() + pos + need)};
  return s;
}

std::vector<std::uint8_t> encode_ppm(const StoredImage& img) {
  if (img.rgb.size() != img.width * img.height * 3) {
    throw Error(Errc::kArgument, "encode_ppm: inconsistent image");
  }
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

StoredImage decode_image(std::span<const std::uint8_t> bytes) {
  return sniff_format(bytes) == ImageFormat::kPng ? decode_png(bytes) : decode_ppm(bytes);
}

std::vector<std::uint8_t> encode_image(const StoredImage& img, ImageFormat fmt) {
  return fmt == ImageFormat::kPng ? encode_png(img) : encode_ppm(img);
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileNotFound, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "short write to " + path);
}

ImageBuffer load_image(const std::string& path) {
  return dequantize(decode_image(read_file(path)));
}

void save_image(const ImageBuffer& img, const std::string& path, ImageFormat fmt) {
  write_file(path, encode_image(quantize(img), fmt));
}

void save_image(const ImageBuffer& img, const std::string& path) {
  save_image(img, path, format_from_path(path));
}

}  // namespace cisp
