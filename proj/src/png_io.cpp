#include "leafseg/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>
#include <vector>

#include "leafseg/error.hpp"
#include "leafseg/palette.hpp"

namespace leafseg {

namespace {

struct MemoryReader {
  const std::vector<std::uint8_t>* data;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + length > reader->data->size()) {
    png_error(png, "truncated stream");
  }
  std::memcpy(out, reader->data->data() + reader->offset, length);
  reader->offset += length;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

void silent_warning(png_structp, png_const_charp) {}

struct DecodeResult {
  bool ok = false;
  char message[128] = {};
};

void record_error(png_structp png, png_const_charp msg) {
  auto* result = static_cast<DecodeResult*>(png_get_error_ptr(png));
  std::strncpy(result->message, msg, sizeof(result->message) - 1);
  png_longjmp(png, 1);
}

// All objects with non-trivial destructors are created by the caller, so the
// longjmp out of libpng never skips one.
void decode(const std::vector<std::uint8_t>& file, std::vector<std::uint8_t>& pixels,
            png_uint_32& width, png_uint_32& height, DecodeResult& result) {
  MemoryReader reader{&file, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &result, record_error, silent_warning);
  if (png == nullptr) return;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_scale_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width) * 3) {
    std::strncpy(result.message, "unexpected row layout", sizeof(result.message) - 1);
    png_destroy_read_struct(&png, &info, nullptr);
    return;
  }
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  result.ok = true;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorCode::IoError : ErrorCode::FileNotFound, path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

RgbImage load_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> file = read_file(path);
  if (file.size() < 8 || png_sig_cmp(file.data(), 0, 8) != 0) {
    throw Error(ErrorCode::MalformedPng, path.string() + ": not a PNG stream");
  }
  std::vector<std::uint8_t> pixels;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  DecodeResult result;
  decode(file, pixels, width, height, result);
  if (!result.ok) {
    throw Error(ErrorCode::MalformedPng, path.string() + ": " + result.message);
  }
  if (width == 0 || height == 0 || width > (1u << 16) || height > (1u << 16)) {
    throw Error(ErrorCode::UnsupportedPng, path.string() + ": unsupported dimensions");
  }
  RgbImage img(static_cast<int>(width), static_cast<int>(height));
  std::memcpy(img.pixels().data(), pixels.data(), pixels.size());
  return img;
}

namespace {

bool encode(const RgbImage& img, std::vector<std::uint8_t>& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto* base = img.bytes().data();
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(base + static_cast<std::size_t>(y) * img.width() * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

void save_png(const std::filesystem::path& path, const RgbImage& img) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot encode an empty image");
  std::vector<std::uint8_t> bytes;
  if (!encode(img, bytes)) throw Error(ErrorCode::IoError, path.string() + ": PNG encoding failed");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

LabelImage labels_from_colors(const RgbImage& img) {
  LabelImage labels = LabelImage::Zero(img.height(), img.width());
  std::unordered_map<std::uint32_t, std::int32_t> ids;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::uint32_t key = (std::uint32_t{img.at(x, y, 0)} << 16) | (std::uint32_t{img.at(x, y, 1)} << 8) |
                                img.at(x, y, 2);
      if (key == 0) continue;
      auto [it, inserted] = ids.try_emplace(key, static_cast<std::int32_t>(ids.size() + 1));
      labels(y, x) = it->second;
    }
  }
  return labels;
}

LabelImage load_label_png(const std::filesystem::path& path) { return labels_from_colors(load_png(path)); }

void save_label_png(const std::filesystem::path& path, const LabelImage& labels) {
  save_png(path, render_labels(labels));
}

}  // namespace leafseg
