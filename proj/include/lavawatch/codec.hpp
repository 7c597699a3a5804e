#pragma once

// Frame decoding/encoding: binary PPM (P6), 8-bit PNG via libpng's simplified
// API, and the length-prefixed raw frame stream used for live ingestion.

#include <png.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"

namespace lavawatch {

enum class ImageFormat { Ppm, Png };

using Bytes = std::vector<std::uint8_t>;

inline std::optional<ImageFormat> sniff_format(std::span<const std::uint8_t> bytes) noexcept {
  static constexpr std::array<std::uint8_t, 8> png_sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= png_sig.size() && std::equal(png_sig.begin(), png_sig.end(), bytes.begin())) {
    return ImageFormat::Png;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return ImageFormat::Ppm;
  return std::nullopt;
}

namespace detail {

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw MalformedImage("PPM header: expected a decimal field");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1'000'000'000L) throw MalformedImage("PPM header: field out of range");
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw MalformedImage("PPM header: missing separator before raster");
    }
    return pos_ + 1;
  }

  std::size_t pos_ = 0;

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
};

}  // namespace detail

inline Frame decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw MalformedImage("PPM: bad magic");
  if (bytes[1] != '6') throw UnsupportedFormat("PPM: only binary P6 is supported");
  detail::PpmHeaderReader header(bytes);
  header.pos_ = 2;
  const long width = header.next_int();
  const long height = header.next_int();
  const long maxval = header.next_int();
  if (width < 1 || height < 1) throw MalformedImage("PPM: zero dimension");
  if (maxval < 1 || maxval > 255) throw UnsupportedFormat("PPM: only 8-bit maxval is supported");
  const std::size_t offset = header.raster_offset();
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - offset < count * 3) throw MalformedImage("PPM: truncated raster");

  std::vector<Rgb> pixels(count);
  const std::uint8_t* src = bytes.data() + offset;
  for (std::size_t i = 0; i < count; ++i, src += 3) pixels[i] = {src[0], src[1], src[2]};
  return Frame(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

inline Bytes encode_ppm(const Frame& frame) {
  const std::string header =
      "P6\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  Bytes out;
  out.reserve(header.size() + frame.size() * 3);
  out.insert(out.end(), header.begin(), header.end());
  for (const Rgb& p : frame.pixels()) {
    out.push_back(p.r);
    out.push_back(p.g);
    out.push_back(p.b);
  }
  return out;
}

/// 8-bit PNG of any colour type; alpha is dropped, not composited.
inline Frame decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = std::string("PNG: ") + image.message;
    png_image_free(&image);
    throw MalformedImage(msg);
  }
  if (image.width < 1 || image.height < 1 || image.width > 1u << 15 || image.height > 1u << 15) {
    png_image_free(&image);
    throw MalformedImage("PNG: unsupported dimensions");
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = std::string("PNG: ") + image.message;
    png_image_free(&image);
    throw MalformedImage(msg);
  }
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
  std::vector<Rgb> pixels(count);
  for (std::size_t i = 0; i < count; ++i) pixels[i] = {rgba[4 * i], rgba[4 * i + 1], rgba[4 * i + 2]};
  return Frame(static_cast<int>(image.width), static_cast<int>(image.height), std::move(pixels));
}

inline Bytes encode_png(const Frame& frame) {
  static_assert(sizeof(Rgb) == 3, "Rgb must be tightly packed for the PNG writer");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  image.flags = PNG_IMAGE_FLAG_FAST;

  const void* buffer = frame.pixels().data();
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer, 0, nullptr)) {
    throw IoFailure(std::string("PNG encode: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer, 0, nullptr)) {
    throw IoFailure(std::string("PNG encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline Frame decode_frame(std::span<const std::uint8_t> bytes, ImageFormat format) {
  switch (format) {
    case ImageFormat::Ppm: return decode_ppm(bytes);
    case ImageFormat::Png: return decode_png(bytes);
  }
  throw UnsupportedFormat("unknown image format");
}

/// Decode after sniffing the magic bytes.
inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const auto format = sniff_format(bytes);
  if (!format) throw UnsupportedFormat("unrecognised image signature");
  return decode_frame(bytes, *format);
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline Frame load_image(const std::filesystem::path& path) { return decode_frame(read_file(path)); }

// ---------------------------------------------------------------------------
// Frame stream: u32 width | u32 height | u64 timestamp_ms (all big-endian),
// followed by width*height*3 RGB bytes. Repeated until EOF.

inline constexpr std::size_t kStreamHeaderSize = 16;
inline constexpr std::uint64_t kMaxStreamPixels = 1ull << 28;

class FrameStreamReader {
 public:
  explicit FrameStreamReader(std::istream& in, std::uint64_t first_frame_id = 0)
      : in_(in), next_id_(first_frame_id) {}

  /// Next frame, or nullopt at a clean end of stream. A record cut short
  /// anywhere is MalformedImage.
  std::optional<Frame> next() {
    std::array<std::uint8_t, kStreamHeaderSize> header{};
    in_.read(reinterpret_cast<char*>(header.data()), header.size());
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got == 0) return std::nullopt;
    if (got != header.size()) throw MalformedImage("frame stream: truncated record header");

    const std::uint32_t width = load_be<std::uint32_t>(header.data());
    const std::uint32_t height = load_be<std::uint32_t>(header.data() + 4);
    const std::uint64_t timestamp = load_be<std::uint64_t>(header.data() + 8);
    if (width == 0 || height == 0) throw MalformedImage("frame stream: zero dimension");
    const std::uint64_t count = std::uint64_t{width} * height;
    if (count > kMaxStreamPixels || width > 1u << 30 || height > 1u << 30) {
      throw MalformedImage("frame stream: frame too large");
    }

    std::vector<Rgb> pixels(count);
    static_assert(sizeof(Rgb) == 3);
    in_.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(count * 3));
    if (static_cast<std::uint64_t>(in_.gcount()) != count * 3) {
      throw MalformedImage("frame stream: truncated pixel data");
    }
    Frame frame(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
    frame.frame_id = next_id_++;
    frame.timestamp_ms = timestamp;
    return frame;
  }

 private:
  template <typename T>
  static T load_be(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v = static_cast<T>((v << 8) | p[i]);
    return v;
  }

  std::istream& in_;
  std::uint64_t next_id_;
};

inline void write_stream_record(std::ostream& out, const Frame& frame) {
  std::array<std::uint8_t, kStreamHeaderSize> header{};
  auto store_be = [&header](std::size_t at, std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) header[at + i] = static_cast<std::uint8_t>(v >> (8 * (n - 1 - i)));
  };
  store_be(0, static_cast<std::uint32_t>(frame.width()), 4);
  store_be(4, static_cast<std::uint32_t>(frame.height()), 4);
  store_be(8, frame.timestamp_ms, 8);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  out.write(reinterpret_cast<const char*>(frame.pixels().data()),
            static_cast<std::streamsize>(frame.size() * 3));
}

}  // namespace lavawatch
