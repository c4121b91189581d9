#include "metalogic/image.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "metalogic/errors.hpp"
#include "metalogic/rng.hpp"

namespace metalogic {

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Rgb RgbImage::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                  static_cast<std::size_t>(x)) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                  static_cast<std::size_t>(x)) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

void RgbImage::fill_rect(double x1, double y1, double x2, double y2, Rgb c) {
  const int xa = std::clamp(static_cast<int>(std::floor(x1)), 0, width_);
  const int xb = std::clamp(static_cast<int>(std::ceil(x2)), 0, width_);
  const int ya = std::clamp(static_cast<int>(std::floor(y1)), 0, height_);
  const int yb = std::clamp(static_cast<int>(std::ceil(y2)), 0, height_);
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) set(x, y, c);
  }
}

void RgbImage::stroke_rect(double x1, double y1, double x2, double y2, Rgb c,
                           int thickness) {
  const double t = thickness;
  fill_rect(x1, y1, x2, y1 + t, c);
  fill_rect(x1, y2 - t, x2, y2, c);
  fill_rect(x1, y1, x1 + t, y2, c);
  fill_rect(x2 - t, y1, x2, y2, c);
}

void RgbImage::cross(double cx, double cy, int half, Rgb c) {
  const int x = static_cast<int>(std::lround(cx));
  const int y = static_cast<int>(std::lround(cy));
  for (int d = -half; d <= half; ++d) {
    set(x + d, y, c);
    set(x, y + d, c);
  }
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

struct WriteState {
  std::string* out;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<WriteState*>(png_get_io_ptr(png));
  st->out->append(reinterpret_cast<const char*>(data), len);
}

void png_flush_cb(png_structp) {}

struct ReadState {
  std::string_view in;
  std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->in.size()) png_error(png, "truncated PNG");
  std::memcpy(data, st->in.data() + st->pos, len);
  st->pos += len;
}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

// Decodes into `image` (when non-null) and collects tEXt chunks.
void read_png(std::string_view bytes, RgbImage* image,
              std::map<std::string, std::string>* text) {
  if (!looks_like_png(bytes)) throw Error(Errc::undecodable_image, "not a PNG");
  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_cb, png_warning_cb);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::undecodable_image, "libpng init failed");
  }
  ReadState st{bytes};
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::undecodable_image, "PNG decode failed: " + err);
  }
  png_set_read_fn(png, &st, png_read_cb);
  png_read_info(png, info);
  const auto w = png_get_image_width(png, info);
  const auto h = png_get_image_height(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, info);

  if (text) {
    png_textp entries = nullptr;
    int n = 0;
    png_get_text(png, info, &entries, &n);
    for (int i = 0; i < n; ++i) {
      (*text)[entries[i].key] = std::string(entries[i].text, entries[i].text_length);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (image) {
    RgbImage out(static_cast<int>(w), static_cast<int>(h));
    for (png_uint_32 y = 0; y < h; ++y) {
      for (png_uint_32 x = 0; x < w; ++x) {
        const auto* p = rows[y] + x * 3;
        out.set(static_cast<int>(x), static_cast<int>(y), {p[0], p[1], p[2]});
      }
    }
    *image = std::move(out);
  }
}

}  // namespace

bool looks_like_png(std::string_view bytes) noexcept {
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

std::string encode_png(const RgbImage& image, const std::map<std::string, std::string>& text) {
  std::string out;
  std::string err;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_cb, png_warning_cb);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io, "libpng init failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 3);
  std::vector<::png_text> chunks;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io, "PNG encode failed: " + err);
  }
  WriteState st{&out};
  png_set_write_fn(png, &st, png_write_cb, png_flush_cb);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  for (const auto& [k, v] : text) {
    ::png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = const_cast<char*>(k.c_str());
    t.text = const_cast<char*>(v.c_str());
    t.text_length = v.size();
    chunks.push_back(t);
  }
  if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb c = image.at(x, y);
      row[static_cast<std::size_t>(x) * 3] = c.r;
      row[static_cast<std::size_t>(x) * 3 + 1] = c.g;
      row[static_cast<std::size_t>(x) * 3 + 2] = c.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbImage decode_png(std::string_view bytes) {
  RgbImage img;
  read_png(bytes, &img, nullptr);
  return img;
}

std::optional<std::string> png_text(std::string_view bytes, std::string_view key) {
  std::map<std::string, std::string> text;
  read_png(bytes, nullptr, &text);
  auto it = text.find(std::string(key));
  if (it == text.end()) return std::nullopt;
  return it->second;
}

Rgb label_color(std::string_view label) {
  const std::uint64_t h = splitmix64(fnv1a64(label));
  // Keep colors mid-range so outlines stay visible on white.
  return {static_cast<std::uint8_t>(40 + (h & 0x7f)),
          static_cast<std::uint8_t>(40 + ((h >> 8) & 0x7f)),
          static_cast<std::uint8_t>(40 + ((h >> 16) & 0x7f))};
}

// ---------------------------------------------------------------------------
// Digests, base64, files
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean += c;
  }
  if (clean.size() % 4 != 0) throw Error(Errc::undecodable_image, "bad base64 length");
  std::string out(clean.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(Errc::undecodable_image, "bad base64 payload");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "write failed for " + p.string());
  }
  std::filesystem::rename(tmp, p, ec);
  if (ec) throw Error(Errc::io, "cannot rename into " + p.string() + ": " + ec.message());
}

}  // namespace metalogic
