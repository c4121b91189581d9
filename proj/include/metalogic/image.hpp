#pragma once

// Minimal raster support: placeholder rendering for mock images, overlays for
// the counterexample archive, PNG encode/decode via libpng, and content
// digests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metalogic {

struct Rgb {
  std::uint8_t r, g, b;
};

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {255, 255, 255});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);

  /// Coordinates are clipped to the image.
  void fill_rect(double x1, double y1, double x2, double y2, Rgb c);
  void stroke_rect(double x1, double y1, double x2, double y2, Rgb c, int thickness = 2);
  void cross(double cx, double cy, int half, Rgb c);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Deterministic: no timestamps, fixed compression settings. `text` entries
/// become tEXt chunks.
std::string encode_png(const RgbImage& image,
                       const std::map<std::string, std::string>& text = {});

/// Throws Error(undecodable_image).
RgbImage decode_png(std::string_view bytes);

/// Value of a tEXt chunk, if present. Throws Error(undecodable_image) when
/// the bytes are not a PNG.
std::optional<std::string> png_text(std::string_view bytes, std::string_view key);

bool looks_like_png(std::string_view bytes) noexcept;

/// Stable color per label.
Rgb label_color(std::string_view label);

std::string sha256_hex(std::string_view bytes);
std::string base64_decode(std::string_view text);
std::string base64_encode(std::string_view bytes);

/// Throws Error(io).
std::string read_file(const std::filesystem::path& p);
/// Writes via a temporary file and rename. Throws Error(io).
void write_file(const std::filesystem::path& p, std::string_view bytes);

}  // namespace metalogic
