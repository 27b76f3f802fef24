#pragma once

#include <string>
#include <string_view>

namespace infiniretri::render {

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
  bool operator==(const Rgb&) const = default;
};

// t is clamped to [0, 1]; channels are rounded to the nearest integer.
Rgb lerp(Rgb from, Rgb to, double t);
std::string hex(Rgb c);
// Parses "#rrggbb".
Rgb parse_hex(std::string_view text);

// Red (0) to green (1), used for retrieval scores.
Rgb score_color(double score);
// White (0) to dark blue (1), used for attention intensity.
Rgb intensity_color(double t);

std::string xml_escape(std::string_view text);
std::string csv_field(std::string_view text);

// Fixed-precision decimal text, independent of stream locale/state.
std::string fixed(double value, int decimals);

// Writes `content` to `path`, throwing IoError on failure.
void write_file(const std::string& path, std::string_view content);

}  // namespace infiniretri::render
