#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "attnlab/core/error.hpp"
#include "attnlab/core/grid.hpp"
#include "attnlab/core/types.hpp"

namespace attnlab {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// CSV grids: one row per line, shortest round-trip decimal float64.

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParameterError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string grid_to_csv(const Grid<double>& g) {
  std::string out;
  out.reserve(g.size() * 8);
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      if (x) out += ',';
      out += format_double(g(x, y));
    }
    out += '\n';
  }
  return out;
}

inline Grid<double> grid_from_csv(std::string_view text) {
  std::vector<double> data;
  std::size_t width = 0, height = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (height == 0) width = cells.size();
    if (cells.size() != width) throw ParameterError("ragged CSV grid at row " + std::to_string(height));
    for (auto c : cells) data.push_back(parse_double(c));
    ++height;
  }
  if (height == 0) throw EmptyInput("empty CSV grid");
  return Grid<double>(width, height, std::move(data));
}

// ---------------------------------------------------------------------------
// Grayscale PNG encoding and decoding on top of libpng.

namespace png {

struct Header {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int interlace = 0;
};

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct Reader {
  std::string_view bytes;
  std::size_t at = 0;
};

inline void read_fn(png_structp p, png_bytep out, png_size_t n) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(p));
  if (r->at + n > r->bytes.size()) png_error(p, "truncated PNG");
  std::memcpy(out, r->bytes.data() + r->at, n);
  r->at += n;
}

inline void write_fn(png_structp p, png_bytep data, png_size_t n) {
  static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), n);
}

inline void flush_fn(png_structp) {}

inline void silent(png_structp, png_const_charp) {}

[[noreturn]] inline void fail(png_structp p, png_const_charp) { png_longjmp(p, 1); }

/// Decodes the header, and the pixels when `pixels` is non-null.
inline Header decode(std::string_view bytes, GrayImage* pixels) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw ParameterError("not a PNG file");
  }
  Reader reader{bytes, 0};
  Header h;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  png_structp p = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, fail, silent);
  if (!p) throw Error("libpng initialisation failed");
  png_infop info = png_create_info_struct(p);
  if (!info || setjmp(png_jmpbuf(p))) {
    png_destroy_read_struct(&p, info ? &info : nullptr, nullptr);
    throw ParameterError("corrupt PNG data");
  }
  png_set_read_fn(p, &reader, read_fn);
  png_read_info(p, info);
  h.width = png_get_image_width(p, info);
  h.height = png_get_image_height(p, info);
  h.bit_depth = png_get_bit_depth(p, info);
  h.color_type = png_get_color_type(p, info);
  h.interlace = png_get_interlace_type(p, info);
  if (pixels) {
    if (h.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(p);
    if (h.color_type == PNG_COLOR_TYPE_GRAY && h.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(p);
    if (h.color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(p);
    if (h.color_type & PNG_COLOR_MASK_COLOR || h.color_type == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(p, 1, -1, -1);
    }
    png_set_interlace_handling(p);
    png_read_update_info(p, info);
    const int depth = png_get_bit_depth(p, info);
    const std::size_t stride = png_get_rowbytes(p, info);
    buffer.resize(stride * h.height);
    rows.resize(h.height);
    for (std::size_t y = 0; y < h.height; ++y) rows[y] = buffer.data() + y * stride;
    png_read_image(p, rows.data());
    png_read_end(p, nullptr);
    pixels->width = h.width;
    pixels->height = h.height;
    pixels->bit_depth = depth;
    pixels->samples.resize(h.width * h.height);
    for (std::size_t y = 0; y < h.height; ++y) {
      const std::uint8_t* row = rows[y];
      for (std::size_t x = 0; x < h.width; ++x) {
        pixels->samples[y * h.width + x] =
            depth == 16 ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]) : row[x];
      }
    }
  }
  png_destroy_read_struct(&p, &info, nullptr);
  return h;
}

}  // namespace detail

/// samples are row-major; bit_depth 8 or 16.
inline std::string encode_gray(std::size_t width, std::size_t height, const std::vector<std::uint16_t>& samples,
                               int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
  if (samples.size() != width * height) throw ParameterError("PNG sample count mismatch");
  const std::size_t bps = static_cast<std::size_t>(bit_depth / 8);
  std::vector<std::uint8_t> buffer(width * height * bps);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bps == 2) {
      buffer[2 * i] = static_cast<std::uint8_t>(samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(samples[i] & 0xff);
    }
  }
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * width * bps;
  std::string out;
  png_structp p = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::fail, detail::silent);
  if (!p) throw Error("libpng initialisation failed");
  png_infop info = png_create_info_struct(p);
  if (!info || setjmp(png_jmpbuf(p))) {
    png_destroy_write_struct(&p, info ? &info : nullptr);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(p, &out, detail::write_fn, detail::flush_fn);
  png_set_IHDR(p, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(p, 9);
  png_write_info(p, info);
  png_write_image(p, rows.data());
  png_write_end(p, nullptr);
  png_destroy_write_struct(&p, &info);
  return out;
}

/// Reads the header of any PNG file.
inline Header read_header(std::string_view bytes) { return detail::decode(bytes, nullptr); }

/// Decodes any PNG to grayscale samples (color is converted, alpha dropped).
inline GrayImage decode_gray(std::string_view bytes) {
  GrayImage img;
  detail::decode(bytes, &img);
  return img;
}

}  // namespace png

/// 16-bit grayscale PNG with values scaled so the maximum maps to 65535.
inline std::string heatmap_to_png(const Grid<double>& g) {
  double mx = g.empty() ? 0.0 : *std::max_element(g.begin(), g.end());
  double mn = g.empty() ? 0.0 : *std::min_element(g.begin(), g.end());
  std::vector<std::uint16_t> samples(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = g[i];
    if (mn < 0.0) v -= mn;  // z-scored maps are shifted to non-negative first
    double top = mn < 0.0 ? mx - mn : mx;
    double s = top > 0.0 ? v / top : 0.0;
    samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(s, 0.0, 1.0) * 65535.0));
  }
  return png::encode_gray(g.width(), g.height(), samples, 16);
}

/// Grayscale PNG back to [0, 1] values.
inline Grid<double> heatmap_from_png(std::string_view bytes) {
  auto img = png::decode_gray(bytes);
  double top = img.bit_depth == 16 ? 65535.0 : 255.0;
  Grid<double> g(img.width, img.height);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = img.samples[i] / top;
  return g;
}

/// Loads a heatmap grid from .csv or .png by extension.
inline Grid<double> load_grid(const fs::path& path) {
  std::string bytes = read_file(path);
  if (path.extension() == ".png") return heatmap_from_png(bytes);
  return grid_from_csv(bytes);
}

/// Writes `<dir>/<stimulus_id>.<provenance>.{png,csv}`; returns the csv path.
inline fs::path save_heatmap(const AttentionHeatmap& map, const fs::path& dir) {
  std::string stem = map.stimulus_id + "." + std::string(to_string(map.provenance));
  write_file(dir / (stem + ".png"), heatmap_to_png(map.values));
  fs::path csv = dir / (stem + ".csv");
  write_file(csv, grid_to_csv(map.values));
  return csv;
}

// ---------------------------------------------------------------------------
// JSON for the stimulus manifest.

inline void to_json(json& j, const Point& p) { j = json{{"x", p.x}, {"y", p.y}}; }
inline void from_json(const json& j, Point& p) {
  if (j.is_array()) {
    p = {j.at(0).get<double>(), j.at(1).get<double>()};
  } else {
    p = {j.at("x").get<double>(), j.at("y").get<double>()};
  }
}
inline void to_json(json& j, const Rect& r) { j = json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }
inline void from_json(const json& j, Rect& r) {
  r = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

inline void to_json(json& j, const ElementRegion& e) {
  j = json{{"id", e.id}, {"label", e.label}};
  if (const auto* r = std::get_if<Rect>(&e.shape)) {
    j["rect"] = *r;
  } else {
    j["polygon"] = std::get<Polygon>(e.shape);
  }
}
inline void from_json(const json& j, ElementRegion& e) {
  e.id = j.at("id").get<std::string>();
  e.label = j.value("label", std::string{});
  if (j.contains("rect")) {
    e.shape = j.at("rect").get<Rect>();
  } else if (j.contains("polygon")) {
    e.shape = j.at("polygon").get<Polygon>();
  } else {
    throw ParameterError("element '" + e.id + "' needs a rect or polygon");
  }
}

inline void to_json(json& j, const Fixation& f) {
  j = json{{"participant_id", f.participant_id}, {"x", f.x}, {"y", f.y}};
  if (f.t_ms) j["t_ms"] = *f.t_ms;
}
inline void from_json(const json& j, Fixation& f) {
  f.participant_id = j.at("participant_id").get<std::string>();
  f.x = j.at("x").get<double>();
  f.y = j.at("y").get<double>();
  if (j.contains("t_ms") && !j.at("t_ms").is_null()) f.t_ms = j.at("t_ms").get<double>();
}

inline void to_json(json& j, const Stimulus& s) {
  j = json{{"id", s.id},
           {"width_px", s.width_px},
           {"height_px", s.height_px},
           {"kind", std::string(to_string(s.kind))},
           {"image_path", s.image_path}};
  if (!s.elements.empty()) j["elements"] = s.elements;
  if (!s.fixations.empty()) j["fixations"] = s.fixations;
  if (s.cue) j["cue"] = *s.cue;
}
inline void from_json(const json& j, Stimulus& s) {
  s.id = j.at("id").get<std::string>();
  s.width_px = j.at("width_px").get<std::size_t>();
  s.height_px = j.at("height_px").get<std::size_t>();
  s.kind = parse_stimulus_kind(j.value("kind", std::string("natural")));
  s.image_path = j.value("image_path", std::string{});
  s.elements = j.value("elements", std::vector<ElementRegion>{});
  s.fixations = j.value("fixations", FixationSet{});
  if (j.contains("cue") && !j.at("cue").is_null()) s.cue = j.at("cue").get<Point>();
}

inline std::vector<Stimulus> load_manifest(const fs::path& path) {
  auto stimuli = json::parse(read_file(path)).get<std::vector<Stimulus>>();
  for (const auto& s : stimuli) check_stimulus(s);
  return stimuli;
}

inline void save_manifest(const std::vector<Stimulus>& stimuli, const fs::path& path) {
  write_file(path, json(stimuli).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Fixation CSV: header `participant_id,x,y[,t_ms]`.

inline FixationSet fixations_from_csv(std::string_view text) {
  FixationSet out;
  bool header = true;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("participant_id", 0) == 0) continue;
    }
    auto cells = split(line, ',');
    if (cells.size() < 3) throw ParameterError("fixation row needs participant_id,x,y");
    Fixation f{std::string(cells[0]), parse_double(cells[1]), parse_double(cells[2]), std::nullopt};
    if (cells.size() > 3 && !cells[3].empty()) f.t_ms = parse_double(cells[3]);
    out.push_back(std::move(f));
  }
  return out;
}

inline std::string fixations_to_csv(const FixationSet& set) {
  std::string out = "participant_id,x,y,t_ms\n";
  for (const auto& f : set) {
    out += f.participant_id + "," + format_double(f.x) + "," + format_double(f.y) + ",";
    if (f.t_ms) out += format_double(*f.t_ms);
    out += '\n';
  }
  return out;
}

}  // namespace attnlab
