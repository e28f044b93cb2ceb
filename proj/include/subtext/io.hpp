#pragma once

// ICDAR-style text files.
//   ground truth: x1,y1,x2,y2,x3,y3,x4,y4,script,transcription
//                 (script may be omitted; "###" marks a don't-care region)
//   detections:   x1,y1,...,x4,y4,score   or   x_min,y_min,x_max,y_max,score
// A directory holds one <image-id>.txt per image ("gt_"/"res_" prefixes are
// stripped from the id); a single file is read as one image.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "subtext/evalsuite.hpp"
#include "subtext/geometry.hpp"

namespace subtext {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnnotationRecord {
  std::string image_id;
  Quad quad;
  std::optional<std::string> script;
  std::string transcription;
  bool ignore = false;
};

struct DetectionRecord {
  std::string image_id;
  Region shape;
  double score = 0.0;
};

struct LineError {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

template <class Record>
struct Ingested {
  std::map<std::string, std::vector<Record>> images;
  std::vector<LineError> errors;
};

inline constexpr std::string_view kDontCareTranscription = "###";

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_number(std::string_view field, std::size_t column) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw std::invalid_argument("field " + std::to_string(column + 1) + ": '" +
                                std::string(field) + "' is not a number");
  }
  return v;
}

inline Quad parse_quad(const std::vector<std::string_view>& f) {
  std::array<Point, 4> pts;
  for (std::size_t i = 0; i < 4; ++i) {
    pts[i] = {parse_number(f[2 * i], 2 * i), parse_number(f[2 * i + 1], 2 * i + 1)};
  }
  return Quad(pts);
}

inline std::string image_id_from_path(const std::filesystem::path& p) {
  std::string stem = p.stem().string();
  for (std::string_view prefix : {"gt_", "res_"}) {
    if (stem.size() > prefix.size() && stem.compare(0, prefix.size(), prefix) == 0) {
      return stem.substr(prefix.size());
    }
  }
  return stem;
}

inline std::vector<std::filesystem::path> list_inputs(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path, ec)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    if (ec) throw IoError("cannot list directory " + path.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
  }
  if (std::filesystem::is_regular_file(path, ec)) return {path};
  throw IoError("cannot read " + path.string() + ": no such file or directory");
}

template <class Record, class ParseLine>
Ingested<Record> ingest(const std::filesystem::path& path, ParseLine parse_line) {
  Ingested<Record> out;
  for (const auto& file : list_inputs(path)) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    const std::string id = image_id_from_path(file);
    auto& records = out.images[id];
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view view(line);
      if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
      view = trim(view);
      if (view.empty()) continue;
      try {
        Record r = parse_line(view);
        r.image_id = id;
        records.push_back(std::move(r));
      } catch (const std::exception& e) {
        out.errors.push_back({file.string(), lineno, e.what()});
      }
    }
  }
  return out;
}

}  // namespace detail

inline AnnotationRecord parse_gt_line(std::string_view line) {
  const auto f = detail::split_commas(line);
  if (f.size() < 9) {
    throw std::invalid_argument("expected at least 9 comma-separated fields, got " +
                                std::to_string(f.size()));
  }
  AnnotationRecord r;
  r.quad = detail::parse_quad(f);
  if (f.size() == 9) {
    r.transcription = std::string(f[8]);
  } else {
    r.script = std::string(detail::trim(f[8]));
    // Transcriptions may themselves contain commas.
    const std::size_t start = static_cast<std::size_t>(f[9].data() - line.data());
    r.transcription = std::string(line.substr(start));
  }
  r.ignore = detail::trim(r.transcription) == kDontCareTranscription;
  if (!r.ignore && !(area(r.quad) > 0.0)) throw std::invalid_argument("zero-area ground truth");
  return r;
}

inline DetectionRecord parse_detection_line(std::string_view line) {
  const auto f = detail::split_commas(line);
  DetectionRecord r;
  if (f.size() == 9) {
    r.shape = detail::parse_quad(f);
    r.score = detail::parse_number(f[8], 8);
  } else if (f.size() == 5) {
    const double x0 = detail::parse_number(f[0], 0), y0 = detail::parse_number(f[1], 1);
    const double x1 = detail::parse_number(f[2], 2), y1 = detail::parse_number(f[3], 3);
    r.shape = AxisBox(x0, y0, x1, y1);
    r.score = detail::parse_number(f[4], 4);
  } else {
    throw std::invalid_argument("expected 9 (quad) or 5 (box) fields, got " +
                                std::to_string(f.size()));
  }
  if (!(r.score >= 0.0 && r.score <= 1.0)) throw std::invalid_argument("score outside [0, 1]");
  if (!(area(r.shape) > 0.0)) throw std::invalid_argument("zero-area detection");
  return r;
}

inline Ingested<AnnotationRecord> ingest_gt(const std::filesystem::path& path) {
  return detail::ingest<AnnotationRecord>(path, parse_gt_line);
}

inline Ingested<DetectionRecord> ingest_detections(const std::filesystem::path& path) {
  return detail::ingest<DetectionRecord>(path, parse_detection_line);
}

// ---- formatting -------------------------------------------------------------

inline std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v + 0.0);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string format_quad(const Quad& q) {
  std::string s;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) s += ',';
    s += format_fixed3(q[i].x) + ',' + format_fixed3(q[i].y);
  }
  return s;
}

inline std::string format_gt_line(const AnnotationRecord& r) {
  std::string s = format_quad(r.quad);
  if (r.script) s += ',' + *r.script;
  s += ',' + r.transcription;
  return s;
}

inline std::string format_detection_line(const DetectionRecord& r) {
  const Quad q = std::visit(
      [](const auto& shape) -> Quad {
        if constexpr (std::is_same_v<std::decay_t<decltype(shape)>, AxisBox>) return Quad(shape);
        else return shape;
      },
      r.shape);
  return format_quad(q) + ',' + format_fixed3(r.score);
}

inline void write_lines(const std::filesystem::path& file, const std::vector<std::string>& lines) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("write failed for " + file.string());
}

// ---- conversion to evaluation inputs ----------------------------------------

// Pairs ground truth and detections by image id; an id present on one side
// only yields an image with an empty list on the other.
inline std::vector<ImageSample> to_samples(const Ingested<AnnotationRecord>& gt,
                                           const Ingested<DetectionRecord>& det) {
  std::map<std::string, ImageSample> by_id;
  for (const auto& [id, recs] : gt.images) {
    auto& s = by_id[id];
    s.id = id;
    for (const auto& r : recs) s.ground_truths.push_back({r.quad, r.ignore});
  }
  for (const auto& [id, recs] : det.images) {
    auto& s = by_id[id];
    s.id = id;
    for (const auto& r : recs) s.detections.push_back({r.shape, r.score});
  }
  std::vector<ImageSample> out;
  for (auto& [id, s] : by_id) out.push_back(std::move(s));
  return out;
}

}  // namespace subtext
