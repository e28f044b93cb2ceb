#pragma once

// Planar geometry for text regions: axis-aligned boxes, convex quadrilaterals,
// and the overlap measures (IoU, IoF) used to label detections.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace subtext {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct AxisBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  AxisBox() = default;
  AxisBox(double x0, double y0, double x1, double y1)
      : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) ||
        !std::isfinite(y1)) {
      throw GeometryError("AxisBox: non-finite coordinate");
    }
    if (x0 > x1 || y0 > y1) {
      throw GeometryError("AxisBox: min corner exceeds max corner");
    }
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  friend bool operator==(const AxisBox&, const AxisBox&) = default;
};

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline double signed_area(const std::vector<Point>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

}  // namespace detail

// Convex quadrilateral. Vertices are stored counter-clockwise (in a y-up
// frame; i.e. positive shoelace area). Clockwise input is reversed, which
// keeps the first vertex in place.
class Quad {
 public:
  Quad() = default;

  explicit Quad(std::array<Point, 4> vertices) : v_(vertices) {
    for (const Point& p : v_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw GeometryError("Quad: non-finite coordinate");
      }
    }
    int positive = 0;
    int negative = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double c = detail::cross(v_[i], v_[(i + 1) % 4], v_[(i + 2) % 4]);
      if (c > 0) ++positive;
      if (c < 0) ++negative;
    }
    if (positive > 0 && negative > 0) {
      throw GeometryError("Quad: vertices do not form a convex simple polygon");
    }
    if (negative > 0) {
      std::swap(v_[1], v_[3]);
    }
  }

  Quad(Point a, Point b, Point c, Point d) : Quad(std::array<Point, 4>{a, b, c, d}) {}

  explicit Quad(const AxisBox& box)
      : v_{Point{box.x_min, box.y_min}, Point{box.x_max, box.y_min},
           Point{box.x_max, box.y_max}, Point{box.x_min, box.y_max}} {}

  const std::array<Point, 4>& vertices() const { return v_; }
  const Point& operator[](std::size_t i) const { return v_[i]; }

  AxisBox bounding_box() const {
    double x0 = v_[0].x, x1 = v_[0].x, y0 = v_[0].y, y1 = v_[0].y;
    for (const Point& p : v_) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    return AxisBox(x0, y0, x1, y1);
  }

  std::vector<Point> polygon() const { return {v_.begin(), v_.end()}; }

  friend bool operator==(const Quad&, const Quad&) = default;

 private:
  std::array<Point, 4> v_{};
};

using Region = std::variant<AxisBox, Quad>;

inline std::vector<Point> to_polygon(const AxisBox& b) { return Quad(b).polygon(); }
inline std::vector<Point> to_polygon(const Quad& q) { return q.polygon(); }
inline std::vector<Point> to_polygon(const Region& r) {
  return std::visit([](const auto& s) { return to_polygon(s); }, r);
}

inline AxisBox bounding_box(const AxisBox& b) { return b; }
inline AxisBox bounding_box(const Quad& q) { return q.bounding_box(); }
inline AxisBox bounding_box(const Region& r) {
  return std::visit([](const auto& s) { return bounding_box(s); }, r);
}

inline double area(const AxisBox& b) { return b.width() * b.height(); }
inline double area(const Quad& q) { return std::abs(detail::signed_area(q.polygon())); }
inline double area(const Region& r) {
  return std::visit([](const auto& s) { return area(s); }, r);
}

// Sutherland-Hodgman: clips `subject` against every edge of the convex,
// counter-clockwise `clip` polygon.
inline std::vector<Point> clip_convex(std::vector<Point> subject,
                                      const std::vector<Point>& clip) {
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
    const Point& a = clip[e];
    const Point& b = clip[(e + 1) % m];
    std::vector<Point> out;
    out.reserve(subject.size() + 2);
    const std::size_t n = subject.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& cur = subject[i];
      const Point& prev = subject[(i + n - 1) % n];
      const double dc = detail::cross(a, b, cur);
      const double dp = detail::cross(a, b, prev);
      const bool cur_in = dc >= 0.0;
      const bool prev_in = dp >= 0.0;
      if (cur_in != prev_in) {
        const double t = dp / (dp - dc);
        out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
      if (cur_in) out.push_back(cur);
    }
    subject = std::move(out);
  }
  return subject;
}

inline double polygon_intersection_area(const std::vector<Point>& a,
                                        const std::vector<Point>& b) {
  if (detail::signed_area(a) <= 0.0 || detail::signed_area(b) <= 0.0) return 0.0;
  // Canonical operand order makes the result bitwise symmetric.
  const auto less = [](const Point& p, const Point& q) {
    return p.x < q.x || (p.x == q.x && p.y < q.y);
  };
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end(), less)) {
    return std::abs(detail::signed_area(clip_convex(b, a)));
  }
  return std::abs(detail::signed_area(clip_convex(a, b)));
}

inline double intersection_area(const AxisBox& a, const AxisBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

template <class A, class B>
double intersection_area(const A& a, const B& b) {
  return polygon_intersection_area(to_polygon(a), to_polygon(b));
}

inline double intersection_area(const Region& a, const Region& b) {
  return std::visit([](const auto& x, const auto& y) { return intersection_area(x, y); },
                    a, b);
}

template <class A, class B>
double iou(const A& a, const B& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Fraction of `foreground` covered by `reference`. Not symmetric.
template <class A, class B>
double iof(const A& foreground, const B& reference) {
  const double fg = area(foreground);
  if (!(fg > 0.0)) {
    throw GeometryError("iof: foreground has zero area (degenerate proposal)");
  }
  return std::clamp(intersection_area(foreground, reference) / fg, 0.0, 1.0);
}

namespace detail {

inline bool contains(const std::vector<Point>& ccw, const Point& p) {
  const std::size_t n = ccw.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(ccw[i], ccw[(i + 1) % n], p) < 0.0) return false;
  }
  return true;
}

}  // namespace detail

// Grid count of cells (side `resolution`) whose centres fall inside both
// shapes, times the cell area. Test oracle for intersection_area.
template <class A, class B>
double rasterized_overlap_oracle(const A& a, const B& b, double resolution) {
  if (!(resolution > 0.0)) {
    throw GeometryError("rasterized_overlap_oracle: resolution must be positive");
  }
  const auto pa = to_polygon(a);
  const auto pb = to_polygon(b);
  if (detail::signed_area(pa) <= 0.0 || detail::signed_area(pb) <= 0.0) return 0.0;
  const AxisBox ba = bounding_box(a);
  const AxisBox bb = bounding_box(b);
  const double x0 = std::max(ba.x_min, bb.x_min);
  const double x1 = std::min(ba.x_max, bb.x_max);
  const double y0 = std::max(ba.y_min, bb.y_min);
  const double y1 = std::min(ba.y_max, bb.y_max);
  if (x0 >= x1 || y0 >= y1) return 0.0;
  // Grid anchored at the origin so the count is independent of argument order.
  const auto first = [&](double lo) {
    return static_cast<long long>(std::floor(lo / resolution - 0.5));
  };
  const long long ix0 = first(x0), iy0 = first(y0);
  const long long ix1 = static_cast<long long>(std::ceil(x1 / resolution));
  const long long iy1 = static_cast<long long>(std::ceil(y1 / resolution));
  long long count = 0;
  for (long long iy = iy0; iy <= iy1; ++iy) {
    const double cy = (static_cast<double>(iy) + 0.5) * resolution;
    if (cy < y0 || cy > y1) continue;
    for (long long ix = ix0; ix <= ix1; ++ix) {
      const double cx = (static_cast<double>(ix) + 0.5) * resolution;
      if (cx < x0 || cx > x1) continue;
      const Point c{cx, cy};
      if (detail::contains(pa, c) && detail::contains(pb, c)) ++count;
    }
  }
  return static_cast<double>(count) * resolution * resolution;
}

}  // namespace subtext
