#pragma once

// Deterministic 2-D PCA projection and SVG / CSV scene emitters.

#include "style_space/common.hpp"
#include "style_space/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace style_space {

using Point2 = Eigen::Vector2d;

struct Projection2D {
  Vector mean;
  Eigen::Matrix<double, 2, Eigen::Dynamic> basis;  // rows orthonormal
  std::array<double, 2> explained_variance{0.0, 0.0};

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

namespace detail {

// Flip so the first entry with |x| > 1e-12 is positive.
inline void canonical_sign(Eigen::Ref<Vector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace detail

// Top-2 principal axes of the population covariance of the point columns.
inline Projection2D pca_fit(const Matrix& points) {
  if (points.cols() < 3) throw DataError("PCA needs at least 3 points");
  if (points.rows() < 2) throw DataError("PCA needs dimension >= 2");
  const auto d = points.rows();
  Projection2D p;
  p.mean = points.rowwise().mean();
  const Matrix centered = points.colwise() - p.mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(points.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  p.basis.resize(2, d);
  const auto& lambda = eig.eigenvalues();  // ascending
  const double top = lambda[d - 1];
  if (eig.info() != Eigen::Success || !(top > 1e-300)) {
    p.basis.setZero();
    p.basis(0, 0) = 1.0;
    p.basis(1, 1) = 1.0;
    p.explained_variance = {0.0, 0.0};
    return p;
  }
  for (int k = 0; k < 2; ++k) {
    Vector axis = eig.eigenvectors().col(d - 1 - k);
    detail::canonical_sign(axis);
    p.basis.row(k) = axis.transpose();
    p.explained_variance[static_cast<std::size_t>(k)] = std::max(0.0, lambda[d - 1 - k]);
  }
  return p;
}

inline Projection2D pca_fit(const LabeledEmbeddingSet& set) {
  if (set.size() < 3) throw DataError("PCA needs at least 3 records");
  Matrix pts(static_cast<Eigen::Index>(set.dim()), static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = set.records()[i].weights;
  return pca_fit(pts);
}

inline Point2 project(const Projection2D& proj, const Eigen::Ref<const Vector>& point) {
  require_dim(proj.dim(), static_cast<std::size_t>(point.size()));
  return proj.basis * (point - proj.mean);
}

inline std::vector<Point2> project(const Projection2D& proj, const std::vector<Vector>& points) {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(project(proj, p));
  return out;
}

// ---------------------------------------------------------------------------
// Scenes

enum class MarkerKind { point, rep_mean, rep_i2i, schedule };

inline std::string to_string(MarkerKind k) {
  switch (k) {
    case MarkerKind::point: return "point";
    case MarkerKind::rep_mean: return "rep_mean";
    case MarkerKind::rep_i2i: return "rep_i2i";
    case MarkerKind::schedule: return "schedule";
  }
  return "unknown";
}

struct ScenePoint {
  Point2 xy;
  std::string label;
  MarkerKind kind = MarkerKind::point;
};

// Everything drawn in one plot, in draw order: category points, representatives,
// and schedule polylines (each polyline is a run of schedule points sharing a label).
struct PlotScene {
  std::vector<ScenePoint> points;
  std::vector<ScenePoint> representatives;
  std::vector<std::vector<ScenePoint>> schedules;

  std::size_t size() const {
    std::size_t n = points.size() + representatives.size();
    for (const auto& s : schedules) n += s.size();
    return n;
  }
};

enum class PlotFormat { svg, csv };

inline PlotFormat plot_format_from_string(const std::string& s) {
  if (s == "svg") return PlotFormat::svg;
  if (s == "csv") return PlotFormat::csv;
  throw ConfigError("unknown plot format '" + s + "' (svg|csv)");
}

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return std::string(buf) == "-0.000" ? "0.000" : buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const std::array<const char*, 10>& palette() {
  static const std::array<const char*, 10> colors{"#7f7f7f", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                                  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#1f77b4"};
  return colors;
}

inline std::string emit_csv(const PlotScene& scene) {
  std::ostringstream out;
  out << "x,y,label,kind\n";
  auto row = [&](const ScenePoint& p) {
    out << g17(p.xy.x()) << ',' << g17(p.xy.y()) << ',' << p.label << ',' << to_string(p.kind) << '\n';
  };
  for (const auto& p : scene.points) row(p);
  for (const auto& p : scene.representatives) row(p);
  for (const auto& s : scene.schedules)
    for (const auto& p : s) row(p);
  return out.str();
}

inline std::string emit_svg(const PlotScene& scene) {
  constexpr double width = 800.0, height = 600.0, margin = 0.05;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  auto extend = [&](const ScenePoint& p) {
    if (first) {
      xmin = xmax = p.xy.x();
      ymin = ymax = p.xy.y();
      first = false;
      return;
    }
    xmin = std::min(xmin, p.xy.x());
    xmax = std::max(xmax, p.xy.x());
    ymin = std::min(ymin, p.xy.y());
    ymax = std::max(ymax, p.xy.y());
  };
  for (const auto& p : scene.points) extend(p);
  for (const auto& p : scene.representatives) extend(p);
  for (const auto& s : scene.schedules)
    for (const auto& p : s) extend(p);
  const double xspan = xmax - xmin > 0 ? xmax - xmin : 1.0;
  const double yspan = ymax - ymin > 0 ? ymax - ymin : 1.0;
  const double x0 = margin * width, y0 = margin * height;
  const double w = (1.0 - 2.0 * margin) * width, h = (1.0 - 2.0 * margin) * height;
  auto sx = [&](double x) { return fixed3(x0 + (x - xmin) / xspan * w); };
  auto sy = [&](double y) { return fixed3(y0 + h - (y - ymin) / yspan * h); };

  // Colors follow first appearance of each category label.
  std::map<std::string, std::string> color;
  std::vector<std::string> order;
  auto color_of = [&](const std::string& label) -> const std::string& {
    auto it = color.find(label);
    if (it == color.end()) {
      it = color.emplace(label, palette()[order.size() % palette().size()]).first;
      order.push_back(label);
    }
    return it->second;
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" style=\"fill:#ffffff\"/>\n";

  std::map<std::string, std::vector<const ScenePoint*>> groups;
  std::vector<std::string> group_order;
  for (const auto& p : scene.points) {
    if (!groups.count(p.label)) group_order.push_back(p.label);
    groups[p.label].push_back(&p);
  }
  for (const auto& label : group_order) {
    out << "<g class=\"category\" id=\"cat-" << xml_escape(label) << "\" style=\"fill:" << color_of(label)
        << ";fill-opacity:0.5;stroke:none\">\n";
    for (const auto* p : groups[label])
      out << "<circle cx=\"" << sx(p->xy.x()) << "\" cy=\"" << sy(p->xy.y()) << "\" r=\"2\"/>\n";
    out << "</g>\n";
  }

  for (const auto& s : scene.schedules) {
    if (s.empty()) continue;
    out << "<g class=\"schedule\" id=\"sched-" << xml_escape(s.front().label) << "\">\n<polyline points=\"";
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << sx(s[i].xy.x()) << ',' << sy(s[i].xy.y());
    out << "\" style=\"fill:none;stroke:#000000;stroke-width:1.5\"/>\n";
    for (const auto& p : s)
      out << "<circle cx=\"" << sx(p.xy.x()) << "\" cy=\"" << sy(p.xy.y())
          << "\" r=\"4\" style=\"fill:#ffffff;stroke:#000000;stroke-width:1.5\"/>\n";
    out << "</g>\n";
  }

  // Mean representatives: blue squares. I2I representatives: red diamonds.
  for (const auto& p : scene.representatives) {
    const std::string cx = sx(p.xy.x()), cy = sy(p.xy.y());
    const double px = x0 + (p.xy.x() - xmin) / xspan * w;
    const double py = y0 + h - (p.xy.y() - ymin) / yspan * h;
    if (p.kind == MarkerKind::rep_mean) {
      out << "<rect class=\"rep-mean\" x=\"" << fixed3(px - 5) << "\" y=\"" << fixed3(py - 5)
          << "\" width=\"10\" height=\"10\" style=\"fill:#1f77b4;stroke:#000000;stroke-width:1\"><title>"
          << xml_escape(p.label) << " (mean)</title></rect>\n";
    } else {
      out << "<polygon class=\"rep-i2i\" points=\"" << cx << ',' << fixed3(py - 7) << ' ' << fixed3(px + 7) << ','
          << cy << ' ' << cx << ',' << fixed3(py + 7) << ' ' << fixed3(px - 7) << ',' << cy
          << "\" style=\"fill:#d62728;stroke:#000000;stroke-width:1\"><title>" << xml_escape(p.label)
          << " (i2i)</title></polygon>\n";
    }
  }

  // Legend.
  double ly = 20.0;
  for (const auto& label : order) {
    out << "<rect x=\"10\" y=\"" << fixed3(ly - 8) << "\" width=\"10\" height=\"10\" style=\"fill:" << color.at(label)
        << "\"/><text x=\"26\" y=\"" << fixed3(ly + 1) << "\" style=\"font-family:sans-serif;font-size:12px\">"
        << xml_escape(label) << "</text>\n";
    ly += 16.0;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace detail

inline std::string emit_plot(const PlotScene& scene, PlotFormat format) {
  if (scene.size() == 0) throw DataError("cannot plot an empty scene");
  return format == PlotFormat::svg ? detail::emit_svg(scene) : detail::emit_csv(scene);
}

}  // namespace style_space
