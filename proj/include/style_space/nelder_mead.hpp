#pragma once

#include "style_space/common.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace style_space {

struct NelderMeadOptions {
  double initial_step = 0.1;   // edge length of the axis-aligned starting simplex
  double tol = 1e-6;           // stop when every vertex is within tol of the best one
  std::size_t max_iters = 2000;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Derivative-free minimization with dimension-adaptive coefficients (Gao & Han, 2012).
// Non-finite objective values rank as +inf. The starting point is a vertex of the
// initial simplex, so the result is never worse than f(x0).
inline NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                                    const NelderMeadOptions& opts = {}) {
  const auto n = static_cast<std::size_t>(x0.size());
  const double nd = static_cast<double>(std::max<std::size_t>(n, 1));
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / nd;
  const double contract = 0.75 - 1.0 / (2.0 * nd);
  const double shrink = 1.0 - 1.0 / nd;

  auto eval = [&](const Vector& x) {
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<Vector> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][static_cast<Eigen::Index>(i)] += opts.initial_step;
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  NelderMeadResult result;
  for (result.iterations = 0; result.iterations < opts.max_iters; ++result.iterations) {
    std::iota(order.begin(), order.end(), 0);
    // Stable sort keeps the outcome independent of anything but the values.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n > 0 ? n - 1 : 0];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) diameter = std::max(diameter, (simplex[i] - simplex[best]).norm());
    if (diameter < opts.tol) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(x0.size());
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= nd;

    const Vector xr = centroid + reflect * (centroid - simplex[worst]);
    const double fr = eval(xr);
    if (fr < values[best]) {
      const Vector xe = centroid + expand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second_worst]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Vector xc = outside ? Vector(centroid + contract * (xr - centroid))
                              : Vector(centroid + contract * (simplex[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + shrink * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (values[i] < values[best]) best = i;
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

}  // namespace style_space
