#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace cfr::detail {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

// Unconstrained Nelder-Mead minimization with the standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Restarts from the
// best vertex until a restart improves the objective by less than `restart_tol`.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> start, double step, double restart_tol,
                                 int max_iterations = 20000) {
  const std::size_t n = start.size();
  SimplexResult best{start, f(start), 0};

  for (int restart = 0; restart < 50; ++restart) {
    std::vector<std::vector<double>> simplex(n + 1, best.x);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    int it = 0;
    for (; it < max_iterations; ++it) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t next_hi = order[n - 1];

      double diameter = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[lo][j]));
        }
      }
      if (std::abs(values[hi] - values[lo]) <= 1e-13 * (1.0 + std::abs(values[lo])) &&
          diameter < 1e-9) {
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == hi) continue;
        for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
      }
      auto along = [&](double coef) {
        std::vector<double> p(n);
        for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (simplex[hi][j] - centroid[j]);
        return p;
      };

      auto reflected = along(-1.0);
      const double fr = f(reflected);
      if (fr < values[lo]) {
        auto expanded = along(-2.0);
        const double fe = f(expanded);
        if (fe < fr) {
          simplex[hi] = std::move(expanded);
          values[hi] = fe;
        } else {
          simplex[hi] = std::move(reflected);
          values[hi] = fr;
        }
        continue;
      }
      if (fr < values[next_hi]) {
        simplex[hi] = std::move(reflected);
        values[hi] = fr;
        continue;
      }
      const bool outside = fr < values[hi];
      auto contracted = along(outside ? -0.5 : 0.5);
      const double fc = f(contracted);
      if (fc < (outside ? fr : values[hi])) {
        simplex[hi] = std::move(contracted);
        values[hi] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == lo) continue;
        for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
        values[i] = f(simplex[i]);
      }
    }

    const auto lo = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    const double improvement = best.value - values[lo];
    best.iterations += it;
    if (values[lo] < best.value) {
      best.x = simplex[lo];
      best.value = values[lo];
    }
    if (improvement < restart_tol) break;
    step = std::max(step * 0.5, 1e-4);
  }
  return best;
}

// Golden-section maximization of a unimodal function on [a, b].
inline double golden_section_max(const std::function<double(double)>& f, double a, double b,
                                 double tol = 1e-12) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (std::abs(b - a) > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace cfr::detail
