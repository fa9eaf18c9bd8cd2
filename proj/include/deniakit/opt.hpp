#pragma once

// Small dense optimization helpers: Euclidean projection onto the
// probability simplex, Dirichlet(1,...,1) sampling, and a projected-gradient
// ascent loop over a block of concatenated simplices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "deniakit/rng.hpp"

namespace deniakit {

// Projects v onto {x >= 0, sum x = 1} in Euclidean norm (sort-based).
inline void project_simplex(double* v, int n) {
  if (n == 1) {
    v[0] = 1.0;
    return;
  }
  std::vector<double> u(v, v + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    const double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  for (int i = 0; i < n; ++i) v[i] = std::max(0.0, v[i] - theta);
  // renormalize away rounding residue
  double s = std::accumulate(v, v + n, 0.0);
  if (s > 0.0)
    for (int i = 0; i < n; ++i) v[i] /= s;
  else
    for (int i = 0; i < n; ++i) v[i] = 1.0 / n;
}

inline std::vector<double> dirichlet_uniform(CounterRng& rng, int n) {
  // Dirichlet(1,...,1) via normalized exponentials.
  std::vector<double> x(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    x[i] = -std::log(u);
    s += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= s;
  return x;
}

// A parameter vector made of consecutive simplices (sizes given by blocks).
struct SimplexBlocks {
  std::vector<int> blocks;

  int dim() const { return std::accumulate(blocks.begin(), blocks.end(), 0); }

  void project(std::vector<double>& x) const {
    int off = 0;
    for (int b : blocks) {
      project_simplex(x.data() + off, b);
      off += b;
    }
  }

  std::vector<double> random_point(CounterRng& rng) const {
    std::vector<double> x;
    x.reserve(dim());
    for (int b : blocks) {
      auto d = dirichlet_uniform(rng, b);
      x.insert(x.end(), d.begin(), d.end());
    }
    return x;
  }
};

struct AscentResult {
  std::vector<double> x;
  double value = 0.0;
};

// Maximizes f over the product of simplices by projected gradient ascent
// with backtracking. grad(x, g) fills the gradient; max_iters caps work.
inline AscentResult projected_gradient_ascent(
    const SimplexBlocks& blocks, std::vector<double> x0,
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& grad,
    int max_iters, double tol = 1e-11) {
  std::vector<double> x = std::move(x0);
  blocks.project(x);
  std::vector<double> g(x.size()), trial(x.size());
  double fx = f(x);
  double step = 0.5;
  for (int it = 0; it < max_iters; ++it) {
    grad(x, g);
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * g[i];
      blocks.project(trial);
      const double ft = f(trial);
      if (ft > fx + 1e-15) {
        double moved = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) moved = std::max(moved, std::abs(trial[i] - x[i]));
        x.swap(trial);
        fx = ft;
        step *= 1.6;
        improved = true;
        if (moved < tol) return {x, fx};
        break;
      }
      step *= 0.5;
      if (step < 1e-14) return {x, fx};
    }
    if (!improved) return {x, fx};
  }
  return {x, fx};
}

}  // namespace deniakit
