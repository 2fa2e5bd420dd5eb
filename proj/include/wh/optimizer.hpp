#pragma once

// Unconstrained minimizer used by the waveform designers: BFGS on central
// finite-difference gradients with Armijo backtracking, and a coordinate-wise
// golden-section sweep once the gradient has vanished numerically.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace wh {

struct MinimizeOptions {
  int budget = 200;                 ///< iterations, counting the initial evaluation
  double fd_step = 1e-5;
  double grad_stall = 1e-8;
  double rel_tol = 1e-9;            ///< relative improvement ...
  int stall_window = 20;            ///< ... over this many iterations
  double golden_radius = 0.1;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  std::vector<double> history;  ///< objective after each accepted iteration
};

using Objective = std::function<double(std::span<const double>)>;

namespace detail {

inline std::vector<double> fd_gradient(const Objective& f, std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Golden-section search of f along coordinate i on [x_i - r, x_i + r].
/// Returns true (and updates x, fx) only on strict improvement.
inline bool golden_coordinate(const Objective& f, std::vector<double>& x, double& fx, std::size_t i, double r) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double x0 = x[i];
  double a = x0 - r, b = x0 + r;
  auto eval = [&](double t) {
    x[i] = t;
    return f(x);
  };
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = eval(d);
    }
  }
  const double best = fc < fd ? c : d;
  const double fbest = std::min(fc, fd);
  if (fbest < fx) {
    x[i] = best;
    fx = fbest;
    return true;
  }
  x[i] = x0;
  return false;
}

}  // namespace detail

inline MinimizeResult minimize(const Objective& f, std::vector<double> x, const MinimizeOptions& opt = {}) {
  MinimizeResult res;
  const std::size_t n = x.size();
  double fx = f(x);
  res.iterations = 1;
  res.history.push_back(fx);
  if (n == 0 || opt.budget <= 1) {
    res.x = std::move(x);
    res.value = fx;
    return res;
  }
  std::vector<double> H(n * n, 0.0);
  auto reset_h = [&] {
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
  };
  reset_h();
  std::vector<double> g = detail::fd_gradient(f, x, opt.fd_step);
  bool fresh_h = true;
  while (res.iterations < opt.budget) {
    const double gnorm = std::sqrt(detail::dot(g, g));
    bool improved = false;
    if (gnorm >= opt.grad_stall) {
      std::vector<double> d(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i] -= H[i * n + j] * g[j];
      double slope = detail::dot(g, d);
      if (slope >= 0.0) {
        reset_h();
        fresh_h = true;
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        slope = -gnorm * gnorm;
      }
      // first step from a fresh inverse Hessian: cap the move at ~0.5 rad
      double t = 1.0;
      if (fresh_h) t = std::min(1.0, 0.5 / std::sqrt(detail::dot(d, d)));
      std::vector<double> xn(n);
      double fn = fx;
      for (int ls = 0; ls < 40; ++ls) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + t * d[i];
        fn = f(xn);
        if (fn <= fx + 1e-4 * t * slope && fn < fx) {
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (improved) {
        std::vector<double> gn = detail::fd_gradient(f, xn, opt.fd_step);
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
          s[i] = xn[i] - x[i];
          y[i] = gn[i] - g[i];
        }
        const double sy = detail::dot(s, y);
        if (sy > 1e-12) {
          if (fresh_h) {
            // Shanno scaling of the initial inverse Hessian
            const double scale = sy / detail::dot(y, y);
            for (std::size_t i = 0; i < n; ++i) H[i * n + i] = scale;
          }
          std::vector<double> Hy(n, 0.0);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
          const double yHy = detail::dot(y, Hy);
          const double rho = 1.0 / sy;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
              H[i * n + j] += (1.0 + rho * yHy) * rho * s[i] * s[j] - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
          fresh_h = false;
        }
        x = std::move(xn);
        fx = fn;
        g = std::move(gn);
      } else if (!fresh_h) {
        reset_h();
        fresh_h = true;
        ++res.iterations;
        continue;
      }
    }
    if (!improved) {
      // gradient stalled or line search failed from steepest descent
      bool any = false;
      for (std::size_t i = 0; i < n && res.iterations < opt.budget; ++i)
        any = detail::golden_coordinate(f, x, fx, i, opt.golden_radius) || any;
      ++res.iterations;
      res.history.push_back(fx);
      if (!any) break;
      g = detail::fd_gradient(f, x, opt.fd_step);
      reset_h();
      fresh_h = true;
      continue;
    }
    ++res.iterations;
    res.history.push_back(fx);
    const int w = opt.stall_window;
    if (static_cast<int>(res.history.size()) > w) {
      const double old = res.history[res.history.size() - 1 - static_cast<std::size_t>(w)];
      if (old - fx <= opt.rel_tol * std::max(std::abs(old), 1e-300)) break;
    }
  }
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace wh
