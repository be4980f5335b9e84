#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <span>
#include <vector>

namespace popsynth {

struct LbfgsOptions {
  int history = 10;
  int max_iterations = 5000;
  /// Stop when the max-norm of the gradient is at most this.
  double gradient_tolerance = 1e-6;
  /// Sufficient-decrease constant of the backtracking line search.
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  /// Optional diagonal approximation of the inverse Hessian used as the
  /// initial matrix of the two-loop recursion; empty means identity.
  std::vector<double> preconditioner;
};

enum class LbfgsStatus { Converged, IterationLimit, LineSearchFailed };

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::IterationLimit;

  bool converged() const noexcept { return status == LbfgsStatus::Converged; }
};

/// Objective: writes the gradient into its second argument, returns the value.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Limited-memory BFGS with a backtracking (Armijo) line search.
inline LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0,
                                  const LbfgsOptions& opts = {}) {
  const std::size_t n = x0.size();
  LbfgsResult r;
  r.x = std::move(x0);
  r.gradient.assign(n, 0.0);
  r.value = f(r.x, r.gradient);
  r.evaluations = 1;
  if (n == 0 || detail::max_abs(r.gradient) <= opts.gradient_tolerance) {
    r.status = LbfgsStatus::Converged;
    return r;
  }

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> mem;
  std::vector<double> d(n), x_new(n), g_new(n), alpha(opts.history);
  const auto& diag = opts.preconditioner;
  if (!diag.empty() && diag.size() != n) throw std::invalid_argument("preconditioner size mismatch");
  auto precondition = [&](std::vector<double>& v) {
    if (!diag.empty())
      for (std::size_t k = 0; k < n; ++k) v[k] *= diag[k];
  };
  auto weighted_dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    if (diag.empty()) return detail::dot(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * diag[k] * b[k];
    return s;
  };

  auto direction = [&] {
    // two-loop recursion: d = -H g
    std::copy(r.gradient.begin(), r.gradient.end(), d.begin());
    for (std::size_t i = mem.size(); i-- > 0;) {
      alpha[i] = mem[i].rho * detail::dot(mem[i].s, d);
      for (std::size_t k = 0; k < n; ++k) d[k] -= alpha[i] * mem[i].y[k];
    }
    double gamma = 1.0;
    if (!mem.empty()) {
      const auto& last = mem.back();
      gamma = detail::dot(last.s, last.y) / weighted_dot(last.y, last.y);
    } else {
      gamma = 1.0 / std::max(1.0, std::sqrt(weighted_dot(r.gradient, r.gradient)));
    }
    precondition(d);
    for (auto& v : d) v *= gamma;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double beta = mem[i].rho * detail::dot(mem[i].y, d);
      for (std::size_t k = 0; k < n; ++k) d[k] += (alpha[i] - beta) * mem[i].s[k];
    }
    for (auto& v : d) v = -v;
  };

  // Near the optimum the Armijo decrease drops below the rounding noise of
  // f; then accept on the directional derivative instead (Hager-Zhang).
  auto approximately_wolfe = [&](double v, double slope0, double slope1) {
    const double noise = 1e-12 * (1.0 + std::abs(r.value));
    return v <= r.value + noise && slope1 >= 0.9 * slope0 && slope1 <= -0.8 * slope0;
  };

  while (r.iterations < opts.max_iterations) {
    direction();
    double slope = detail::dot(r.gradient, d);
    if (!(slope < 0.0)) {
      mem.clear();
      direction();
      slope = detail::dot(r.gradient, d);
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double step = 1.0;
      for (int b = 0; b <= opts.max_backtracks; ++b) {
        for (std::size_t k = 0; k < n; ++k) x_new[k] = r.x[k] + step * d[k];
        const double v = f(x_new, g_new);
        ++r.evaluations;
        if (std::isfinite(v) && (v <= r.value + opts.armijo * step * slope ||
                                 approximately_wolfe(v, slope, detail::dot(g_new, d)))) {
          // curvature pair
          Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
          for (std::size_t k = 0; k < n; ++k) {
            p.s[k] = x_new[k] - r.x[k];
            p.y[k] = g_new[k] - r.gradient[k];
          }
          const double sy = detail::dot(p.s, p.y);
          if (sy > 1e-12 * std::sqrt(detail::dot(p.s, p.s) * detail::dot(p.y, p.y))) {
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (static_cast<int>(mem.size()) > opts.history) mem.pop_front();
          }
          std::swap(r.x, x_new);
          std::swap(r.gradient, g_new);
          r.value = v;
          accepted = true;
          break;
        }
        step *= opts.backtrack;
      }
      if (!accepted) {
        if (mem.empty()) break;
        // stale curvature: retry along steepest descent
        mem.clear();
        direction();
        slope = detail::dot(r.gradient, d);
      }
    }
    if (!accepted) {
      r.status = LbfgsStatus::LineSearchFailed;
      return r;
    }
    ++r.iterations;
    if (detail::max_abs(r.gradient) <= opts.gradient_tolerance) {
      r.status = LbfgsStatus::Converged;
      return r;
    }
  }
  r.status = LbfgsStatus::IterationLimit;
  return r;
}

}  // namespace popsynth
