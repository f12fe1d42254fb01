#include "dgcrf/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "dgcrf/errors.hpp"
#include "dgcrf/kernels.hpp"

namespace dgcrf {

std::string_view to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::GradientTolerance: return "gradient_tolerance";
    case LbfgsStatus::ValueTolerance: return "value_tolerance";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Point {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> grad;
};

class LineSearch {
 public:
  LineSearch(const GradientObjective& f, const LbfgsOptions& opt, std::span<const double> x0,
             std::span<const double> dir, double f0, double slope0)
      : f_(f), opt_(opt), x0_(x0), dir_(dir), f0_(f0), slope0_(slope0) {}

  // Returns true and fills `out` with a strong-Wolfe point, or false with
  // `out` holding the best sufficient-decrease point found (if any).
  bool run(double alpha0, Point& out) {
    Point prev{0.0, f0_, slope0_, {}, {}};
    double alpha = alpha0;
    for (int i = 0; i < opt_.max_line_search; ++i) {
      Point cur = eval(alpha);
      if (!std::isfinite(cur.value) || !decreased(cur) || (i > 0 && cur.value >= prev.value)) {
        return zoom(prev, cur, out);
      }
      if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      remember(cur);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return fallback(out);
  }

  int evaluations() const { return evals_; }

 private:
  Point eval(double alpha) {
    ++evals_;
    Point p;
    p.alpha = alpha;
    p.x.resize(x0_.size());
    p.grad.resize(x0_.size());
    for (std::size_t i = 0; i < x0_.size(); ++i) p.x[i] = x0_[i] + alpha * dir_[i];
    p.value = f_(p.x, p.grad);
    p.slope = std::isfinite(p.value) ? kernels::dot(p.grad.data(), dir_.data(), dir_.size())
                                     : std::numeric_limits<double>::quiet_NaN();
    return p;
  }

  // Armijo, or near the optimum where f differences drop below rounding, the
  // approximate form of Hager and Zhang: no increase and a slope that has not
  // turned sharply positive.
  bool decreased(const Point& p) const {
    if (p.value <= f0_ + opt_.c1 * p.alpha * slope0_) return true;
    const double noise = 1e-13 * std::abs(f0_);
    return f0_ - p.value >= 0.0 && f0_ - p.value <= noise && p.slope <= (2.0 * opt_.c1 - 1.0) * slope0_;
  }

  void remember(const Point& p) {
    if (std::isfinite(p.value) && decreased(p) &&
        (!best_ || p.value < best_->value)) {
      best_ = p;
    }
  }

  bool fallback(Point& out) {
    if (best_) {
      out = *best_;
    }
    return false;
  }

  static double interpolate(const Point& lo, const Point& hi) {
    const double a = lo.alpha, b = hi.alpha;
    double t = 0.5 * (a + b);
    if (std::isfinite(hi.value) && std::isfinite(hi.slope)) {
      // Minimizer of the cubic matching values and slopes at both ends.
      const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
      const double disc = d1 * d1 - lo.slope * hi.slope;
      if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double c = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
        if (std::isfinite(c)) t = c;
      }
    }
    const double lo_b = std::min(a, b), hi_b = std::max(a, b), w = hi_b - lo_b;
    return std::clamp(t, lo_b + 0.1 * w, hi_b - 0.1 * w);
  }

  bool zoom(Point lo, Point hi, Point& out) {
    for (int i = 0; i < opt_.max_line_search; ++i) {
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      Point cur = eval(interpolate(lo, hi));
      if (!std::isfinite(cur.value) || !decreased(cur) || cur.value >= lo.value) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
        out = std::move(cur);
        return true;
      }
      remember(cur);
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    if (lo.alpha > 0.0) remember(lo);
    return fallback(out);
  }

  const GradientObjective& f_;
  const LbfgsOptions& opt_;
  std::span<const double> x0_, dir_;
  double f0_, slope0_;
  int evals_ = 0;
  std::optional<Point> best_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const GradientObjective& objective, std::vector<double> x0, const LbfgsOptions& opt,
                           const std::function<void(const LbfgsIteration&)>& on_iteration) {
  if (!(opt.c1 > 0.0 && opt.c1 < opt.c2 && opt.c2 < 1.0)) throw ParameterError("line search needs 0 < c1 < c2 < 1");
  if (opt.memory < 1) throw ParameterError("L-BFGS memory must be positive");
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  res.grad.assign(n, 0.0);
  res.value = objective(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) throw NumericError("objective is not finite at the initial point");

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> dir(n), alpha_buf;

  if (inf_norm(res.grad) < opt.grad_tol) {
    res.status = LbfgsStatus::GradientTolerance;
    return res;
  }

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    bool retried = false;
    Point next;
    bool ok = false;
    int evals = 0;
    while (true) {
      // Two-loop recursion.
      std::copy(res.grad.begin(), res.grad.end(), dir.begin());
      const std::size_t m = S.size();
      alpha_buf.assign(m, 0.0);
      for (std::size_t i = m; i-- > 0;) {
        alpha_buf[i] = rho[i] * kernels::dot(S[i].data(), dir.data(), n);
        kernels::axpy(-alpha_buf[i], Y[i].data(), dir.data(), n);
      }
      if (m > 0) {
        const double gamma = kernels::dot(S.back().data(), Y.back().data(), n) /
                             kernels::dot(Y.back().data(), Y.back().data(), n);
        kernels::scale(gamma, dir.data(), n);
      }
      for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * kernels::dot(Y[i].data(), dir.data(), n);
        kernels::axpy(alpha_buf[i] - beta, S[i].data(), dir.data(), n);
      }
      kernels::scale(-1.0, dir.data(), n);
      double slope = kernels::dot(res.grad.data(), dir.data(), n);
      if (!(slope < 0.0)) {
        S.clear(), Y.clear(), rho.clear();
        for (std::size_t i = 0; i < n; ++i) dir[i] = -res.grad[i];
        slope = kernels::dot(res.grad.data(), dir.data(), n);
      }
      double alpha0 = 1.0;
      if (S.empty()) alpha0 = std::min(1.0, 1.0 / std::sqrt(kernels::dot(res.grad.data(), res.grad.data(), n)));
      LineSearch ls(objective, opt, res.x, dir, res.value, slope);
      ok = ls.run(alpha0, next);
      evals += ls.evaluations();
      if (ok || retried || S.empty()) break;
      S.clear(), Y.clear(), rho.clear();
      retried = true;
    }
    res.evaluations += evals;

    const bool moved = !next.x.empty() && next.value < res.value;
    if (!ok && !moved) {
      res.status = LbfgsStatus::LineSearchFailed;
      res.trace.push_back({iter, res.value, inf_norm(res.grad), 0.0, evals, false});
      if (on_iteration) on_iteration(res.trace.back());
      return res;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = next.x[i] - res.x[i];
      y[i] = next.grad[i] - res.grad[i];
    }
    const double sy = kernels::dot(s.data(), y.data(), n);
    if (sy > 1e-10 * std::sqrt(kernels::dot(s.data(), s.data(), n) * kernels::dot(y.data(), y.data(), n))) {
      if (S.size() == static_cast<std::size_t>(opt.memory)) S.pop_front(), Y.pop_front(), rho.pop_front();
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    const double prev_value = res.value;
    res.x = std::move(next.x);
    res.grad = std::move(next.grad);
    res.value = next.value;
    res.iterations = iter;
    const double gnorm = inf_norm(res.grad);
    res.trace.push_back({iter, res.value, gnorm, next.alpha, evals, ok});
    if (on_iteration) on_iteration(res.trace.back());

    if (!ok) {
      res.status = LbfgsStatus::LineSearchFailed;
      return res;
    }
    if (gnorm < opt.grad_tol) {
      res.status = LbfgsStatus::GradientTolerance;
      return res;
    }
    if (std::abs(prev_value - res.value) < opt.value_tol * std::max({std::abs(prev_value), std::abs(res.value), 1.0})) {
      res.status = LbfgsStatus::ValueTolerance;
      return res;
    }
  }
  res.status = LbfgsStatus::MaxIterations;
  return res;
}

}  // namespace dgcrf
