#include "trimsum/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "trimsum/error.hpp"

namespace trimsum {
namespace {

class Simpson {
 public:
  Simpson(const std::function<double(double)>& f, const QuadratureOptions& o)
      : f_(f), options_(o) {}

  double eval(double x) {
    ++evaluations_;
    const double y = f_(x);
    if (!std::isfinite(y)) {
      std::ostringstream msg;
      msg << "integrand is not finite at x=" << x;
      throw NumericalError(msg.str(), std::numeric_limits<double>::infinity());
    }
    return y;
  }

  double refine(double a, double fa, double m, double fm, double b, double fb,
                double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    const bool exhausted = depth <= 0 || evaluations_ > options_.max_evaluations;
    if (std::abs(delta) <= 15.0 * tol || exhausted || !(lm > a && rm < b)) {
      if (std::abs(delta) > 15.0 * tol) converged_ = false;
      error_ += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return refine(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           refine(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
  }

  std::size_t evaluations() const { return evaluations_; }
  double error() const { return error_; }
  bool converged() const { return converged_; }

 private:
  const std::function<double(double)>& f_;
  const QuadratureOptions& options_;
  std::size_t evaluations_ = 0;
  double error_ = 0.0;
  bool converged_ = true;
};

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f,
                                  double a, double b,
                                  const QuadratureOptions& options) {
  QuadratureResult result;
  if (a == b) return result;
  const int panels = std::max(1, options.initial_panels);
  Simpson simpson(f, options);

  struct Panel {
    double a, m, b, fa, fm, fb, whole;
  };
  std::vector<Panel> grid;
  grid.reserve(static_cast<std::size_t>(panels));
  const double width = (b - a) / panels;
  double abs_estimate = 0.0;
  double fa = simpson.eval(a);
  for (int i = 0; i < panels; ++i) {
    const double pa = a + width * i;
    const double pb = (i + 1 == panels) ? b : a + width * (i + 1);
    const double pm = 0.5 * (pa + pb);
    const double fm = simpson.eval(pm);
    const double fb = simpson.eval(pb);
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    abs_estimate +=
        std::abs(pb - pa) / 6.0 * (std::abs(fa) + 4.0 * std::abs(fm) + std::abs(fb));
    grid.push_back({pa, pm, pb, fa, fm, fb, whole});
    fa = fb;
  }

  const double tol = std::max(options.abs_tol, options.rel_tol * abs_estimate);
  double total = 0.0;
  for (const auto& p : grid) {
    const double share = tol * std::abs((p.b - p.a) / (b - a));
    total += simpson.refine(p.a, p.fa, p.m, p.fm, p.b, p.fb, p.whole, share,
                            options.max_depth);
  }
  result.value = total;
  result.error_estimate = simpson.error();
  result.evaluations = simpson.evaluations();
  result.converged = simpson.converged();
  return result;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options) {
  const auto result = adaptive_simpson(f, a, b, options);
  if (!result.converged) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge on [" << a << ", " << b
        << "], error estimate " << result.error_estimate;
    throw NumericalError(msg.str(), result.error_estimate);
  }
  return result.value;
}

}  // namespace trimsum
