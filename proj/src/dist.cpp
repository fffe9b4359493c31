#include "trimsum/dist.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "trimsum/error.hpp"
#include "trimsum/normal.hpp"
#include "trimsum/rng.hpp"

namespace trimsum::dist {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Uniform final : public Family {
 public:
  Uniform(double lower, double upper) : lower_(lower), upper_(upper) {}
  double cdf(double x) const override {
    if (x <= lower_) return 0.0;
    if (x >= upper_) return 1.0;
    return (x - lower_) / (upper_ - lower_);
  }
  double pdf(double x) const override {
    return (x >= lower_ && x <= upper_) ? 1.0 / (upper_ - lower_) : 0.0;
  }
  double quantile(double u) const override {
    return lower_ + (upper_ - lower_) * u;
  }
  double upper_quantile(double v) const override {
    return upper_ - (upper_ - lower_) * v;
  }
  bool smooth_on(double, double) const override { return true; }

 private:
  double lower_, upper_;
};

class Cauchy final : public Family {
 public:
  Cauchy(double location, double scale) : location_(location), scale_(scale) {}
  double cdf(double x) const override {
    const double z = (x - location_) / scale_;
    if (z < 0.0) return std::atan(-1.0 / z) / std::numbers::pi;
    return 0.5 + std::atan(z) / std::numbers::pi;
  }
  double pdf(double x) const override {
    const double z = (x - location_) / scale_;
    return 1.0 / (std::numbers::pi * scale_ * (1.0 + z * z));
  }
  double quantile(double u) const override {
    if (u > 0.5) return upper_quantile(1.0 - u);
    if (u == 0.5) return location_;
    return location_ - scale_ / std::tan(std::numbers::pi * u);
  }
  double upper_quantile(double v) const override {
    if (v > 0.5) return quantile(1.0 - v);
    if (v == 0.5) return location_;
    return location_ + scale_ / std::tan(std::numbers::pi * v);
  }
  bool smooth_on(double, double) const override { return true; }

 private:
  double location_, scale_;
};

class Normal final : public Family {
 public:
  Normal(double mean, double sd) : mean_(mean), sd_(sd) {}
  double cdf(double x) const override { return normal_cdf((x - mean_) / sd_); }
  double pdf(double x) const override {
    return normal_pdf((x - mean_) / sd_) / sd_;
  }
  double quantile(double u) const override {
    return mean_ + sd_ * normal_quantile(u);
  }
  double upper_quantile(double v) const override {
    return mean_ - sd_ * normal_quantile(v);
  }
  bool smooth_on(double, double) const override { return true; }

 private:
  double mean_, sd_;
};

class TwoSidedLomax final : public Family {
 public:
  TwoSidedLomax(double gamma_left, double gamma_right)
      : left_(gamma_left), right_(gamma_right) {}
  double cdf(double x) const override {
    if (x <= 0.0) return 0.5 * std::pow(1.0 - x, -left_);
    return 1.0 - 0.5 * std::pow(1.0 + x, -right_);
  }
  double pdf(double x) const override {
    if (x < 0.0) return 0.5 * left_ * std::pow(1.0 - x, -left_ - 1.0);
    if (x > 0.0) return 0.5 * right_ * std::pow(1.0 + x, -right_ - 1.0);
    return 0.25 * (left_ + right_);
  }
  double quantile(double u) const override {
    if (u > 0.5) return upper_quantile(1.0 - u);
    return 1.0 - std::pow(2.0 * u, -1.0 / left_);
  }
  double upper_quantile(double v) const override {
    if (v > 0.5) return quantile(1.0 - v);
    return std::pow(2.0 * v, -1.0 / right_) - 1.0;
  }
  bool smooth_on(double lo, double hi) const override {
    return left_ == right_ || !(lo < 0.5 && hi > 0.5);
  }

 private:
  double left_, right_;
};

class LogPareto final : public Family {
 public:
  LogPareto(double rho, double x0)
      : rho_(rho), x0_(x0), tail_mass_(0.5 * std::pow(std::log(x0), -rho)) {}
  double cdf(double x) const override {
    check_x(x);
    if (x < 0.0) return 0.5 * std::pow(std::log(-x), -rho_);
    return 1.0 - 0.5 * std::pow(std::log(x), -rho_);
  }
  double pdf(double x) const override {
    check_x(x);
    const double ax = std::abs(x);
    return 0.5 * rho_ * std::pow(std::log(ax), -rho_ - 1.0) / ax;
  }
  double quantile(double u) const override {
    if (u > 0.5) return upper_quantile(1.0 - u);
    check_u(u);
    return -std::exp(std::pow(2.0 * u, -1.0 / rho_));
  }
  double upper_quantile(double v) const override {
    if (v > 0.5) return quantile(1.0 - v);
    check_u(v);
    return std::exp(std::pow(2.0 * v, -1.0 / rho_));
  }
  bool smooth_on(double lo, double hi) const override {
    return hi <= tail_mass_ || lo >= 1.0 - tail_mass_;
  }

 private:
  void check_x(double x) const {
    if (std::abs(x) < x0_) {
      std::ostringstream msg;
      msg << "log_pareto is defined only for |x| >= x0 = " << x0_ << ", got "
          << x;
      fail(ErrorKind::unsupported_region, msg.str());
    }
  }
  void check_u(double u) const {
    if (u > tail_mass_) {
      std::ostringstream msg;
      msg << "log_pareto quantile defined only for tail probabilities <= "
          << tail_mass_ << ", got " << u;
      fail(ErrorKind::unsupported_region, msg.str());
    }
  }

  double rho_, x0_, tail_mass_;
};

double param(const ModelSpec& spec, const std::string& name,
             std::optional<double> fallback = std::nullopt) {
  const auto it = spec.params.find(name);
  if (it != spec.params.end()) return it->second;
  if (fallback) return *fallback;
  fail(ErrorKind::configuration,
       "model '" + spec.id + "' requires parameter '" + name + "'");
}

void check_keys(const ModelSpec& spec, std::set<std::string> allowed) {
  for (const auto& [key, value] : spec.params) {
    if (!allowed.contains(key))
      fail(ErrorKind::configuration,
           "model '" + spec.id + "' has unknown parameter '" + key + "'");
    if (!std::isfinite(value))
      fail(ErrorKind::configuration,
           "model parameter '" + key + "' is not finite");
  }
}

void check_positive(double value, const std::string& name) {
  if (!(value > 0.0))
    fail(ErrorKind::configuration, "parameter '" + name + "' must be positive");
}

double checked_quantile(const DistributionModel& model, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream msg;
    msg << "quantile probability must lie in (0,1), got " << u;
    fail(ErrorKind::domain, msg.str());
  }
  return model.quantile(u);
}

// Quantile at s evaluated from whichever tail keeps s exact.
double quantile_at(const DistributionModel& model, double s) {
  return s <= 0.5 ? model.quantile(s) : model.upper_quantile(1.0 - s);
}

void check_window(double u, double v) {
  if (!(u > 0.0 && v > 0.0 && u + v < 1.0)) {
    std::ostringstream msg;
    msg << "Winsorizing window requires 0 < u < 1-v < 1, got u=" << u
        << ", v=" << v;
    fail(ErrorKind::domain, msg.str());
  }
}

}  // namespace

DistributionModel::DistributionModel(ModelSpec spec,
                                     std::shared_ptr<const Family> family,
                                     std::optional<double> tail_index,
                                     bool symmetric, Support support)
    : spec_(std::move(spec)),
      family_(std::move(family)),
      tail_index_(tail_index),
      symmetric_(symmetric),
      support_(support) {}

DistributionModel DistributionModel::uniform(double lower, double upper) {
  if (!(upper > lower))
    fail(ErrorKind::configuration, "uniform requires lower < upper");
  return {{"uniform", {{"lower", lower}, {"upper", upper}}},
          std::make_shared<Uniform>(lower, upper),
          std::nullopt,
          true,
          {lower, upper}};
}

DistributionModel DistributionModel::cauchy(double location, double scale) {
  check_positive(scale, "scale");
  return {{"cauchy", {{"location", location}, {"scale", scale}}},
          std::make_shared<Cauchy>(location, scale),
          1.0,
          location == 0.0,
          {-kInf, kInf}};
}

DistributionModel DistributionModel::normal(double mean, double sd) {
  check_positive(sd, "sd");
  return {{"normal", {{"mean", mean}, {"sd", sd}}},
          std::make_shared<Normal>(mean, sd),
          std::nullopt,
          mean == 0.0,
          {-kInf, kInf}};
}

DistributionModel DistributionModel::two_sided_lomax(double gamma) {
  return two_sided_lomax(gamma, gamma);
}

DistributionModel DistributionModel::two_sided_lomax(double gamma_left,
                                                     double gamma_right) {
  check_positive(gamma_left, "gamma_left");
  check_positive(gamma_right, "gamma_right");
  ModelSpec spec{"two_sided_lomax", {}};
  if (gamma_left == gamma_right) {
    spec.params["gamma"] = gamma_left;
  } else {
    spec.params["gamma_left"] = gamma_left;
    spec.params["gamma_right"] = gamma_right;
  }
  return {std::move(spec),
          std::make_shared<TwoSidedLomax>(gamma_left, gamma_right),
          std::min(gamma_left, gamma_right),
          gamma_left == gamma_right,
          {-kInf, kInf}};
}

DistributionModel DistributionModel::log_pareto(double rho, double x0) {
  check_positive(rho, "rho");
  if (!(x0 > std::numbers::e))
    fail(ErrorKind::configuration, "log_pareto requires x0 > e");
  // Regular variation index of the density is -1, i.e. gamma = 0: no
  // positive tail index exists.
  return {{"log_pareto", {{"rho", rho}, {"x0", x0}}},
          std::make_shared<LogPareto>(rho, x0),
          std::nullopt,
          true,
          {-kInf, kInf}};
}

DistributionModel DistributionModel::from_spec(const ModelSpec& spec) {
  if (spec.id == "uniform") {
    check_keys(spec, {"lower", "upper"});
    return uniform(param(spec, "lower", 0.0), param(spec, "upper", 1.0));
  }
  if (spec.id == "cauchy") {
    check_keys(spec, {"location", "scale"});
    return cauchy(param(spec, "location", 0.0), param(spec, "scale", 1.0));
  }
  if (spec.id == "normal") {
    check_keys(spec, {"mean", "sd"});
    return normal(param(spec, "mean", 0.0), param(spec, "sd", 1.0));
  }
  if (spec.id == "two_sided_lomax") {
    check_keys(spec, {"gamma", "gamma_left", "gamma_right"});
    if (spec.params.contains("gamma")) {
      if (spec.params.contains("gamma_left") ||
          spec.params.contains("gamma_right"))
        fail(ErrorKind::configuration,
             "two_sided_lomax takes either 'gamma' or 'gamma_left'/'gamma_right'");
      return two_sided_lomax(param(spec, "gamma"));
    }
    return two_sided_lomax(param(spec, "gamma_left"),
                           param(spec, "gamma_right"));
  }
  if (spec.id == "log_pareto") {
    check_keys(spec, {"rho", "x0"});
    return log_pareto(param(spec, "rho"), param(spec, "x0"));
  }
  fail(ErrorKind::configuration, "unknown model id '" + spec.id + "'");
}

double DistributionModel::quantile(double u) const {
  return family_->quantile(u);
}

double DistributionModel::upper_quantile(double v) const {
  return family_->upper_quantile(v);
}

double DistributionModel::eval(Which which, double x) const {
  switch (which) {
    case Which::cdf: return family_->cdf(x);
    case Which::pdf: return family_->pdf(x);
    case Which::quantile: return checked_quantile(*this, x);
  }
  fail(ErrorKind::configuration, "unknown evaluation kind");
}

double model_eval(const DistributionModel& model, Which which, double x) {
  return model.eval(which, x);
}

std::vector<double> sample_iid(const DistributionModel& model, std::size_t n,
                               std::uint64_t seed) {
  require(n >= 1, ErrorKind::precondition, "sample_iid requires n >= 1");
  UniformStream stream(seed, 0);
  std::vector<double> out(n);
  for (auto& x : out) x = model.quantile(stream.next());
  return out;
}

double truncated_mean(const DistributionModel& model, double u, double v,
                      const QuadratureOptions& options) {
  if (!(u >= 0.0 && v >= 0.0 && u + v < 1.0)) {
    std::ostringstream msg;
    msg << "truncated_mean requires 0 <= u < 1-v <= 1, got u=" << u
        << ", v=" << v;
    fail(ErrorKind::domain, msg.str());
  }
  return integrate([&](double s) { return quantile_at(model, s); }, u, 1.0 - v,
                   options);
}

TruncatedFunctionals winsorized_moments(const DistributionModel& model,
                                        double u, double v,
                                        const QuadratureOptions& options) {
  check_window(u, v);
  TruncatedFunctionals out;
  out.xi_lower = model.quantile(u);
  out.xi_upper = model.upper_quantile(v);
  if (!(out.xi_lower < out.xi_upper)) {
    std::ostringstream msg;
    msg << "degenerate Winsorizing window: xi_u = xi_{1-v} = " << out.xi_lower;
    fail(ErrorKind::degenerate_scale, msg.str());
  }
  const double lo = u;
  const double hi = 1.0 - v;
  out.trunc_mean = truncated_mean(model, u, v, options);
  out.winsor_mean = u * out.xi_lower + out.trunc_mean + v * out.xi_upper;
  const double mu = out.winsor_mean;
  const double dl = out.xi_lower - mu;
  const double du = out.xi_upper - mu;
  const double central2 = integrate(
      [&](double s) {
        const double d = quantile_at(model, s) - mu;
        return d * d;
      },
      lo, hi, options);
  const double central3 = integrate(
      [&](double s) {
        const double d = quantile_at(model, s) - mu;
        return d * d * d;
      },
      lo, hi, options);
  out.winsor_var = u * dl * dl + central2 + v * du * du;
  out.winsor_third = u * dl * dl * dl + central3 + v * du * du * du;
  out.trunc_var = out.winsor_var;
  return out;
}

double winsorized_raw_moment(const DistributionModel& model, double u,
                             double v, int power, bool absolute,
                             const QuadratureOptions& options) {
  check_window(u, v);
  const auto lift = [&](double x) {
    const double base = absolute ? std::abs(x) : x;
    return std::pow(base, power);
  };
  const double xl = model.quantile(u);
  const double xu = model.upper_quantile(v);
  const double middle = integrate(
      [&](double s) { return lift(quantile_at(model, s)); }, u, 1.0 - v,
      options);
  return u * lift(xl) + middle + v * lift(xu);
}

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

struct GlGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GlGrid composite_gl(double a, double b, int panels) {
  GlGrid grid;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + width * (p + 0.5);
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
      grid.nodes.push_back(mid + 0.5 * width * kGlNodes[i]);
      grid.weights.push_back(0.5 * width * kGlWeights[i]);
    }
  }
  return grid;
}

// (F^{-1})'(s) by central differences with one Richardson step. The step
// stays well inside the distance to the nearest kink or endpoint.
double quantile_slope(const DistributionModel& model, double s, double kink) {
  double room = std::min(s, 1.0 - s);
  if (std::abs(s - kink) > 0.0) room = std::min(room, std::abs(s - kink));
  const double h = 1e-3 * room;
  const auto central = [&](double step) {
    return (quantile_at(model, s + step) - quantile_at(model, s - step)) /
           (2.0 * step);
  };
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

// Composite grid on [a, b], split at c when c is interior.
GlGrid split_gl(double a, double b, double c, int panels) {
  if (!(c > a && c < b)) return composite_gl(a, b, panels);
  auto left = composite_gl(a, c, panels);
  const auto right = composite_gl(c, b, panels);
  left.nodes.insert(left.nodes.end(), right.nodes.begin(), right.nodes.end());
  left.weights.insert(left.weights.end(), right.weights.begin(), right.weights.end());
  return left;
}

}  // namespace

double truncated_variance_double(const DistributionModel& model, double u,
                                 double v) {
  if (!(u >= 0.0 && v >= 0.0 && u + v < 1.0)) {
    std::ostringstream msg;
    msg << "truncated_variance_double requires 0 <= u < 1-v <= 1, got u=" << u
        << ", v=" << v;
    fail(ErrorKind::domain, msg.str());
  }
  const double lo = u;
  const double hi = 1.0 - v;
  if (!model.smooth_on(lo, hi))
    fail(ErrorKind::unsupported_region,
         "quantile function is not differentiable on the requested window");

  // With s <= t the kernel s^t - st is s(1-t), so the triangle s <= t is
  // integrated row by row. Glued families may have a kink in the quantile
  // slope at F(0); both directions split there.
  double kink = -1.0;
  try {
    kink = model.cdf(0.0);
  } catch (const Error&) {
  }
  const auto evaluate = [&](int panels) {
    const auto outer = split_gl(lo, hi, kink, panels);
    double total = 0.0;
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
      const double t = outer.nodes[i];
      const auto inner = split_gl(lo, t, kink, panels);
      double row = 0.0;
      for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
        const double s = inner.nodes[j];
        row += inner.weights[j] * s * quantile_slope(model, s, kink);
      }
      total += outer.weights[i] * (1.0 - t) * quantile_slope(model, t, kink) * row;
    }
    return 2.0 * total;
  };

  double previous = evaluate(2);
  for (int panels = 4; panels <= 128; panels *= 2) {
    const double current = evaluate(panels);
    const double change = std::abs(current - previous);
    if (change <= 1e-9 * std::abs(current)) return current;
    previous = current;
  }
  throw NumericalError("double-integral variance did not converge",
                       std::abs(previous));
}

}  // namespace trimsum::dist
