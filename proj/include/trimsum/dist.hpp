#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trimsum/quadrature.hpp"

namespace trimsum::dist {

enum class Which { cdf, pdf, quantile };

struct Support {
  double lower;
  double upper;
};

/// Serializable description of a model: an id plus named parameters.
struct ModelSpec {
  std::string id;
  std::map<std::string, double> params;

  bool operator==(const ModelSpec&) const = default;
};

/// Implementation interface for one family. Quantiles take the lower-tail
/// probability; upper_quantile(v) evaluates F^{-1}(1-v) without forming 1-v.
class Family {
 public:
  virtual ~Family() = default;
  virtual double cdf(double x) const = 0;
  virtual double pdf(double x) const = 0;
  virtual double quantile(double u) const = 0;
  virtual double upper_quantile(double v) const { return quantile(1.0 - v); }
  /// True when F^{-1} is differentiable with positive density on [lo, hi].
  virtual bool smooth_on(double lo, double hi) const = 0;
};

/// Analytic cdf/pdf/quantile triple. Values are immutable and cheap to copy.
class DistributionModel {
 public:
  static DistributionModel uniform(double lower = 0.0, double upper = 1.0);
  static DistributionModel cauchy(double location = 0.0, double scale = 1.0);
  static DistributionModel normal(double mean = 0.0, double sd = 1.0);
  /// Density (gamma/2)(1+|x|)^{-(1+gamma)}, glued continuously at zero.
  static DistributionModel two_sided_lomax(double gamma);
  static DistributionModel two_sided_lomax(double gamma_left,
                                           double gamma_right);
  /// F(x) = (1/2)(ln|x|)^{-rho} for x <= -x0, mirrored on the right; only the
  /// tails |x| >= x0 are defined.
  static DistributionModel log_pareto(double rho, double x0);

  /// Throws configuration error on unknown ids or bad parameters.
  static DistributionModel from_spec(const ModelSpec& spec);

  const std::string& id() const noexcept { return spec_.id; }
  const ModelSpec& spec() const noexcept { return spec_; }
  std::optional<double> tail_index() const noexcept { return tail_index_; }
  bool symmetric() const noexcept { return symmetric_; }
  Support support() const noexcept { return support_; }

  /// Checked evaluation: quantile requires 0 < x < 1.
  double eval(Which which, double x) const;

  double cdf(double x) const { return family_->cdf(x); }
  double pdf(double x) const { return family_->pdf(x); }
  double quantile(double u) const;
  double upper_quantile(double v) const;
  bool smooth_on(double lo, double hi) const {
    return family_->smooth_on(lo, hi);
  }

  const Family& family() const noexcept { return *family_; }

 private:
  DistributionModel(ModelSpec spec, std::shared_ptr<const Family> family,
                    std::optional<double> tail_index, bool symmetric,
                    Support support);

  ModelSpec spec_;
  std::shared_ptr<const Family> family_;
  std::optional<double> tail_index_;
  bool symmetric_;
  Support support_;
};

/// Population truncated and Winsorized functionals at (u, 1-v).
struct TruncatedFunctionals {
  double trunc_mean = 0.0;    // mu(u, 1-v)
  double trunc_var = 0.0;     // sigma^2(u, 1-v), equal to winsor_var
  double winsor_mean = 0.0;   // mu_W
  double winsor_var = 0.0;    // sigma^2_W
  double winsor_third = 0.0;  // gamma_{3,W}
  double xi_lower = 0.0;      // xi_u
  double xi_upper = 0.0;      // xi_{1-v}
};

double model_eval(const DistributionModel& model, Which which, double x);

/// n draws by inverse-cdf transform of a Philox stream keyed by seed,
/// returned in draw order.
std::vector<double> sample_iid(const DistributionModel& model, std::size_t n,
                               std::uint64_t seed);

/// mu(u,1-v) = integral of F^{-1} over [u, 1-v].
double truncated_mean(const DistributionModel& model, double u, double v,
                      const QuadratureOptions& options = {});

TruncatedFunctionals winsorized_moments(const DistributionModel& model,
                                        double u, double v,
                                        const QuadratureOptions& options = {});

/// E|W|^p (absolute) or E W^p of the Winsorized variable (uncentered).
double winsorized_raw_moment(const DistributionModel& model, double u,
                             double v, int power, bool absolute,
                             const QuadratureOptions& options = {});

/// sigma^2(u,1-v) from the double-integral form, using central differences
/// of the quantile for dF^{-1}. Independent of winsorized_moments.
double truncated_variance_double(const DistributionModel& model, double u,
                                 double v);

}  // namespace trimsum::dist
