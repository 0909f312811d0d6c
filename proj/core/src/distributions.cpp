#include "regflood/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "regflood/error.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool small_shape(double shape) { return std::abs(shape) < kShapeSwitch; }

}  // namespace

void validate(const GpParams& params) {
  if (!std::isfinite(params.location) || !std::isfinite(params.scale) ||
      !std::isfinite(params.shape)) {
    throw InputError("GP parameters must be finite");
  }
  if (!(params.scale > 0.0)) {
    throw InputError("GP scale must be positive, got " +
                     std::to_string(params.scale));
  }
}

double gp_upper_endpoint(const GpParams& params) {
  if (params.shape >= 0.0 || small_shape(params.shape)) {
    return std::numeric_limits<double>::infinity();
  }
  return params.location - params.scale / params.shape;
}

double gp_cdf(const GpParams& params, double x) {
  validate(params);
  if (!std::isfinite(x)) throw InputError("gp_cdf: x must be finite");
  const double z = (x - params.location) / params.scale;
  if (z <= 0.0) return 0.0;
  if (small_shape(params.shape)) return -std::expm1(-z);
  const double u = params.shape * z;
  if (u <= -1.0) return 1.0;
  return -std::expm1(-std::log1p(u) / params.shape);
}

double gp_quantile(const GpParams& params, double p) {
  validate(params);
  if (!(p >= 0.0 && p < 1.0)) {
    throw InputError("gp_quantile: probability must lie in [0, 1), got " +
                     std::to_string(p));
  }
  const double a = -std::log1p(-p);
  if (small_shape(params.shape)) return params.location + params.scale * a;
  return params.location +
         params.scale * std::expm1(params.shape * a) / params.shape;
}

double gp_logpdf(const GpParams& params, double x) noexcept {
  if (!(params.scale > 0.0) || !std::isfinite(params.location) ||
      !std::isfinite(params.shape) || !std::isfinite(params.scale) ||
      !std::isfinite(x)) {
    return kNegInf;
  }
  const double z = (x - params.location) / params.scale;
  if (z < 0.0) return kNegInf;
  const double log_scale = std::log(params.scale);
  if (small_shape(params.shape)) return -log_scale - z;
  const double u = params.shape * z;
  if (u <= -1.0) return kNegInf;
  return -log_scale - (1.0 / params.shape + 1.0) * std::log1p(u);
}

double gp_draw(const GpParams& params, Rng& rng) {
  return gp_quantile(params, rng.uniform());
}

std::vector<double> gp_sample(const GpParams& params, std::size_t n,
                              std::uint64_t seed) {
  validate(params);
  if (n == 0) throw InputError("gp_sample: n must be at least 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = gp_draw(params, rng);
  return out;
}

GpParams gp_rescale(const GpParams& params, double c) {
  validate(params);
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InputError("gp_rescale: factor must be positive and finite");
  }
  return {c * params.location, c * params.scale, params.shape};
}

void validate(const KappaParams& params) {
  if (!std::isfinite(params.location) || !std::isfinite(params.scale) ||
      !std::isfinite(params.k) || !std::isfinite(params.h)) {
    throw InputError("kappa parameters must be finite");
  }
  if (!(params.scale > 0.0)) throw InputError("kappa scale must be positive");
  if (!(params.k > -1.0)) throw InputError("kappa k must exceed -1");
  if (params.h < 0.0 && !(params.h * params.k > -1.0)) {
    throw InputError("kappa requires h k > -1 when h < 0");
  }
}

double kappa_quantile(const KappaParams& params, double p) {
  validate(params);
  if (!(p > 0.0 && p < 1.0)) {
    throw InputError("kappa_quantile: probability must lie in (0, 1)");
  }
  // y = (1 - p^h) / h, with the h -> 0 limit -log p.
  const double y = small_shape(params.h)
                       ? -std::log(p)
                       : -std::expm1(params.h * std::log(p)) / params.h;
  if (small_shape(params.k)) return params.location - params.scale * std::log(y);
  return params.location -
         params.scale * std::expm1(params.k * std::log(y)) / params.k;
}

double kappa_draw(const KappaParams& params, Rng& rng) {
  return kappa_quantile(params, rng.uniform_open());
}

}  // namespace regflood
