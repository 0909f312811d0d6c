#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace regflood {

class Rng;

/// Below this |shape| the Generalized Pareto law is evaluated in its
/// Exponential limit form. Shared by the kappa limit forms.
inline constexpr double kShapeSwitch = 1e-8;

/// Generalized Pareto parameters, shape sign convention
/// F(x) = 1 - (1 + shape (x - location) / scale)^(-1/shape).
struct GpParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  friend bool operator==(const GpParams&, const GpParams&) = default;
};

/// Throws InputError unless scale > 0 and every field is finite.
void validate(const GpParams& params);

/// Upper end of the support (+inf when shape >= 0).
double gp_upper_endpoint(const GpParams& params);

double gp_cdf(const GpParams& params, double x);
double gp_quantile(const GpParams& params, double p);

/// Log-density; -inf off the support and for invalid parameters. Never throws,
/// so samplers can reject any proposal uniformly.
double gp_logpdf(const GpParams& params, double x) noexcept;

/// Inverse-CDF sample of size n from a generator seeded with `seed`.
std::vector<double> gp_sample(const GpParams& params, std::size_t n,
                              std::uint64_t seed);
/// One inverse-CDF draw from an existing generator.
double gp_draw(const GpParams& params, Rng& rng);

/// Distribution of c X when X ~ GP(params): GP(c location, c scale, shape).
GpParams gp_rescale(const GpParams& params, double c);

/// Four-parameter kappa law (Hosking 1994 parameterization).
struct KappaParams {
  double location = 0.0;
  double scale = 1.0;
  double k = 0.0;
  double h = 0.0;
};

/// Throws InputError outside the region where the first four L-moments
/// exist: scale > 0, k > -1 and, when h < 0, h k > -1.
void validate(const KappaParams& params);

double kappa_quantile(const KappaParams& params, double p);
double kappa_draw(const KappaParams& params, Rng& rng);

}  // namespace regflood
