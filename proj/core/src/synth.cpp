#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>

#include "regflood/error.hpp"
#include "regflood/eval.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr std::uint64_t kMinGapDays = 12;

constexpr std::array<double, 14> kAreas{104.0, 61.0,  62.3,  193.0, 114.0, 85.0,  32.0,
                                        54.5,  336.0, 219.0, 792.0, 48.0,  319.0, 36.0};

double gp_lcv(const GpParams& p) {
  const double l1 = p.location + p.scale / (1.0 - p.shape);
  const double l2 = p.scale / ((1.0 - p.shape) * (2.0 - p.shape));
  return l2 / l1;
}

// Growth curve with L-CV `t` sharing the location and shape of `base`,
// rescaled so its median is 1.
GpParams with_lcv(const GpParams& base, double t) {
  const double xi = base.shape;
  const double denom = 1.0 - t * (2.0 - xi);
  if (!(denom > 0.0)) throw InputError("synthetic region: L-CV too large for the growth shape");
  GpParams g = base;
  g.scale = t * base.location * (1.0 - xi) * (2.0 - xi) / denom;
  return gp_rescale(g, 1.0 / gp_quantile(g, 0.5));
}

}  // namespace

std::span<const double> default_areas() { return kAreas; }

SyntheticRegion synth_region(const SynthSpec& spec) {
  if (spec.sites < 2) throw InputError("synthetic region needs at least 2 sites");
  if (spec.years < 1) throw InputError("synthetic record length must be at least 1 year");
  if (!(spec.rate > 0.0)) throw InputError("synthetic event rate must be positive");
  if (spec.target < 0 || spec.target >= spec.sites) {
    throw InputError("synthetic target index out of range");
  }
  if (!spec.site_years.empty() && spec.site_years.size() != static_cast<std::size_t>(spec.sites)) {
    throw InputError("site_years needs one entry per site");
  }
  std::vector<double> areas = spec.areas;
  if (areas.empty()) {
    for (int i = 0; i < spec.sites; ++i) areas.push_back(kAreas[i % kAreas.size()]);
  }
  if (areas.size() != static_cast<std::size_t>(spec.sites)) {
    throw InputError("synthetic region needs one area per site");
  }
  validate(spec.growth);

  int longest = spec.years;
  for (int y : spec.site_years) longest = std::max(longest, y);
  const int last_year = spec.start_year + longest - 1;
  const double t_r = gp_lcv(spec.growth);

  Rng rng(spec.seed);
  SyntheticRegion out;
  for (int i = 0; i < spec.sites; ++i) {
    const int years = spec.site_years.empty() ? spec.years : spec.site_years[i];
    if (years < 1) throw InputError("synthetic record length must be at least 1 year");
    const int first_year = last_year - years + 1;

    GpParams growth = spec.growth;
    if (spec.lcv_dispersion > 1.0) {
      const double f = static_cast<double>(i) / (spec.sites - 1) - 0.5;
      growth = with_lcv(spec.growth, t_r * std::pow(spec.lcv_dispersion, f));
    }
    const double c = spec.a * std::pow(areas[i], spec.b) * std::exp(rng.normal(0.0, spec.log_sd));

    char code[16];
    std::snprintf(code, sizeof code, "S%02d", i + 1);
    SiteTruth truth{code, c, gp_rescale(growth, c), spec.rate};

    Site site;
    site.meta.code = code;
    site.meta.name = "Synthetic site " + std::to_string(i + 1);
    site.meta.area_km2 = areas[i];
    site.meta.record_start = first_year;
    site.meta.record_end = last_year;

    PotSeries& pot = site.pot;
    pot.code = code;
    pot.threshold = truth.params.location;
    pot.record_years = years;
    pot.record_start = start_of_year(first_year);
    pot.record_end = start_of_year(last_year + 1) - 1;
    // Events at least kMinGapDays apart: draw n distinct slots from the
    // shortened range and re-expand by the gap.
    const auto days = static_cast<std::uint64_t>(
        (start_of_year(last_year + 1) - pot.record_start) / static_cast<Timestamp>(kSecondsPerDay));
    std::uint64_t n = spec.poisson_counts
                          ? rng.poisson(spec.rate * years)
                          : static_cast<std::uint64_t>(std::llround(spec.rate * years));
    while (n > 0 && (n - 1) * (kMinGapDays - 1) + n > days) --n;
    const std::uint64_t slots = days - (n > 0 ? (n - 1) * (kMinGapDays - 1) : 0);
    std::set<std::uint64_t> chosen;
    while (chosen.size() < n) chosen.insert(rng.index(slots));
    std::uint64_t rank = 0;
    for (std::uint64_t slot : chosen) {
      const std::uint64_t day = slot + rank++ * (kMinGapDays - 1);
      pot.times.push_back(pot.record_start + static_cast<Timestamp>(day) * 86400);
      pot.peaks.push_back(gp_quantile(truth.params, rng.uniform_open()));
    }
    out.truth.push_back(truth);
    out.region.sites.push_back(std::move(site));
  }
  out.region.target = out.region.sites[static_cast<std::size_t>(spec.target)].meta.code;
  return out;
}

}  // namespace regflood
