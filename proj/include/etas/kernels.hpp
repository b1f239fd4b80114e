#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "etas/background.hpp"
#include "etas/branching.hpp"
#include "etas/catalog.hpp"

namespace etas {

/// Triggering parameters in the normalized parameterisation: K_bar is the
/// expected number of direct offspring of an event at the magnitude of
/// completeness, and the temporal and spatial kernels are probability
/// densities.
struct EtasParams {
  double mu_bar = 1.0;   // background events per day
  double K_bar = 0.0;
  double alpha = 1.0;    // productivity exponent
  double c = 0.01;       // Omori offset, days
  double p = 1.1;        // Omori decay exponent
  double d = 0.01;       // spatial offset, squared distance units
  double q = 1.5;        // spatial decay exponent
  double beta_gr = std::numbers::ln10;  // Gutenberg-Richter rate

  friend bool operator==(const EtasParams&, const EtasParams&) = default;
};

/// Mean number of direct offspring per event, K_bar * beta / (beta - alpha).
/// Infinite when alpha >= beta.
[[nodiscard]] double branching_ratio(const EtasParams& params) noexcept;
/// alpha < beta and branching_ratio < 1.
[[nodiscard]] bool is_subcritical(const EtasParams& params) noexcept;

/// (p-1) c^{p-1} (z+c)^{-p}; integrates to 1 over [0, inf).
[[nodiscard]] double omori_density(double z, double c, double p);
[[nodiscard]] double log_omori_density(double z, double c, double p);
/// Integral of the Omori density over [0, z]: 1 - (c/(z+c))^{p-1}.
[[nodiscard]] double omori_mass(double z, double c, double p);

/// K_s (dx^2 + dy^2 + d)^{-q} with K_s = (q-1) d^{q-1} / pi; integrates to 1
/// over the plane.
[[nodiscard]] double spatial_density(double dx, double dy, double d, double q);
[[nodiscard]] double log_spatial_density(double r2, double d, double q);

/// exp(alpha (m - M0)).
[[nodiscard]] double productivity(double m, double alpha, double M0);

struct IntensityBreakdown {
  double background = 0.0;
  std::vector<double> triggered;  // one entry per event strictly before t
  double total = 0.0;
};

/// Conditional intensity at (t, x, y) given all events of `history` before t.
[[nodiscard]] IntensityBreakdown conditional_intensity(const Catalog& history, double t, double x,
                                                       double y, const EtasParams& params,
                                                       const BackgroundDensity& phi);

/// Count of intensities that underflowed and were floored before the log.
struct LikelihoodDiagnostics {
  std::size_t floored_terms = 0;
};

/// Finite-time, infinite-space log-likelihood on [t_start, t_end]:
///   sum_i log lambda(t_i) - mu_bar (t_end - t_start)
///     - K_bar sum_i e^{alpha(m_i-M0)} (1 - c^{p-1}/(t_end - t_i + c)^{p-1}).
/// Returns -inf when some event has exactly zero intensity (zero background
/// density and no possible trigger).
[[nodiscard]] double log_likelihood(const Catalog& catalog, const EtasParams& params,
                                    const BackgroundDensity& phi,
                                    LikelihoodDiagnostics* diagnostics = nullptr);
/// Same, with the background density already evaluated at every event.
[[nodiscard]] double log_likelihood(const Catalog& catalog, const EtasParams& params,
                                    std::span<const double> phi_at_events,
                                    LikelihoodDiagnostics* diagnostics = nullptr);

/// Complete-data log-likelihood given the branching structure.
[[nodiscard]] double branched_log_likelihood(const Catalog& catalog, const EtasParams& params,
                                             const BackgroundDensity& phi,
                                             const BranchingVector& branching);
[[nodiscard]] double branched_log_likelihood(const Catalog& catalog, const EtasParams& params,
                                             std::span<const double> phi_at_events,
                                             const BranchingVector& branching);

[[nodiscard]] std::vector<double> density_at_events(const BackgroundDensity& phi,
                                                    std::span<const Event> events);

}  // namespace etas
