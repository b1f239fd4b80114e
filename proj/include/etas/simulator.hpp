#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "etas/background.hpp"
#include "etas/branching.hpp"
#include "etas/catalog.hpp"
#include "etas/kernels.hpp"
#include "etas/random.hpp"
#include "etas/sampler.hpp"

namespace etas {

/// mu_bar = 0.325, K_bar = 0.322, alpha = 1.407, c = 0.0353, p = 1.121,
/// d = 0.0159, q = 1.531, beta = ln 10.
[[nodiscard]] EtasParams default_simulation_params();

/// "phi1": standard bivariate normal. "phi2": equal mixture of normals at
/// (-1,-1) and (1,1) with per-axis sd 0.4. "phi3": fault line
/// y = 1 + 2x + N(0, 0.5^2), x ~ U(-2, 2). Throws Error(config) otherwise.
[[nodiscard]] BackgroundDensity make_synthetic_phi(std::string_view name);

struct SimulationSpec {
  EtasParams params = default_simulation_params();
  BackgroundDensity phi = UniformDensity{};
  Region region;
  double t_start = 0.0;
  double t_end = 300.0;
  double M0 = 0.0;
  std::uint64_t seed = 1;
  std::size_t max_events = 1'000'000;

  void validate() const;
};

struct SimulatedCatalog {
  Catalog catalog;
  BranchingVector true_branching;
};

/// Branching-process simulation. Offspring of an event at t_j are confined
/// to the window (their count is Poisson with the window-truncated Omori
/// mass) and may land outside the region.
[[nodiscard]] SimulatedCatalog simulate_catalog(const SimulationSpec& spec);
[[nodiscard]] SimulatedCatalog simulate_catalog(const SimulationSpec& spec, Rng& rng);

/// Omori lag in (a, b] by inverse CDF; b may be infinite.
[[nodiscard]] double omori_lag_between(double c, double p, double a, double b, double u);
/// Radius of a spatial-kernel offset by inverse CDF.
[[nodiscard]] double spatial_radius(double d, double q, double u);

/// Continuation of `history` over (t_end, horizon_end]: offspring of the
/// historical events, fresh background events and their descendants.
/// Returned events are sorted by time.
[[nodiscard]] std::vector<Event> simulate_forecast(const Catalog& history,
                                                   const EtasParams& params,
                                                   const BackgroundDensity& phi,
                                                   double horizon_end, Rng& rng,
                                                   std::size_t max_events = 1'000'000);

struct ForecastRun {
  std::size_t sample_index = 0;
  std::size_t n_events = 0;
  double max_magnitude = 0.0;  // meaningful only when n_events > 0
};

struct ForecastSummary {
  double t_from = 0.0;
  double t_to = 0.0;
  std::vector<ForecastRun> runs;
  std::vector<double> thresholds;
  /// Fraction of runs with at least one event at or above each threshold.
  std::vector<double> exceedance;

  /// Fraction of runs with exactly k events, k = 0..max.
  [[nodiscard]] std::vector<double> count_distribution() const;
};

/// `n_runs` predictive simulations cycling through the posterior samples.
[[nodiscard]] ForecastSummary forecast(const Catalog& history,
                                       std::span<const PosteriorSample> samples,
                                       double horizon_end, std::size_t n_runs,
                                       std::span<const double> thresholds, Rng& rng);

}  // namespace etas
