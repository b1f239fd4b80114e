#include "etas/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "etas/error.hpp"

namespace etas {

namespace {

struct Node {
  Event event;
  std::int64_t parent;  // index into the node list, -1 for none
};

// (c / (z + c))^{p-1}: probability that an Omori lag exceeds z.
double omori_survival(double z, double c, double p) {
  if (std::isinf(z)) return 0.0;
  return std::exp((p - 1.0) * (std::log(c) - std::log(z + c)));
}

void check_kernel_params(const EtasParams& params) {
  if (!(params.mu_bar >= 0.0) || !(params.K_bar >= 0.0) || !std::isfinite(params.alpha) ||
      !(params.c > 0.0) || !(params.p > 1.0) || !(params.d > 0.0) || !(params.q > 1.0) ||
      !(params.beta_gr > 0.0)) {
    throw Error(ErrorKind::domain, "simulation parameters out of range");
  }
  if (params.K_bar > 0.0 && !is_subcritical(params)) {
    throw Error(ErrorKind::domain, "simulation parameters are not subcritical (need alpha < beta "
                                   "and K_bar beta / (beta - alpha) < 1)");
  }
}

Event offspring_of(const Event& parent, double lag, const EtasParams& params, double M0,
                   Rng& rng) {
  const double r = spatial_radius(params.d, params.q, uniform01(rng));
  if (!std::isfinite(r)) {
    throw Error(ErrorKind::numeric, "offspring offset overflowed (q too close to 1)");
  }
  const double angle = 2.0 * std::numbers::pi * uniform01(rng);
  return Event{parent.t + lag, M0 + draw_exponential(rng, params.beta_gr),
               parent.x + r * std::cos(angle), parent.y + r * std::sin(angle)};
}

// Expands every node from `first` on (including nodes appended on the way)
// with offspring confined to times <= t_end.
void grow(std::vector<Node>& nodes, std::size_t first, const EtasParams& params, double M0,
          double t_end, std::size_t max_events, Rng& rng) {
  if (!(params.K_bar > 0.0)) return;
  for (std::size_t k = first; k < nodes.size(); ++k) {
    const Event parent = nodes[k].event;
    const double room = t_end - parent.t;
    const double mean = params.K_bar * std::exp(params.alpha * (parent.m - M0)) *
                        omori_mass(room, params.c, params.p);
    const auto n = draw_poisson(rng, mean);
    for (std::int64_t s = 0; s < n; ++s) {
      const double lag = omori_lag_between(params.c, params.p, 0.0, room, uniform01(rng));
      nodes.push_back({offspring_of(parent, lag, params, M0, rng), static_cast<std::int64_t>(k)});
      if (nodes.size() > max_events) {
        throw Error(ErrorKind::numeric,
                    "simulation exceeded " + std::to_string(max_events) + " events");
      }
    }
  }
}

}  // namespace

EtasParams default_simulation_params() {
  EtasParams p;
  p.mu_bar = 0.325;
  p.K_bar = 0.322;
  p.alpha = 1.407;
  p.c = 0.0353;
  p.p = 1.121;
  p.d = 0.0159;
  p.q = 1.531;
  p.beta_gr = std::numbers::ln10;
  return p;
}

BackgroundDensity make_synthetic_phi(std::string_view name) {
  if (name == "phi1") {
    return GaussianMixture({GaussianComponent{1.0, Vec2::Zero(), Mat2::Identity()}});
  }
  if (name == "phi2") {
    const Mat2 cov = 0.16 * Mat2::Identity();
    return GaussianMixture({GaussianComponent{0.5, Vec2(-1.0, -1.0), cov},
                            GaussianComponent{0.5, Vec2(1.0, 1.0), cov}});
  }
  if (name == "phi3") return FaultLineDensity{};
  throw Error(ErrorKind::config,
              "unknown synthetic density '" + std::string(name) + "' (valid: phi1, phi2, phi3)");
}

void SimulationSpec::validate() const {
  check_kernel_params(params);
  region.validate();
  if (!(t_start < t_end)) throw Error(ErrorKind::domain, "simulation window must be non-empty");
  if (max_events < 1) throw Error(ErrorKind::config, "max_events must be >= 1");
}

double omori_lag_between(double c, double p, double a, double b, double u) {
  const double s_a = omori_survival(a, c, p);
  const double s_b = omori_survival(b, c, p);
  const double s = s_a - u * (s_a - s_b);
  const double z = c * std::pow(s, -1.0 / (p - 1.0)) - c;
  return std::clamp(z, a, b);
}

double spatial_radius(double d, double q, double u) {
  return std::sqrt(d * std::expm1(-std::log1p(-u) / (q - 1.0)));
}

SimulatedCatalog simulate_catalog(const SimulationSpec& spec) {
  Rng rng = make_rng(spec.seed);
  return simulate_catalog(spec, rng);
}

SimulatedCatalog simulate_catalog(const SimulationSpec& spec, Rng& rng) {
  spec.validate();
  const auto& params = spec.params;
  std::vector<Node> nodes;
  const auto n_bg = draw_poisson(rng, params.mu_bar * (spec.t_end - spec.t_start));
  if (static_cast<std::size_t>(n_bg) > spec.max_events) {
    throw Error(ErrorKind::numeric,
                "simulation exceeded " + std::to_string(spec.max_events) + " events");
  }
  nodes.reserve(static_cast<std::size_t>(n_bg));
  for (std::int64_t k = 0; k < n_bg; ++k) {
    const double t = spec.t_start + (spec.t_end - spec.t_start) * uniform01(rng);
    const Vec2 loc = sample_location(spec.phi, rng);
    nodes.push_back({Event{t, spec.M0 + draw_exponential(rng, params.beta_gr), loc.x(), loc.y()},
                     -1});
  }
  grow(nodes, 0, params, spec.M0, spec.t_end, spec.max_events, rng);

  std::vector<std::size_t> order(nodes.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  // Stable, so a zero-lag child still follows its parent.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nodes[a].event.t < nodes[b].event.t;
  });
  std::vector<std::uint32_t> position(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<std::uint32_t>(i);

  std::vector<Event> events;
  std::vector<std::uint32_t> parents;
  events.reserve(nodes.size());
  parents.reserve(nodes.size());
  for (const auto k : order) {
    events.push_back(nodes[k].event);
    const auto parent = nodes[k].parent;
    parents.push_back(parent < 0 ? 0 : position[static_cast<std::size_t>(parent)] + 1);
  }
  return SimulatedCatalog{Catalog(std::move(events), spec.t_end, spec.M0, spec.region, spec.t_start),
                          BranchingVector(std::move(parents))};
}

std::vector<Event> simulate_forecast(const Catalog& history, const EtasParams& params,
                                     const BackgroundDensity& phi, double horizon_end, Rng& rng,
                                     std::size_t max_events) {
  check_kernel_params(params);
  const double from = history.t_end();
  if (!(horizon_end >= from)) {
    throw Error(ErrorKind::domain, "forecast horizon ends before the history window");
  }
  const double M0 = history.M0();
  std::vector<Node> nodes;
  if (horizon_end == from) return {};

  if (params.K_bar > 0.0) {
    for (const auto& e : history.events()) {
      const double a = from - e.t;
      const double b = horizon_end - e.t;
      const double mass = omori_survival(a, params.c, params.p) -
                          omori_survival(b, params.c, params.p);
      const auto n =
          draw_poisson(rng, params.K_bar * std::exp(params.alpha * (e.m - M0)) * mass);
      for (std::int64_t s = 0; s < n; ++s) {
        const double lag = omori_lag_between(params.c, params.p, a, b, uniform01(rng));
        nodes.push_back({offspring_of(e, lag, params, M0, rng), -1});
      }
    }
  }
  const auto n_bg = draw_poisson(rng, params.mu_bar * (horizon_end - from));
  for (std::int64_t k = 0; k < n_bg; ++k) {
    const double t = from + (horizon_end - from) * uniform01(rng);
    const Vec2 loc = sample_location(phi, rng);
    nodes.push_back({Event{t, M0 + draw_exponential(rng, params.beta_gr), loc.x(), loc.y()}, -1});
  }
  if (nodes.size() > max_events) {
    throw Error(ErrorKind::numeric, "simulation exceeded " + std::to_string(max_events) + " events");
  }
  grow(nodes, 0, params, M0, horizon_end, max_events, rng);

  std::vector<Event> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.event);
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return out;
}

std::vector<double> ForecastSummary::count_distribution() const {
  std::size_t top = 0;
  for (const auto& r : runs) top = std::max(top, r.n_events);
  std::vector<double> out(runs.empty() ? 0 : top + 1, 0.0);
  for (const auto& r : runs) out[r.n_events] += 1.0;
  for (double& v : out) v /= static_cast<double>(runs.size());
  return out;
}

ForecastSummary forecast(const Catalog& history, std::span<const PosteriorSample> samples,
                         double horizon_end, std::size_t n_runs,
                         std::span<const double> thresholds, Rng& rng) {
  if (samples.empty()) throw Error(ErrorKind::domain, "forecast needs at least one posterior sample");
  if (n_runs < 1) throw Error(ErrorKind::config, "forecast needs at least one simulation");
  ForecastSummary out;
  out.t_from = history.t_end();
  out.t_to = horizon_end;
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  std::sort(out.thresholds.begin(), out.thresholds.end());
  out.exceedance.assign(out.thresholds.size(), 0.0);
  out.runs.reserve(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) {
    const auto& s = samples[r % samples.size()];
    const auto events = simulate_forecast(history, s.params, *s.phi, horizon_end, rng);
    ForecastRun run;
    run.sample_index = s.index;
    run.n_events = events.size();
    for (const auto& e : events) run.max_magnitude = std::max(run.max_magnitude, e.m);
    if (events.empty()) run.max_magnitude = history.M0();
    for (std::size_t k = 0; k < out.thresholds.size(); ++k) {
      if (!events.empty() && run.max_magnitude >= out.thresholds[k]) out.exceedance[k] += 1.0;
    }
    out.runs.push_back(run);
  }
  for (double& v : out.exceedance) v /= static_cast<double>(n_runs);
  return out;
}

}  // namespace etas
