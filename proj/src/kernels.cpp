#include "etas/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "etas/csv.hpp"
#include "etas/error.hpp"

namespace etas {

namespace {

void check_temporal(double c, double p) {
  if (!(c > 0.0) || !(p > 1.0)) {
    throw Error(ErrorKind::domain, "Omori kernel requires c > 0 and p > 1");
  }
}

void check_spatial(double d, double q) {
  if (!(d > 0.0) || !(q > 1.0)) {
    throw Error(ErrorKind::domain, "spatial kernel requires d > 0 and q > 1");
  }
}

// log K_r and log K_s.
double log_temporal_norm(double c, double p) { return std::log(p - 1.0) + (p - 1.0) * std::log(c); }
double log_spatial_norm(double d, double q) {
  return std::log(q - 1.0) + (q - 1.0) * std::log(d) - std::log(std::numbers::pi);
}

}  // namespace

BranchingVector::BranchingVector(std::vector<std::uint32_t> parents) : parent_(std::move(parents)) {
  for (std::size_t i = 0; i < parent_.size(); ++i) {
    if (parent_[i] > i) {
      throw Error(ErrorKind::domain, "branching parent must precede its child (event " +
                                         std::to_string(i + 1) + ")");
    }
  }
}

void BranchingVector::set_parent(std::size_t i, std::uint32_t parent) {
  if (parent > i) throw Error(ErrorKind::domain, "branching parent must precede its child");
  parent_[i] = parent;
}

std::size_t BranchingVector::num_immigrants() const noexcept {
  std::size_t n = 0;
  for (auto b : parent_) n += (b == 0);
  return n;
}

std::vector<std::size_t> BranchingVector::offspring_counts() const {
  std::vector<std::size_t> counts(parent_.size(), 0);
  for (auto b : parent_) {
    if (b > 0) ++counts[b - 1];
  }
  return counts;
}

double branching_ratio(const EtasParams& params) noexcept {
  if (!(params.alpha < params.beta_gr)) return std::numeric_limits<double>::infinity();
  return params.K_bar * params.beta_gr / (params.beta_gr - params.alpha);
}

bool is_subcritical(const EtasParams& params) noexcept {
  return params.alpha < params.beta_gr && branching_ratio(params) < 1.0;
}

double log_omori_density(double z, double c, double p) {
  check_temporal(c, p);
  if (!(z >= 0.0)) throw Error(ErrorKind::domain, "Omori kernel requires elapsed time z >= 0");
  return log_temporal_norm(c, p) - p * std::log(z + c);
}

double omori_density(double z, double c, double p) { return std::exp(log_omori_density(z, c, p)); }

double omori_mass(double z, double c, double p) {
  check_temporal(c, p);
  if (!(z >= 0.0)) return 0.0;
  // 1 - (c/(z+c))^{p-1}, written to keep precision for small z.
  return -std::expm1((p - 1.0) * (std::log(c) - std::log(z + c)));
}

double log_spatial_density(double r2, double d, double q) {
  check_spatial(d, q);
  return log_spatial_norm(d, q) - q * std::log(r2 + d);
}

double spatial_density(double dx, double dy, double d, double q) {
  return std::exp(log_spatial_density(dx * dx + dy * dy, d, q));
}

double productivity(double m, double alpha, double M0) {
  if (m < M0) throw Error(ErrorKind::domain, "magnitude below the magnitude of completeness");
  return std::exp(alpha * (m - M0));
}

IntensityBreakdown conditional_intensity(const Catalog& history, double t, double x, double y,
                                         const EtasParams& params, const BackgroundDensity& phi) {
  check_temporal(params.c, params.p);
  check_spatial(params.d, params.q);
  const auto past = history.before(t);
  IntensityBreakdown out;
  out.background = params.mu_bar * eval_density(phi, x, y);
  out.triggered.reserve(past.size());
  out.total = out.background;
  for (const auto& e : past) {
    const double dx = x - e.x;
    const double dy = y - e.y;
    const double v = params.K_bar * productivity(e.m, params.alpha, history.M0()) *
                     omori_density(t - e.t, params.c, params.p) *
                     spatial_density(dx, dy, params.d, params.q);
    out.triggered.push_back(v);
    out.total += v;
  }
  return out;
}

std::vector<double> density_at_events(const BackgroundDensity& phi, std::span<const Event> events) {
  std::vector<double> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(eval_density(phi, e.x, e.y));
  return out;
}

double log_likelihood(const Catalog& catalog, const EtasParams& params,
                      std::span<const double> phi_at_events, LikelihoodDiagnostics* diagnostics) {
  check_temporal(params.c, params.p);
  check_spatial(params.d, params.q);
  const auto events = catalog.events();
  if (phi_at_events.size() != events.size()) {
    throw Error(ErrorKind::domain, "background density values do not match the catalog size");
  }
  const double log_kr = log_temporal_norm(params.c, params.p);
  const double log_ks = log_spatial_norm(params.d, params.q);
  const double M0 = catalog.M0();
  const bool triggering = params.K_bar > 0.0;
  const double log_k = triggering ? std::log(params.K_bar) : 0.0;

  double sum_log = 0.0;
  double compensator = params.mu_bar * catalog.length();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ei = events[i];
    double lambda = params.mu_bar * phi_at_events[i];
    if (triggering) {
      for (std::size_t j = 0; j < i; ++j) {
        const auto& ej = events[j];
        const double dx = ei.x - ej.x;
        const double dy = ei.y - ej.y;
        lambda += std::exp(log_k + params.alpha * (ej.m - M0) + log_kr -
                           params.p * std::log(ei.t - ej.t + params.c) + log_ks -
                           params.q * std::log(dx * dx + dy * dy + params.d));
      }
      compensator += params.K_bar * std::exp(params.alpha * (ei.m - M0)) *
                     omori_mass(catalog.t_end() - ei.t, params.c, params.p);
    }
    if (!(lambda > 0.0)) {
      if (!(params.mu_bar * phi_at_events[i] > 0.0) && (!triggering || i == 0)) {
        return -std::numeric_limits<double>::infinity();
      }
      lambda = std::numeric_limits<double>::min();
      if (diagnostics) ++diagnostics->floored_terms;
    }
    sum_log += std::log(lambda);
  }
  return sum_log - compensator;
}

double log_likelihood(const Catalog& catalog, const EtasParams& params,
                      const BackgroundDensity& phi, LikelihoodDiagnostics* diagnostics) {
  const auto values = density_at_events(phi, catalog.events());
  return log_likelihood(catalog, params, values, diagnostics);
}

double branched_log_likelihood(const Catalog& catalog, const EtasParams& params,
                               std::span<const double> phi_at_events,
                               const BranchingVector& branching) {
  check_temporal(params.c, params.p);
  check_spatial(params.d, params.q);
  const auto events = catalog.events();
  if (branching.size() != events.size() || phi_at_events.size() != events.size()) {
    throw Error(ErrorKind::domain, "branching vector does not match the catalog size");
  }
  const double M0 = catalog.M0();
  const auto counts = branching.offspring_counts();

  double value = -params.mu_bar * catalog.length();
  for (std::size_t j = 0; j < events.size(); ++j) {
    const double log_prod = params.alpha * (events[j].m - M0);
    value -= params.K_bar * std::exp(log_prod) *
             omori_mass(catalog.t_end() - events[j].t, params.c, params.p);
    if (counts[j] > 0) {
      value += static_cast<double>(counts[j]) * (std::log(params.K_bar) + log_prod);
    }
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto parent = branching.parent(i);
    if (parent == 0) {
      value += std::log(params.mu_bar * phi_at_events[i]);
    } else {
      const auto& ej = events[parent - 1];
      const double dx = events[i].x - ej.x;
      const double dy = events[i].y - ej.y;
      value += log_omori_density(events[i].t - ej.t, params.c, params.p) +
               log_spatial_density(dx * dx + dy * dy, params.d, params.q);
    }
  }
  return value;
}

double branched_log_likelihood(const Catalog& catalog, const EtasParams& params,
                               const BackgroundDensity& phi, const BranchingVector& branching) {
  const auto values = density_at_events(phi, catalog.events());
  return branched_log_likelihood(catalog, params, values, branching);
}

}  // namespace etas
