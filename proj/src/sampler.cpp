#include "etas/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "etas/error.hpp"

namespace etas {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_interval(const Interval& box, const char* name, double floor, bool finite) {
  if (!(box.lo < box.hi) || box.lo < floor || (finite && !std::isfinite(box.hi))) {
    throw Error(ErrorKind::config, std::string("invalid prior range for ") + name);
  }
}

Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

double draw_in(const Interval& box, Rng& rng) { return box.lo + (box.hi - box.lo) * uniform01(rng); }

// Log of the background weight and of every candidate parent for event i.
void parent_log_weights(const Catalog& catalog, const EtasParams& params,
                        std::span<const double> phi_at_events, std::span<const double> log_scale,
                        std::size_t i, std::vector<double>& out) {
  const auto events = catalog.events();
  const auto& ei = events[i];
  out.resize(i + 1);
  const double bg = params.mu_bar * phi_at_events[i];
  out[0] = bg > 0.0 ? std::log(bg) : kNegInf;
  for (std::size_t j = 0; j < i; ++j) {
    const auto& ej = events[j];
    const double dx = ei.x - ej.x;
    const double dy = ei.y - ej.y;
    out[j + 1] = log_scale[j] - params.p * std::log(ei.t - ej.t + params.c) -
                 params.q * std::log(dx * dx + dy * dy + params.d);
  }
}

// log K_bar + alpha (m_j - M0) + log K_r + log K_s per event.
std::vector<double> parent_log_scale(const Catalog& catalog, const EtasParams& params) {
  if (!(params.c > 0.0) || !(params.p > 1.0) || !(params.d > 0.0) || !(params.q > 1.0)) {
    throw Error(ErrorKind::domain, "kernel parameters out of range");
  }
  const double base = (params.K_bar > 0.0 ? std::log(params.K_bar) : kNegInf) +
                      std::log(params.p - 1.0) + (params.p - 1.0) * std::log(params.c) +
                      std::log(params.q - 1.0) + (params.q - 1.0) * std::log(params.d) -
                      std::log(std::numbers::pi);
  std::vector<double> out;
  out.reserve(catalog.size());
  for (const auto& e : catalog.events()) out.push_back(base + params.alpha * (e.m - catalog.M0()));
  return out;
}

// Normalizes log weights in place into probabilities; false if all are zero.
bool normalize(std::vector<double>& w) {
  const double top = *std::max_element(w.begin(), w.end());
  if (top == kNegInf) return false;
  double total = 0.0;
  for (double& v : w) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : w) v /= total;
  return true;
}

[[noreturn]] void throw_untriggerable(std::size_t i) {
  throw Error(ErrorKind::domain, "event " + std::to_string(i + 1) +
                                     " has zero background density and no possible parent");
}

double compensator_sum(const BranchingStats& stats, const EtasParams& params) {
  double s = 0.0;
  for (std::size_t j = 0; j < stats.excess_mag.size(); ++j) {
    s += std::exp(params.alpha * stats.excess_mag[j]) *
         omori_mass(stats.time_left[j], params.c, params.p);
  }
  return params.K_bar * s;
}

}  // namespace

void PriorSpec::validate() const {
  check_interval(K_bar, "K_bar", 0.0, true);
  check_interval(alpha, "alpha", 0.0, true);
  check_interval(c, "c", 0.0, true);
  check_interval(p, "p", 1.0, true);
  check_interval(d, "d", 0.0, false);
  check_interval(q, "q", 1.0, false);
  check_interval(intersect(d, d_init), "d (initial range)", 0.0, true);
  check_interval(intersect(q, q_init), "q (initial range)", 1.0, true);
  if (!(mu_shape > 0.0) || !(mu_rate > 0.0)) {
    throw Error(ErrorKind::config, "mu_bar Gamma prior needs positive shape and rate");
  }
}

bool PriorSpec::in_support(const EtasParams& params) const noexcept {
  return K_bar.contains(params.K_bar) && alpha.contains(params.alpha) && c.contains(params.c) &&
         p.contains(params.p) && d.contains(params.d) && q.contains(params.q) &&
         (!require_subcritical || is_subcritical(params));
}

std::string_view to_string(BackgroundKind kind) noexcept {
  switch (kind) {
    case BackgroundKind::uniform: return "uniform";
    case BackgroundKind::kde: return "kde";
    case BackgroundKind::dp: return "dp";
  }
  return "?";
}

BackgroundKind parse_background_kind(std::string_view name) {
  if (name == "uniform") return BackgroundKind::uniform;
  if (name == "kde") return BackgroundKind::kde;
  if (name == "dp") return BackgroundKind::dp;
  throw Error(ErrorKind::config,
              "unknown background model '" + std::string(name) + "' (valid: uniform, kde, dp)");
}

void SamplerConfig::validate() const {
  if (n_samples < 1) throw Error(ErrorKind::config, "n_samples must be >= 1");
  if (thinning < 1) throw Error(ErrorKind::config, "thinning must be >= 1");
  if (branching_update_every < 1) {
    throw Error(ErrorKind::config, "branching_update_every must be >= 1");
  }
  if (!(proposal_sd > 0.0)) throw Error(ErrorKind::config, "proposal_sd must be positive");
  if (beta_gr && !(*beta_gr > 0.0)) throw Error(ErrorKind::config, "beta must be positive");
  if (init_attempts < 1) throw Error(ErrorKind::config, "init_attempts must be >= 1");
}

std::size_t SamplerConfig::resolved_burn_in() const noexcept {
  return burn_in.value_or((n_samples * thinning + 4) / 9);
}

std::size_t SamplerConfig::total_iterations() const noexcept {
  return resolved_burn_in() + n_samples * thinning;
}

double estimate_beta(const Catalog& catalog) {
  double excess = 0.0;
  for (const auto& e : catalog.events()) excess += e.m - catalog.M0();
  return (1.0 + static_cast<double>(catalog.size())) / (1.0 + excess);
}

double AcceptanceStats::rate(Block b) const noexcept {
  const auto k = static_cast<std::size_t>(b);
  return proposed[k] ? static_cast<double>(accepted[k]) / static_cast<double>(proposed[k]) : 0.0;
}

BranchingStats::BranchingStats(const Catalog& catalog, const BranchingVector& branching)
    : window(catalog.length()) {
  const auto events = catalog.events();
  if (branching.size() != events.size()) {
    throw Error(ErrorKind::domain, "branching vector does not match the catalog size");
  }
  excess_mag.reserve(events.size());
  time_left.reserve(events.size());
  for (const auto& e : events) {
    excess_mag.push_back(e.m - catalog.M0());
    time_left.push_back(catalog.t_end() - e.t);
  }
  offspring = branching.offspring_counts();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto b = branching.parent(i);
    if (b == 0) {
      ++immigrants;
      continue;
    }
    const auto& parent = events[b - 1];
    const double dx = events[i].x - parent.x;
    const double dy = events[i].y - parent.y;
    lag.push_back(events[i].t - parent.t);
    r2.push_back(dx * dx + dy * dy);
  }
}

std::vector<double> branching_probabilities(const Catalog& catalog, const EtasParams& params,
                                            std::span<const double> phi_at_events,
                                            std::size_t i) {
  if (phi_at_events.size() != catalog.size() || i >= catalog.size()) {
    throw Error(ErrorKind::domain, "event index or background values out of range");
  }
  const auto scale = parent_log_scale(catalog, params);
  std::vector<double> w;
  parent_log_weights(catalog, params, phi_at_events, scale, i, w);
  if (!normalize(w)) throw_untriggerable(i);
  return w;
}

BranchingVector sample_branching(const Catalog& catalog, const EtasParams& params,
                                 std::span<const double> phi_at_events, Rng& rng) {
  if (phi_at_events.size() != catalog.size()) {
    throw Error(ErrorKind::domain, "background values do not match the catalog size");
  }
  const auto scale = parent_log_scale(catalog, params);
  BranchingVector out(catalog.size());
  std::vector<double> w;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    parent_log_weights(catalog, params, phi_at_events, scale, i, w);
    if (!normalize(w)) throw_untriggerable(i);
    out.set_parent(i, static_cast<std::uint32_t>(draw_categorical(rng, w, 1.0)));
  }
  return out;
}

double sample_mu_bar(std::size_t immigrants, double window, const PriorSpec& prior, Rng& rng) {
  return draw_gamma(rng, prior.mu_shape + static_cast<double>(immigrants), prior.mu_rate + window);
}

double log_target_K_alpha(const BranchingStats& stats, const EtasParams& params,
                          const PriorSpec& prior) {
  if (!prior.in_support(params)) return kNegInf;
  double v = -compensator_sum(stats, params);
  const double log_k = std::log(params.K_bar);
  for (std::size_t j = 0; j < stats.offspring.size(); ++j) {
    if (stats.offspring[j] == 0) continue;
    v += static_cast<double>(stats.offspring[j]) * (log_k + params.alpha * stats.excess_mag[j]);
  }
  return v;
}

double log_target_c_p(const BranchingStats& stats, const EtasParams& params,
                      const PriorSpec& prior) {
  if (!prior.in_support(params)) return kNegInf;
  double v = -compensator_sum(stats, params);
  const double log_kr = std::log(params.p - 1.0) + (params.p - 1.0) * std::log(params.c);
  for (double z : stats.lag) v += log_kr - params.p * std::log(z + params.c);
  return v;
}

double log_target_d_q(const BranchingStats& stats, const EtasParams& params,
                      const PriorSpec& prior) {
  if (!prior.in_support(params)) return kNegInf;
  const double log_ks = std::log(params.q - 1.0) + (params.q - 1.0) * std::log(params.d) -
                        std::log(std::numbers::pi);
  double v = 0.0;
  for (double r2 : stats.r2) v += log_ks - params.q * std::log(r2 + params.d);
  return v;
}

bool mh_step(Block block, EtasParams& params, const BranchingStats& stats,
             const PriorSpec& prior, double proposal_sd, Rng& rng) {
  double EtasParams::*first = nullptr;
  double EtasParams::*second = nullptr;
  double (*target)(const BranchingStats&, const EtasParams&, const PriorSpec&) = nullptr;
  switch (block) {
    case Block::K_alpha:
      first = &EtasParams::K_bar;
      second = &EtasParams::alpha;
      target = &log_target_K_alpha;
      break;
    case Block::c_p:
      first = &EtasParams::c;
      second = &EtasParams::p;
      target = &log_target_c_p;
      break;
    case Block::d_q:
      first = &EtasParams::d;
      second = &EtasParams::q;
      target = &log_target_d_q;
      break;
  }
  EtasParams proposal = params;
  proposal.*first += proposal_sd * draw_normal(rng);
  proposal.*second += proposal_sd * draw_normal(rng);
  if (!prior.in_support(proposal)) return false;
  const double log_ratio = target(stats, proposal, prior) - target(stats, params, prior);
  if (std::log(uniform01(rng)) < log_ratio) {
    params = proposal;
    return true;
  }
  return false;
}

EtasGibbsSampler::EtasGibbsSampler(Catalog catalog, SamplerConfig config, PriorSpec prior,
                                   DPConfig dp)
    : catalog_(std::move(catalog)),
      config_(std::move(config)),
      prior_(prior),
      dp_(std::move(dp)),
      rng_(make_rng(config_.seed)) {
  config_.validate();
  prior_.validate();
  if (config_.background == BackgroundKind::dp) dp_.validate();
  if (catalog_.empty()) throw Error(ErrorKind::data, "cannot fit an empty catalog");

  params_.beta_gr = config_.beta_gr.value_or(estimate_beta(catalog_));
  locations_ = event_locations(catalog_.events());
  branching_ = BranchingVector(catalog_.size());
  initialize_params();
  reset_background();

  // Events with zero background density (outside a uniform region) cannot
  // start as immigrants; hang them on the preceding event instead.
  for (std::size_t i = 0; i < catalog_.size(); ++i) {
    if (phi_at_events_[i] > 0.0) continue;
    if (i == 0) throw_untriggerable(0);
    branching_.set_parent(i, static_cast<std::uint32_t>(i));
  }
  stats_ = std::make_unique<BranchingStats>(catalog_, branching_);

  if (!std::isfinite(log_likelihood(catalog_, params_, phi_at_events_))) {
    throw Error(ErrorKind::numeric, "log-likelihood is not finite at the initial state");
  }
}

void EtasGibbsSampler::initialize_params() {
  const Interval d_box = intersect(prior_.d, prior_.d_init);
  const Interval q_box = intersect(prior_.q, prior_.q_init);
  for (std::size_t attempt = 0; attempt < config_.init_attempts; ++attempt) {
    EtasParams draw;
    draw.beta_gr = params_.beta_gr;
    draw.K_bar = draw_in(prior_.K_bar, rng_);
    draw.alpha = draw_in(prior_.alpha, rng_);
    draw.c = draw_in(prior_.c, rng_);
    draw.p = draw_in(prior_.p, rng_);
    draw.d = draw_in(d_box, rng_);
    draw.q = draw_in(q_box, rng_);
    if (!prior_.in_support(draw)) continue;
    draw.mu_bar = sample_mu_bar(catalog_.size(), catalog_.length(), prior_, rng_);
    params_ = draw;
    return;
  }
  throw Error(ErrorKind::config,
              "no initial parameters inside the prior and subcritical region after " +
                  std::to_string(config_.init_attempts) + " attempts");
}

void EtasGibbsSampler::reset_background() {
  switch (config_.background) {
    case BackgroundKind::uniform:
      phi_ = std::make_shared<const BackgroundDensity>(UniformDensity{catalog_.region()});
      break;
    case BackgroundKind::kde:
      phi_ = std::make_shared<const BackgroundDensity>(fit_kde(locations_, config_.kde_bandwidth));
      break;
    case BackgroundKind::dp:
      clusters_ = ClusterState(catalog_.size());
      update_background();
      return;
  }
  refresh_phi_cache();
}

void EtasGibbsSampler::refresh_phi_cache() {
  phi_at_events_ = density_at_events(*phi_, catalog_.events());
}

void EtasGibbsSampler::set_data(Catalog catalog, BranchingVector branching) {
  if (branching.size() != catalog.size()) {
    throw Error(ErrorKind::domain, "branching vector does not match the catalog size");
  }
  // An empty window is a valid state for the uniform background (the
  // conditionals reduce to the prior); the other backgrounds need points.
  if (catalog.empty() && config_.background != BackgroundKind::uniform) {
    throw Error(ErrorKind::data, "cannot fit an empty catalog");
  }
  catalog_ = std::move(catalog);
  branching_ = std::move(branching);
  locations_ = event_locations(catalog_.events());
  stats_ = std::make_unique<BranchingStats>(catalog_, branching_);
  reset_background();
}

void EtasGibbsSampler::set_params(const EtasParams& params) {
  if (!prior_.in_support(params) || !(params.mu_bar > 0.0)) {
    throw Error(ErrorKind::domain, "parameters outside the prior support");
  }
  params_ = params;
}

void EtasGibbsSampler::update_branching() {
  branching_ = sample_branching(catalog_, params_, phi_at_events_, rng_);
  stats_ = std::make_unique<BranchingStats>(catalog_, branching_);
  immigrant_trace_.push_back(stats_->immigrants);
}

void EtasGibbsSampler::update_background() {
  if (config_.background != BackgroundKind::dp) return;
  std::vector<std::size_t> active;
  std::vector<Vec2> immigrant_points;
  for (std::size_t i = 0; i < catalog_.size(); ++i) {
    if (branching_.parent(i) == 0) {
      active.push_back(i);
      immigrant_points.push_back(locations_[i]);
    } else {
      clusters_.unseat(i, locations_[i]);
    }
  }
  // Base measure scaled to the current immigrants; the whole catalog stands
  // in when there are too few of them.
  const auto prior =
      resolve_niw(dp_, immigrant_points.size() >= 3 ? std::span<const Vec2>(immigrant_points)
                                                    : std::span<const Vec2>(locations_));
  for (std::size_t s = 0; s < dp_.sweeps; ++s) {
    crp_gibbs_sweep(clusters_, locations_, active, dp_.chi, prior, rng_);
  }
  if (dp_.update_hyperparams) dp_ = update_dp_hyperparams(clusters_, dp_, rng_);
  phi_ = std::make_shared<const BackgroundDensity>(
      sample_dp_realization(clusters_, locations_, dp_.chi, prior, dp_.truncation, rng_));
  refresh_phi_cache();
}

void EtasGibbsSampler::step() {
  if ((iteration_ + 1) % config_.branching_update_every == 0) {
    update_branching();
    update_background();
  }
  params_.mu_bar = sample_mu_bar(stats_->immigrants, stats_->window, prior_, rng_);
  for (const Block b : {Block::K_alpha, Block::c_p, Block::d_q}) {
    const auto k = static_cast<std::size_t>(b);
    ++acceptance_.proposed[k];
    if (mh_step(b, params_, *stats_, prior_, config_.proposal_sd, rng_)) ++acceptance_.accepted[k];
  }
  ++iteration_;
}

PosteriorSample EtasGibbsSampler::snapshot(std::size_t index) const {
  PosteriorSample s;
  s.index = index;
  s.params = params_;
  s.branching = branching_;
  s.phi = phi_;
  s.loglik_full = log_likelihood(catalog_, params_, phi_at_events_);
  s.loglik_branched = branched_log_likelihood(catalog_, params_, phi_at_events_, branching_);
  return s;
}

Chain EtasGibbsSampler::run() {
  Chain chain;
  chain.background = config_.background;
  chain.beta_gr = params_.beta_gr;
  chain.samples.reserve(config_.n_samples);
  const std::size_t burn = config_.resolved_burn_in();
  const std::size_t total = config_.total_iterations();
  for (std::size_t it = 0; it < total; ++it) {
    step();
    if (it >= burn && (it - burn + 1) % config_.thinning == 0) {
      chain.samples.push_back(snapshot(chain.samples.size()));
    }
  }
  chain.acceptance = acceptance_;
  chain.immigrant_trace = immigrant_trace_;
  return chain;
}

Chain run_chain(const Catalog& catalog, const SamplerConfig& config, const PriorSpec& prior,
                const DPConfig& dp) {
  EtasGibbsSampler sampler(catalog, config, prior, dp);
  return sampler.run();
}

}  // namespace etas
