#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "etas/background.hpp"
#include "etas/branching.hpp"
#include "etas/catalog.hpp"
#include "etas/dp_mixture.hpp"
#include "etas/kernels.hpp"
#include "etas/random.hpp"

namespace etas {

struct Interval {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool contains(double v) const noexcept { return v > lo && v < hi; }
};

/// Uniform box priors on the triggering parameters (open intervals), a
/// Gamma(shape, rate) prior on mu_bar, and the subcritical region.
struct PriorSpec {
  Interval K_bar{0.0, 30.0};
  Interval alpha{0.0, 10.0};
  Interval c{0.0, 10.0};
  Interval p{1.0, 30.0};
  Interval d{0.0, std::numeric_limits<double>::infinity()};
  Interval q{1.0, std::numeric_limits<double>::infinity()};
  double mu_shape = 0.1;
  double mu_rate = 0.1;
  bool require_subcritical = true;
  /// Finite ranges used to draw initial values of d and q, whose priors are
  /// improper by default.
  Interval d_init{0.0, 1.0};
  Interval q_init{1.0, 5.0};

  void validate() const;
  /// In every box and, when required, subcritical. mu_bar is not checked.
  [[nodiscard]] bool in_support(const EtasParams& params) const noexcept;
};

enum class BackgroundKind { uniform, kde, dp };

[[nodiscard]] std::string_view to_string(BackgroundKind kind) noexcept;
/// Throws Error(config) listing the valid names.
[[nodiscard]] BackgroundKind parse_background_kind(std::string_view name);

struct SamplerConfig {
  std::size_t n_samples = 2000;  // retained after thinning
  std::size_t thinning = 5;
  /// Iterations discarded first; defaults to 10% of all iterations.
  std::optional<std::size_t> burn_in;
  std::size_t branching_update_every = 50;
  double proposal_sd = 0.1;
  std::uint64_t seed = 1;
  BackgroundKind background = BackgroundKind::uniform;
  /// Fixed Gutenberg-Richter rate; estimated from the magnitudes when unset.
  std::optional<double> beta_gr;
  std::optional<Mat2> kde_bandwidth;
  std::size_t init_attempts = 10000;

  void validate() const;
  [[nodiscard]] std::size_t resolved_burn_in() const noexcept;
  [[nodiscard]] std::size_t total_iterations() const noexcept;
};

/// Posterior mean of an exponential rate under a Gamma(1, 1) prior given
/// the excess magnitudes m - M0.
[[nodiscard]] double estimate_beta(const Catalog& catalog);

struct PosteriorSample {
  std::size_t index = 0;
  EtasParams params;
  BranchingVector branching;
  std::shared_ptr<const BackgroundDensity> phi;
  double loglik_full = 0.0;
  double loglik_branched = 0.0;
};

enum class Block { K_alpha = 0, c_p = 1, d_q = 2 };

struct AcceptanceStats {
  std::array<std::size_t, 3> proposed{};
  std::array<std::size_t, 3> accepted{};

  [[nodiscard]] double rate(Block b) const noexcept;
};

struct Chain {
  BackgroundKind background = BackgroundKind::uniform;
  double beta_gr = std::numbers::ln10;
  std::vector<PosteriorSample> samples;
  AcceptanceStats acceptance;
  /// Immigrant count after every branching update.
  std::vector<std::size_t> immigrant_trace;
};

/// Per-parent and per-pair quantities the parameter blocks need from the
/// current branching.
struct BranchingStats {
  std::vector<double> excess_mag;   // m_j - M0
  std::vector<double> time_left;    // t_end - t_j
  std::vector<std::size_t> offspring;
  std::vector<double> lag;          // t_i - t_parent, one per triggered event
  std::vector<double> r2;           // squared parent-child distance
  std::size_t immigrants = 0;
  double window = 0.0;

  BranchingStats(const Catalog& catalog, const BranchingVector& branching);
};

/// Normalized parent probabilities of event i: index 0 is the background,
/// index j the (1-indexed) earlier event j.
[[nodiscard]] std::vector<double> branching_probabilities(const Catalog& catalog,
                                                          const EtasParams& params,
                                                          std::span<const double> phi_at_events,
                                                          std::size_t i);
[[nodiscard]] BranchingVector sample_branching(const Catalog& catalog, const EtasParams& params,
                                               std::span<const double> phi_at_events, Rng& rng);

[[nodiscard]] double sample_mu_bar(std::size_t immigrants, double window, const PriorSpec& prior,
                                   Rng& rng);

/// Log full conditional of each block (up to a constant) at `params`;
/// -inf outside the prior support.
[[nodiscard]] double log_target_K_alpha(const BranchingStats& stats, const EtasParams& params,
                                        const PriorSpec& prior);
[[nodiscard]] double log_target_c_p(const BranchingStats& stats, const EtasParams& params,
                                    const PriorSpec& prior);
[[nodiscard]] double log_target_d_q(const BranchingStats& stats, const EtasParams& params,
                                    const PriorSpec& prior);

/// One joint random-walk Metropolis step on the block's two coordinates.
/// Returns true when the proposal was accepted.
bool mh_step(Block block, EtasParams& params, const BranchingStats& stats,
             const PriorSpec& prior, double proposal_sd, Rng& rng);

/// The blocked latent-variable sampler. Per iteration: branching and
/// background (every `branching_update_every` iterations), then mu_bar,
/// (K_bar, alpha), (c, p), (d, q).
class EtasGibbsSampler {
 public:
  EtasGibbsSampler(Catalog catalog, SamplerConfig config, PriorSpec prior, DPConfig dp = {});

  /// Replaces the data and branching, keeping the parameters. May be empty
  /// with the uniform background.
  void set_data(Catalog catalog, BranchingVector branching);
  /// Throws Error(domain) outside the prior support.
  void set_params(const EtasParams& params);

  void step();
  [[nodiscard]] PosteriorSample snapshot(std::size_t index) const;
  /// Runs burn-in plus n_samples * thinning iterations from the current state.
  [[nodiscard]] Chain run();

  [[nodiscard]] const Catalog& catalog() const noexcept { return catalog_; }
  [[nodiscard]] const EtasParams& params() const noexcept { return params_; }
  [[nodiscard]] const BranchingVector& branching() const noexcept { return branching_; }
  [[nodiscard]] const BackgroundDensity& phi() const noexcept { return *phi_; }
  [[nodiscard]] const AcceptanceStats& acceptance() const noexcept { return acceptance_; }
  [[nodiscard]] const std::vector<std::size_t>& immigrant_trace() const noexcept {
    return immigrant_trace_;
  }
  [[nodiscard]] double chi() const noexcept { return dp_.chi; }
  [[nodiscard]] Rng& rng() noexcept { return rng_; }

 private:
  void initialize_params();
  void reset_background();
  void update_branching();
  void update_background();
  void refresh_phi_cache();

  Catalog catalog_;
  SamplerConfig config_;
  PriorSpec prior_;
  DPConfig dp_;
  Rng rng_;
  EtasParams params_;
  BranchingVector branching_;
  std::unique_ptr<BranchingStats> stats_;
  std::shared_ptr<const BackgroundDensity> phi_;
  std::vector<double> phi_at_events_;
  std::vector<Vec2> locations_;
  ClusterState clusters_;
  AcceptanceStats acceptance_;
  std::vector<std::size_t> immigrant_trace_;
  std::size_t iteration_ = 0;
};

[[nodiscard]] Chain run_chain(const Catalog& catalog, const SamplerConfig& config,
                              const PriorSpec& prior, const DPConfig& dp = {});

}  // namespace etas
