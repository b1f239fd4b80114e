#pragma once

#include <optional>
#include <span>
#include <vector>

#include "etas/background.hpp"
#include "etas/random.hpp"

namespace etas {

/// Normal-inverse-Wishart over (mean, covariance):
///   cov ~ IW(df, scale),  mean | cov ~ N(center, cov / kappa).
/// A Wishart prior W(nu, (nu V)^{-1}) on the precision corresponds to
/// df = nu and scale = nu V here.
struct NiwParams {
  Vec2 center = Vec2::Zero();
  double kappa = 0.01;
  double df = 4.0;
  Mat2 scale = 4.0 * Mat2::Identity();
};

/// Dirichlet-process mixture settings. Unset `niw_xi` / `niw_V` default to
/// the centroid and sample covariance of the points being clustered.
struct DPConfig {
  double chi = 1.0;
  std::optional<Vec2> niw_xi;
  double niw_rho = 0.01;
  double niw_df = 4.0;  // Wishart degrees of freedom (> 1 for a 2-D draw)
  std::optional<Mat2> niw_V;
  std::size_t truncation = 50;
  bool update_hyperparams = false;
  std::size_t sweeps = 5;

  void validate() const;
};

/// Fills the data-dependent defaults. Needs at least three points when either
/// default is in use.
[[nodiscard]] NiwParams resolve_niw(const DPConfig& config, std::span<const Vec2> points);

struct ClusterStats {
  std::size_t count = 0;
  Vec2 sum = Vec2::Zero();
  Mat2 outer = Mat2::Zero();  // sum of x x'

  void add(const Vec2& x) {
    ++count;
    sum += x;
    outer += x * x.transpose();
  }
  void remove(const Vec2& x) {
    --count;
    sum -= x;
    outer -= x * x.transpose();
  }
};

[[nodiscard]] NiwParams niw_posterior(const NiwParams& prior, const ClusterStats& stats);
/// Log Student-t posterior predictive density of `x` under NIW parameters.
[[nodiscard]] double niw_log_predictive(const NiwParams& params, const Vec2& x);
/// One (mean, covariance) draw; the returned component has weight 1.
[[nodiscard]] GaussianComponent draw_niw(const NiwParams& params, Rng& rng);

/// Cluster labels for the points currently modelled by the mixture, with
/// per-cluster sufficient statistics. Label -1 marks a point not yet seated.
class ClusterState {
 public:
  ClusterState() = default;
  /// All points unseated.
  explicit ClusterState(std::size_t n_points) : labels_(n_points, -1) {}
  /// Labels must be -1 or in [0, K); statistics are rebuilt from the points
  /// and empty labels are compacted away.
  ClusterState(std::span<const Vec2> points, std::vector<int> labels);

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::span<const int> labels() const noexcept { return labels_; }
  [[nodiscard]] std::size_t num_clusters() const noexcept { return clusters_.size(); }
  [[nodiscard]] const ClusterStats& cluster(std::size_t k) const { return clusters_[k]; }
  [[nodiscard]] std::size_t num_seated() const noexcept;

  /// k == num_clusters() opens a new cluster.
  void seat(std::size_t i, std::size_t k, const Vec2& x);
  /// Removes point i from its cluster, deleting the cluster if it empties.
  void unseat(std::size_t i, const Vec2& x);

  /// True when the stored statistics match a from-scratch recomputation.
  [[nodiscard]] bool consistent_with(std::span<const Vec2> points, double tol = 1e-8) const;

 private:
  std::vector<int> labels_;
  std::vector<ClusterStats> clusters_;
};

/// Unnormalized log seating weights for point i (which must be unseated):
/// log(n_k) + log predictive under cluster k for every existing cluster,
/// followed by log(chi) + log prior predictive for a new cluster.
[[nodiscard]] std::vector<double> crp_log_weights(const ClusterState& state,
                                                  std::span<const Vec2> points, std::size_t i,
                                                  double chi, const NiwParams& prior);

/// One collapsed-Gibbs pass reseating every point in index order.
void crp_gibbs_sweep(ClusterState& state, std::span<const Vec2> points, double chi,
                     const NiwParams& prior, Rng& rng);
/// Same, reseating only the points listed in `active` (in that order).
void crp_gibbs_sweep(ClusterState& state, std::span<const Vec2> points,
                     std::span<const std::size_t> active, double chi, const NiwParams& prior,
                     Rng& rng);

/// Draw of the mixing measure given the seated points. Each cluster gets one
/// atom from its NIW posterior; cluster weights and the weight of a fresh
/// DP(chi, G0) part are Dirichlet(n_1, ..., n_K, chi). The fresh part is
/// stick-broken into `truncation` base draws (fractions ~ Beta(1, chi), the
/// last atom takes the remaining mass). Returns K + truncation components.
[[nodiscard]] GaussianMixture sample_dp_realization(const ClusterState& state,
                                                    std::span<const Vec2> points, double chi,
                                                    const NiwParams& prior,
                                                    std::size_t truncation, Rng& rng);

/// Auxiliary-variable update of the concentration under a Gamma(shape, rate)
/// prior (Escobar and West). With n == 0 this is a prior draw.
[[nodiscard]] double update_dp_concentration(double chi, std::size_t n_clusters, std::size_t n,
                                             Rng& rng, double prior_shape = 1.0,
                                             double prior_rate = 1.0);

[[nodiscard]] DPConfig update_dp_hyperparams(const ClusterState& state, const DPConfig& config,
                                             Rng& rng);

}  // namespace etas
