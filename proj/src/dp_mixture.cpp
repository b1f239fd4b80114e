#include "etas/dp_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "etas/error.hpp"

namespace etas {

namespace {

bool spd(const Mat2& m) { return m.allFinite() && m(0, 0) > 0.0 && m.determinant() > 0.0; }

}  // namespace

void DPConfig::validate() const {
  if (!(chi > 0.0)) throw Error(ErrorKind::config, "DP concentration must be positive");
  if (!(niw_rho > 0.0)) throw Error(ErrorKind::config, "NIW rho must be positive");
  if (!(niw_df > 1.0)) throw Error(ErrorKind::config, "NIW degrees of freedom must exceed 1");
  if (niw_V && !spd(*niw_V)) throw Error(ErrorKind::config, "NIW V must be positive-definite");
  if (truncation < 1) throw Error(ErrorKind::config, "stick-breaking truncation must be >= 1");
  if (sweeps < 1) throw Error(ErrorKind::config, "CRP sweeps per update must be >= 1");
}

NiwParams resolve_niw(const DPConfig& config, std::span<const Vec2> points) {
  NiwParams out;
  out.kappa = config.niw_rho;
  out.df = config.niw_df;
  if ((!config.niw_xi || !config.niw_V) && points.size() < 3) {
    throw Error(ErrorKind::domain, "data-dependent NIW defaults need at least three points");
  }
  const auto n = static_cast<double>(points.size());
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) centroid += p;
  if (!points.empty()) centroid /= n;
  out.center = config.niw_xi.value_or(centroid);

  Mat2 V;
  if (config.niw_V) {
    V = *config.niw_V;
  } else {
    V.setZero();
    for (const auto& p : points) V += (p - centroid) * (p - centroid).transpose();
    V /= n - 1.0;
    if (!spd(V)) {
      // Collinear or coincident points: keep the marginal spreads only.
      const double vx = V(0, 0) > 0.0 ? V(0, 0) : 1.0;
      const double vy = V(1, 1) > 0.0 ? V(1, 1) : 1.0;
      V = Mat2::Zero();
      V(0, 0) = vx;
      V(1, 1) = vy;
    }
  }
  out.scale = config.niw_df * V;
  return out;
}

NiwParams niw_posterior(const NiwParams& prior, const ClusterStats& stats) {
  if (stats.count == 0) return prior;
  const auto n = static_cast<double>(stats.count);
  const Vec2 mean = stats.sum / n;
  const Mat2 scatter = stats.outer - n * mean * mean.transpose();
  NiwParams post;
  post.kappa = prior.kappa + n;
  post.df = prior.df + n;
  post.center = (prior.kappa * prior.center + stats.sum) / post.kappa;
  const Vec2 shift = mean - prior.center;
  post.scale = prior.scale + scatter + (prior.kappa * n / post.kappa) * shift * shift.transpose();
  post.scale = 0.5 * (post.scale + post.scale.transpose());
  return post;
}

double niw_log_predictive(const NiwParams& params, const Vec2& x) {
  const double dof = params.df - 1.0;  // df - D + 1 with D = 2
  const Mat2 shape = params.scale * ((params.kappa + 1.0) / (params.kappa * dof));
  const double det = shape.determinant();
  if (!(det > 0.0) || !(shape(0, 0) > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorKind::numeric, "NIW predictive scale is not positive-definite");
  }
  const Vec2 r = x - params.center;
  const double delta = r.dot(shape.inverse() * r);
  return std::lgamma(0.5 * (dof + 2.0)) - std::lgamma(0.5 * dof) -
         std::log(dof * std::numbers::pi) - 0.5 * std::log(det) -
         0.5 * (dof + 2.0) * std::log1p(delta / dof);
}

GaussianComponent draw_niw(const NiwParams& params, Rng& rng) {
  // Bartlett decomposition of W ~ Wishart(df, scale^{-1}); cov = W^{-1}.
  const Mat2 L = Eigen::LLT<Mat2>(params.scale.inverse()).matrixL();
  Mat2 A = Mat2::Zero();
  A(0, 0) = std::sqrt(2.0 * draw_gamma(rng, 0.5 * params.df, 1.0));
  A(1, 1) = std::sqrt(2.0 * draw_gamma(rng, 0.5 * (params.df - 1.0), 1.0));
  A(1, 0) = draw_normal(rng);
  const Mat2 LA = L * A;
  Mat2 cov = (LA * LA.transpose()).inverse();
  cov = 0.5 * (cov + cov.transpose());
  const Mat2 chol = Eigen::LLT<Mat2>(cov / params.kappa).matrixL();
  GaussianComponent out;
  out.mean = params.center + chol * Vec2(draw_normal(rng), draw_normal(rng));
  out.cov = cov;
  return out;
}

ClusterState::ClusterState(std::span<const Vec2> points, std::vector<int> labels)
    : labels_(std::move(labels)) {
  if (labels_.size() != points.size()) {
    throw Error(ErrorKind::domain, "cluster labels do not match the number of points");
  }
  int max_label = -1;
  for (int l : labels_) {
    if (l < -1) throw Error(ErrorKind::domain, "invalid cluster label");
    max_label = std::max(max_label, l);
  }
  std::vector<int> remap(static_cast<std::size_t>(max_label + 1), -1);
  for (int& l : labels_) {
    if (l < 0) continue;
    auto& slot = remap[static_cast<std::size_t>(l)];
    if (slot < 0) {
      slot = static_cast<int>(clusters_.size());
      clusters_.emplace_back();
    }
    l = slot;
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= 0) clusters_[static_cast<std::size_t>(labels_[i])].add(points[i]);
  }
}

std::size_t ClusterState::num_seated() const noexcept {
  return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(),
                                                [](int l) { return l >= 0; }));
}

void ClusterState::seat(std::size_t i, std::size_t k, const Vec2& x) {
  if (labels_[i] >= 0) throw Error(ErrorKind::domain, "point is already seated");
  if (k > clusters_.size()) throw Error(ErrorKind::domain, "cluster index out of range");
  if (k == clusters_.size()) clusters_.emplace_back();
  clusters_[k].add(x);
  labels_[i] = static_cast<int>(k);
}

void ClusterState::unseat(std::size_t i, const Vec2& x) {
  const int k = labels_[i];
  if (k < 0) return;
  auto& c = clusters_[static_cast<std::size_t>(k)];
  c.remove(x);
  labels_[i] = -1;
  if (c.count == 0) {
    const int last = static_cast<int>(clusters_.size()) - 1;
    if (k != last) {
      clusters_[static_cast<std::size_t>(k)] = clusters_.back();
      for (int& l : labels_) {
        if (l == last) l = k;
      }
    }
    clusters_.pop_back();
  }
}

bool ClusterState::consistent_with(std::span<const Vec2> points, double tol) const {
  if (points.size() != labels_.size()) return false;
  std::vector<ClusterStats> fresh(clusters_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0) continue;
    if (static_cast<std::size_t>(labels_[i]) >= fresh.size()) return false;
    fresh[static_cast<std::size_t>(labels_[i])].add(points[i]);
  }
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (fresh[k].count == 0 || fresh[k].count != clusters_[k].count) return false;
    const double scale = 1.0 + fresh[k].outer.cwiseAbs().maxCoeff();
    if ((fresh[k].sum - clusters_[k].sum).cwiseAbs().maxCoeff() > tol * scale) return false;
    if ((fresh[k].outer - clusters_[k].outer).cwiseAbs().maxCoeff() > tol * scale) return false;
  }
  return true;
}

std::vector<double> crp_log_weights(const ClusterState& state, std::span<const Vec2> points,
                                    std::size_t i, double chi, const NiwParams& prior) {
  if (state.labels()[i] >= 0) throw Error(ErrorKind::domain, "point must be unseated");
  std::vector<double> logw;
  logw.reserve(state.num_clusters() + 1);
  for (std::size_t k = 0; k < state.num_clusters(); ++k) {
    const auto& c = state.cluster(k);
    logw.push_back(std::log(static_cast<double>(c.count)) +
                   niw_log_predictive(niw_posterior(prior, c), points[i]));
  }
  logw.push_back(std::log(chi) + niw_log_predictive(prior, points[i]));
  return logw;
}

void crp_gibbs_sweep(ClusterState& state, std::span<const Vec2> points, double chi,
                     const NiwParams& prior, Rng& rng) {
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  crp_gibbs_sweep(state, points, all, chi, prior, rng);
}

void crp_gibbs_sweep(ClusterState& state, std::span<const Vec2> points,
                     std::span<const std::size_t> active, double chi, const NiwParams& prior,
                     Rng& rng) {
  if (points.size() != state.size()) {
    throw Error(ErrorKind::domain, "cluster state does not match the number of points");
  }
  std::vector<double> w;
  for (const std::size_t i : active) {
    state.unseat(i, points[i]);
    const auto logw = crp_log_weights(state, points, i, chi, prior);
    const double top = *std::max_element(logw.begin(), logw.end());
    w.resize(logw.size());
    double total = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = std::exp(logw[k] - top);
      total += w[k];
    }
    state.seat(i, draw_categorical(rng, w, total), points[i]);
  }
}

GaussianMixture sample_dp_realization(const ClusterState& state, std::span<const Vec2> points,
                                      double chi, const NiwParams& prior, std::size_t truncation,
                                      Rng& rng) {
  if (truncation < 1) throw Error(ErrorKind::domain, "truncation must be >= 1");
  (void)points;
  // Weights of the seated clusters and of the fresh part ~ Dirichlet(n_1..n_K, chi).
  std::vector<GaussianComponent> components;
  components.reserve(state.num_clusters() + truncation);
  double total = 0.0;
  for (std::size_t k = 0; k < state.num_clusters(); ++k) {
    auto atom = draw_niw(niw_posterior(prior, state.cluster(k)), rng);
    atom.weight = draw_gamma(rng, static_cast<double>(state.cluster(k).count), 1.0);
    total += atom.weight;
    components.push_back(atom);
  }
  const double fresh_raw = draw_gamma(rng, chi, 1.0);
  total += fresh_raw;
  for (auto& c : components) c.weight /= total;
  const double fresh = fresh_raw / total;

  // The fresh part is a DP(chi, G0) draw, truncated with the residual stick
  // on the last atom.
  double remaining = 1.0;
  for (std::size_t k = 0; k < truncation; ++k) {
    auto atom = draw_niw(prior, rng);
    double w = remaining;
    if (k + 1 < truncation) {
      const double v = draw_beta(rng, 1.0, chi);
      w = v * remaining;
      remaining *= 1.0 - v;
    }
    atom.weight = fresh * w;
    components.push_back(atom);
  }
  return GaussianMixture(std::move(components));
}

double update_dp_concentration(double chi, std::size_t n_clusters, std::size_t n, Rng& rng,
                               double prior_shape, double prior_rate) {
  if (n == 0) return draw_gamma(rng, prior_shape, prior_rate);
  const auto nd = static_cast<double>(n);
  const auto k = static_cast<double>(n_clusters);
  const double eta = draw_beta(rng, chi + 1.0, nd);
  const double rate = prior_rate - std::log(eta);
  const double odds = (prior_shape + k - 1.0) / (nd * rate);
  const double weight = odds / (1.0 + odds);
  const double shape = uniform01(rng) < weight ? prior_shape + k : prior_shape + k - 1.0;
  return draw_gamma(rng, shape, rate);
}

DPConfig update_dp_hyperparams(const ClusterState& state, const DPConfig& config, Rng& rng) {
  DPConfig out = config;
  if (config.update_hyperparams) {
    out.chi = update_dp_concentration(config.chi, state.num_clusters(), state.num_seated(), rng);
  }
  return out;
}

}  // namespace etas
