#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "etas/dp_mixture.hpp"
#include "etas/error.hpp"

using namespace etas;
using std::numbers::pi;

namespace {

// Log marginal likelihood of points under the NIW prior, by the closed form
// for the evidence (independent of the predictive code path).
double log_evidence(const std::vector<Vec2>& pts, const NiwParams& prior) {
  const double n = static_cast<double>(pts.size());
  if (pts.empty()) return 0.0;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= n;
  Mat2 scatter = Mat2::Zero();
  for (const auto& p : pts) scatter += (p - mean) * (p - mean).transpose();
  const double kn = prior.kappa + n;
  const double vn = prior.df + n;
  const Mat2 psi_n = prior.scale + scatter +
                     (prior.kappa * n / kn) * (mean - prior.center) * (mean - prior.center).transpose();
  auto lmvgamma = [](double a) { return 0.5 * std::log(pi) + std::lgamma(a) + std::lgamma(a - 0.5); };
  return -n * std::log(pi) + lmvgamma(vn / 2) - lmvgamma(prior.df / 2) +
         0.5 * prior.df * std::log(prior.scale.determinant()) - 0.5 * vn * std::log(psi_n.determinant()) +
         std::log(prior.kappa / kn);
}

double log_predictive_oracle(const std::vector<Vec2>& cluster, const Vec2& x, const NiwParams& prior) {
  auto with = cluster;
  with.push_back(x);
  return log_evidence(with, prior) - log_evidence(cluster, prior);
}

// Restricted growth strings enumerate all set partitions.
void partitions(std::size_t n, std::vector<int>& cur, int max_label,
                std::vector<std::vector<int>>& out) {
  if (cur.size() == n) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k <= max_label + 1; ++k) {
    cur.push_back(k);
    partitions(n, cur, std::max(max_label, k), out);
    cur.pop_back();
  }
}

NiwParams toy_prior() {
  NiwParams p;
  p.center = Vec2(0.5, 0.2);
  p.kappa = 0.1;
  p.df = 4;
  p.scale << 2.0, 0.3, 0.3, 1.5;
  return p;
}

}  // namespace

TEST_CASE("predictive density matches the evidence ratio") {
  const auto prior = toy_prior();
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(0.3, -0.2), Vec2(2, 2)};
  ClusterState state(pts, {0, 0, -1});
  const auto logw = crp_log_weights(state, pts, 2, 0.7, prior);
  REQUIRE(logw.size() == 2);
  const double join = std::log(2.0) + log_predictive_oracle({pts[0], pts[1]}, pts[2], prior);
  const double fresh = std::log(0.7) + log_predictive_oracle({}, pts[2], prior);
  CHECK(std::abs(logw[0] - join) < 1e-10);
  CHECK(std::abs(logw[1] - fresh) < 1e-10);
  // And for a single-member cluster.
  ClusterState s2(pts, {0, -1, 1});
  const auto w2 = crp_log_weights(s2, pts, 1, 0.7, prior);
  REQUIRE(w2.size() == 3);
  CHECK(std::abs(w2[0] - log_predictive_oracle({pts[0]}, pts[1], prior)) < 1e-10);
  CHECK(std::abs(w2[1] - log_predictive_oracle({pts[2]}, pts[1], prior)) < 1e-10);
}

TEST_CASE("predictive integrates to one") {
  const auto prior = toy_prior();
  double total = 0.0;
  const double h = 0.1;
  for (double x = -60; x < 60; x += h) {
    for (double y = -60; y < 60; y += h) total += std::exp(niw_log_predictive(prior, Vec2(x, y))) * h * h;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(2e-3));  // heavy t tails beyond the box
}

TEST_CASE("cluster statistics stay consistent") {
  Rng rng = make_rng(2);
  std::vector<Vec2> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(draw_normal(rng) + (i % 2 ? 3 : -3), draw_normal(rng));
  ClusterState state(pts.size());
  const auto prior = toy_prior();
  for (int s = 0; s < 20; ++s) {
    crp_gibbs_sweep(state, pts, 1.0, prior, rng);
    CHECK(state.consistent_with(pts));
  }
  CHECK(state.num_seated() == pts.size());
  // Labels contiguous.
  for (int l : state.labels()) CHECK((l >= 0 && static_cast<std::size_t>(l) < state.num_clusters()));

  const std::vector<Vec2> four(pts.begin(), pts.begin() + 4);
  ClusterState manual(four, {5, 5, -1, 9});
  CHECK(manual.num_clusters() == 2);
  manual.unseat(0, four[0]);
  manual.unseat(1, four[1]);
  CHECK(manual.num_clusters() == 1);
  CHECK(manual.labels()[3] == 0);
  CHECK(manual.consistent_with(four));
}

TEST_CASE("single point forms one cluster") {
  Rng rng = make_rng(1);
  const std::vector<Vec2> pts{Vec2(1, 1)};
  ClusterState state(1);
  crp_gibbs_sweep(state, pts, 1.0, NiwParams{}, rng);
  CHECK(state.num_clusters() == 1);
}

TEST_CASE("far apart points split") {
  Rng rng = make_rng(8);
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1e6, 0)};
  ClusterState state(2);
  int two = 0;
  const int n = 2000;
  for (int s = 0; s < n; ++s) {
    crp_gibbs_sweep(state, pts, 1.0, NiwParams{}, rng);
    two += state.num_clusters() == 2;
  }
  CHECK(two > 0.99 * n);
}

TEST_CASE("CRP sweeps sample the partition posterior") {
  const auto prior = toy_prior();
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(0.4, 0.1), Vec2(1.5, 1.2), Vec2(1.8, 0.9), Vec2(-0.7, 1.4)};
  const double chi = 1.3;
  std::vector<std::vector<int>> all;
  std::vector<int> cur;
  partitions(pts.size(), cur, -1, all);
  REQUIRE(all.size() == 52);

  // Exact posterior of the number of clusters.
  std::vector<double> exact(6, 0.0);
  for (const auto& labels : all) {
    const int K = *std::max_element(labels.begin(), labels.end()) + 1;
    double lw = K * std::log(chi);
    for (int k = 0; k < K; ++k) {
      std::vector<Vec2> members;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (labels[i] == k) members.push_back(pts[i]);
      }
      lw += std::lgamma(static_cast<double>(members.size())) + log_evidence(members, prior);
    }
    exact[K] += std::exp(lw);
  }
  const double z = std::accumulate(exact.begin(), exact.end(), 0.0);
  for (double& v : exact) v /= z;

  Rng rng = make_rng(21);
  ClusterState state(pts.size());
  for (int s = 0; s < 100; ++s) crp_gibbs_sweep(state, pts, chi, prior, rng);
  const int batches = 100, per = 2000;
  std::vector<std::vector<double>> batch_freq(6, std::vector<double>(batches, 0.0));
  for (int b = 0; b < batches; ++b) {
    for (int s = 0; s < per; ++s) {
      crp_gibbs_sweep(state, pts, chi, prior, rng);
      batch_freq[state.num_clusters()][b] += 1.0 / per;
    }
  }
  for (int K = 1; K <= 5; ++K) {
    const auto& f = batch_freq[K];
    const double mean = std::accumulate(f.begin(), f.end(), 0.0) / batches;
    double ss = 0;
    for (double v : f) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (batches - 1) / batches);
    INFO("K=" << K << " exact=" << exact[K] << " mc=" << mean << " se=" << se);
    CHECK(std::abs(mean - exact[K]) < 3 * se + 1e-4);
  }
}

TEST_CASE("NIW draws have the right moments") {
  Rng rng = make_rng(13);
  NiwParams p;
  p.center = Vec2(1, -2);
  p.kappa = 2.0;
  p.df = 7.0;
  p.scale << 3.0, 1.0, 1.0, 2.0;
  const int n = 100000;
  Mat2 cov_mean = Mat2::Zero();
  Vec2 mean_mean = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    const auto g = draw_niw(p, rng);
    cov_mean += g.cov;
    mean_mean += g.mean;
  }
  cov_mean /= n;
  mean_mean /= n;
  const Mat2 expected = p.scale / (p.df - 3.0);  // inverse-Wishart mean in 2-D
  CHECK(cov_mean(0, 0) == doctest::Approx(expected(0, 0)).epsilon(0.02));
  CHECK(cov_mean(0, 1) == doctest::Approx(expected(0, 1)).epsilon(0.03));
  CHECK(cov_mean(1, 1) == doctest::Approx(expected(1, 1)).epsilon(0.02));
  CHECK(mean_mean.x() == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean_mean.y() == doctest::Approx(-2.0).epsilon(0.01));
}

TEST_CASE("stick-breaking realizations") {
  Rng rng = make_rng(5);
  std::vector<Vec2> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(0.05 * draw_normal(rng) + 4, 0.05 * draw_normal(rng) - 1);
  NiwParams prior;
  prior.center = Vec2(4, -1);
  prior.scale = 4.0 * 0.0025 * Mat2::Identity();
  ClusterState state(pts, std::vector<int>(30, 0));

  SUBCASE("weights are a probability vector") {
    const auto mix = sample_dp_realization(state, pts, 1.0, prior, 50, rng);
    REQUIRE(mix.components().size() == 51);
    double total = 0.0;
    for (const auto& c : mix.components()) {
      CHECK(c.weight >= 0.0);
      total += c.weight;
    }
    CHECK(std::abs(total - 1.0) < 1e-14);
  }
  SUBCASE("small concentration concentrates on the cluster") {
    double mass = 0.0;
    const int draws = 100;
    for (int k = 0; k < draws; ++k) {
      const auto mix = sample_dp_realization(state, pts, 1e-6, prior, 50, rng);
      // Mass of the +-3 sd box around the cluster, per component (axis-wise
      // normal CDF product is exact only for diagonal covariances, so use the
      // fact that the box contains a 3-sd ellipse when it is wide enough).
      double inside = 0.0;
      for (const auto& c : mix.components()) {
        const double sx = std::sqrt(c.cov(0, 0)), sy = std::sqrt(c.cov(1, 1));
        auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
        const double px = cdf((4.15 - c.mean.x()) / sx) - cdf((3.85 - c.mean.x()) / sx);
        const double py = cdf((-0.85 - c.mean.y()) / sy) - cdf((-1.15 - c.mean.y()) / sy);
        // Lower bound via Frechet: P(A and B) >= P(A) + P(B) - 1.
        inside += c.weight * std::max(0.0, px + py - 1.0);
      }
      mass += inside / draws;
    }
    CHECK(mass > 0.95);
  }
  SUBCASE("no seated points gives a prior draw") {
    ClusterState empty(pts.size());
    Vec2 avg = Vec2::Zero();
    NiwParams wide;
    wide.center = Vec2(10, 20);
    wide.kappa = 1.0;
    const int draws = 2000;
    for (int k = 0; k < draws; ++k) {
      const auto mix = sample_dp_realization(empty, pts, 1.0, wide, 5, rng);
      for (const auto& c : mix.components()) avg += c.mean / (5.0 * draws);
    }
    CHECK(avg.x() == doctest::Approx(10).epsilon(0.02));
    CHECK(avg.y() == doctest::Approx(20).epsilon(0.02));
  }
}

TEST_CASE("realization weights match the Dirichlet posterior") {
  // Two seated clusters (20 and 10 points) and chi = 1: the cluster weights
  // are Dirichlet(20, 10, 1) components.
  Rng rng = make_rng(8);
  std::vector<Vec2> pts;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    pts.emplace_back(i < 20 ? -2.0 : 2.0, 0.1 * i);
    labels.push_back(i < 20 ? 0 : 1);
  }
  ClusterState state(pts, labels);
  NiwParams prior;
  const int draws = 20000;
  double s1 = 0.0, s1sq = 0.0, s2 = 0.0, tail = 0.0;
  for (int k = 0; k < draws; ++k) {
    const auto mix = sample_dp_realization(state, pts, 1.0, prior, 50, rng);
    REQUIRE(mix.components().size() == 52);
    const double w1 = mix.components()[0].weight;
    s1 += w1;
    s1sq += w1 * w1;
    s2 += mix.components()[1].weight;
    tail += mix.components().back().weight;
  }
  const double a0 = 31.0;
  const double mean1 = 20.0 / a0;
  const double var1 = 20.0 * (a0 - 20.0) / (a0 * a0 * (a0 + 1.0));
  CHECK(std::abs(s1 / draws - mean1) < 4 * std::sqrt(var1 / draws));
  CHECK((s1sq / draws - std::pow(s1 / draws, 2)) == doctest::Approx(var1).epsilon(0.05));
  CHECK(s2 / draws == doctest::Approx(10.0 / a0).epsilon(0.02));
  // Residual stick of the fresh part: E = (1/31) * 2^-49.
  CHECK(tail / draws < 1e-12);
}

TEST_CASE("concentration update") {
  Rng rng = make_rng(17);
  const int n = 1000;
  double one = 0.0, many = 0.0;
  for (int i = 0; i < n; ++i) {
    one += update_dp_concentration(1.0, 1, 200, rng);
    many += update_dp_concentration(1.0, 200, 200, rng);
  }
  CHECK(one < many);

  // No data: a Gamma(1, 1) prior draw.
  const int m = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < m; ++i) {
    const double v = update_dp_concentration(3.0, 0, 0, rng);
    sum += v;
    sumsq += v * v;
  }
  CHECK(sum / m == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sumsq / m - (sum / m) * (sum / m) == doctest::Approx(1.0).epsilon(0.05));

  Rng a = make_rng(4), b = make_rng(4);
  CHECK(update_dp_concentration(2.0, 3, 50, a) == update_dp_concentration(2.0, 3, 50, b));

  DPConfig cfg;
  cfg.update_hyperparams = true;
  ClusterState state(std::vector<Vec2>{Vec2(0, 0)}, {0});
  const auto next = update_dp_hyperparams(state, cfg, rng);
  CHECK(next.chi != cfg.chi);
  CHECK(next.niw_rho == cfg.niw_rho);
}

TEST_CASE("data-dependent NIW defaults") {
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(2, 0), Vec2(0, 4), Vec2(2, 4)};
  DPConfig cfg;
  const auto p = resolve_niw(cfg, pts);
  CHECK(p.center.x() == doctest::Approx(1));
  CHECK(p.center.y() == doctest::Approx(2));
  CHECK(p.kappa == 0.01);
  CHECK(p.df == 4);
  CHECK(p.scale(0, 0) == doctest::Approx(4 * 4.0 / 3));
  CHECK(p.scale(1, 1) == doctest::Approx(4 * 16.0 / 3));
  CHECK_THROWS_AS((void)resolve_niw(cfg, std::vector<Vec2>{Vec2(0, 0)}), Error);
  // Collinear points fall back to the marginal spreads.
  const auto line = resolve_niw(cfg, std::vector<Vec2>{Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)});
  CHECK(line.scale(0, 1) == 0.0);
  CHECK(line.scale(0, 0) > 0.0);
}
