#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "etas/background.hpp"
#include "etas/error.hpp"
#include "etas/random.hpp"
#include "quadrature.hpp"

using namespace etas;
using std::numbers::pi;

TEST_CASE("uniform density") {
  const BackgroundDensity u = UniformDensity{Region{0, 4, 0, 6}};
  CHECK(eval_density(u, 1, 1) == doctest::Approx(1.0 / 24));
  CHECK(eval_density(u, 5, 1) == 0.0);
  CHECK(eval_density(u, 1, -0.1) == 0.0);
  Rng rng = make_rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto p = sample_location(u, rng);
    CHECK((p.x() > 0 && p.x() < 4 && p.y() > 0 && p.y() < 6));
  }
}

TEST_CASE("KDE values") {
  const BackgroundDensity one = KdeDensity({Vec2(0, 0)}, Mat2::Identity());
  CHECK(eval_density(one, 0, 0) == doctest::Approx(1 / (2 * pi)));

  const auto two = fit_kde(std::vector<Vec2>{Vec2(0, 0), Vec2(3, 1)}, Mat2::Identity());
  auto n2 = [](double dx, double dy) { return std::exp(-0.5 * (dx * dx + dy * dy)) / (2 * pi); };
  for (auto [x, y] : {std::pair{0.0, 0.0}, std::pair{1.0, 2.0}, std::pair{3.0, 1.0}}) {
    CHECK(two.density(x, y) == doctest::Approx(0.5 * n2(x, y) + 0.5 * n2(x - 3, y - 1)));
  }
  CHECK_THROWS_AS((void)fit_kde(std::vector<Vec2>{Vec2(0, 0)}), Error);
  Mat2 singular;
  singular << 1, 1, 1, 1;
  CHECK_THROWS_AS((void)fit_kde(std::vector<Vec2>{Vec2(0, 0), Vec2(1, 1)}, singular), Error);
}

TEST_CASE("Silverman bandwidth on standard normal points") {
  Rng rng = make_rng(3);
  std::vector<Vec2> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(draw_normal(rng), 2.0 * draw_normal(rng));
  const Mat2 H = silverman_bandwidth(pts);
  // Welford variances, independent of the library's two-pass sums.
  double mx = 0, my = 0, sx = 0, sy = 0;
  for (int k = 0; k < 100; ++k) {
    const double dx = pts[k].x() - mx, dy = pts[k].y() - my;
    mx += dx / (k + 1);
    my += dy / (k + 1);
    sx += dx * (pts[k].x() - mx);
    sy += dy * (pts[k].y() - my);
  }
  const double f = 1.06 * std::pow(100.0, -0.2);
  CHECK(H(0, 0) == doctest::Approx(f * f * sx / 99).epsilon(1e-12));
  CHECK(H(1, 1) == doctest::Approx(f * f * sy / 99).epsilon(1e-12));
  CHECK(H(0, 1) == 0.0);
  CHECK(H(1, 0) == 0.0);
  CHECK((H(0, 0) >= 0.05 && H(0, 0) <= 1.5));
}

TEST_CASE("KDE integrates to one") {
  Rng rng = make_rng(4);
  std::vector<Vec2> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(draw_normal(rng), draw_normal(rng));
  const auto kde = fit_kde(pts);
  const double total = integrate_box([&](double x, double y) { return kde.density(x, y); }, -10, 10, -10, 10);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("Gaussian mixture values, normalization and sampling") {
  const GaussianMixture one({GaussianComponent{1.0, Vec2::Zero(), Mat2::Identity()}});
  CHECK(one.density(0, 0) == doctest::Approx(1 / (2 * pi)));

  Mat2 cov;
  cov << 0.5, 0.2, 0.2, 0.3;
  const GaussianMixture mix({GaussianComponent{0.3, Vec2(-1, 0), cov},
                             GaussianComponent{0.7, Vec2(2, 1), Mat2::Identity() * 0.4}});
  const double total = integrate_box([&](double x, double y) { return mix.density(x, y); }, -12, 12, -12, 12);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  Rng rng = make_rng(9);
  const int n = 200000;
  Vec2 mean = Vec2::Zero();
  for (int i = 0; i < n; ++i) mean += mix.sample(rng);
  mean /= n;
  const Vec2 expected = 0.3 * Vec2(-1, 0) + 0.7 * Vec2(2, 1);
  CHECK(mean.x() == doctest::Approx(expected.x()).epsilon(0.01));
  CHECK(mean.y() == doctest::Approx(expected.y()).epsilon(0.01));

  Mat2 bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(GaussianMixture({GaussianComponent{1.0, Vec2::Zero(), bad}}), Error);
}

TEST_CASE("fault-line density integrates to one") {
  const FaultLineDensity f;
  const double total = integrate_box([&](double x, double y) { return f.density(x, y); }, -2, 2, -8, 10);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixture rows") {
  const GaussianMixture one({GaussianComponent{1.0, Vec2(0.5, -1), Mat2::Identity() * 2}});
  std::ostringstream s;
  write_mixture_rows(s, one, 7);
  CHECK(s.str() == "7,1,0.5,-1,2,0,2\n");
}
