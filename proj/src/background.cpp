#include "etas/background.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "etas/csv.hpp"
#include "etas/error.hpp"

namespace etas {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool is_spd(const Mat2& m) {
  return m.allFinite() && std::abs(m(0, 1) - m(1, 0)) <= 1e-12 * (std::abs(m(0, 1)) + 1.0) &&
         m(0, 0) > 0.0 && m.determinant() > 0.0;
}

Vec2 correlated_normal(const Mat2& chol, Rng& rng) {
  const Vec2 z(draw_normal(rng), draw_normal(rng));
  return chol * z;
}

}  // namespace

Vec2 UniformDensity::sample(Rng& rng) const {
  return {region.x_min + uniform01(rng) * (region.x_max - region.x_min),
          region.y_min + uniform01(rng) * (region.y_max - region.y_min)};
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorKind::domain, "mixture needs at least one component");
  cache_.reserve(components_.size());
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight) || !c.mean.allFinite()) {
      throw Error(ErrorKind::domain, "mixture component has invalid weight or mean");
    }
    if (!is_spd(c.cov)) {
      throw Error(ErrorKind::domain, "mixture covariance is not symmetric positive-definite");
    }
    total_weight_ += c.weight;
    const double log_weight = c.weight > 0.0 ? std::log(c.weight) : -INFINITY;
    Eigen::LLT<Mat2> llt(c.cov);
    cache_.push_back(Cached{c.cov.inverse(), llt.matrixL(),
                            log_weight - kLog2Pi - 0.5 * std::log(c.cov.determinant())});
  }
  if (!(total_weight_ > 0.0)) throw Error(ErrorKind::domain, "mixture weights sum to zero");
}

double GaussianMixture::density(double x, double y) const noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const Vec2 r = Vec2(x, y) - components_[k].mean;
    const double quad = r.dot(cache_[k].precision * r);
    sum += std::exp(cache_[k].log_norm - 0.5 * quad);
  }
  return sum;
}

Vec2 GaussianMixture::sample(Rng& rng) const {
  std::vector<double> w(components_.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = components_[k].weight;
  const auto k = draw_categorical(rng, w, total_weight_);
  return components_[k].mean + correlated_normal(cache_[k].chol, rng);
}

KdeDensity::KdeDensity(std::vector<Vec2> points, const Mat2& bandwidth)
    : points_(std::move(points)), bandwidth_(bandwidth) {
  if (points_.empty()) throw Error(ErrorKind::domain, "KDE needs at least one point");
  if (!is_spd(bandwidth_)) {
    throw Error(ErrorKind::domain, "KDE bandwidth is singular or not positive-definite");
  }
  precision_ = bandwidth_.inverse();
  chol_ = Eigen::LLT<Mat2>(bandwidth_).matrixL();
  log_norm_ = -std::log(static_cast<double>(points_.size())) - kLog2Pi -
              0.5 * std::log(bandwidth_.determinant());
}

double KdeDensity::density(double x, double y) const noexcept {
  const Vec2 z(x, y);
  double sum = 0.0;
  for (const auto& p : points_) {
    const Vec2 r = z - p;
    sum += std::exp(-0.5 * r.dot(precision_ * r));
  }
  return std::exp(log_norm_) * sum;
}

Vec2 KdeDensity::sample(Rng& rng) const {
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(points_.size()));
  return points_[std::min(i, points_.size() - 1)] + correlated_normal(chol_, rng);
}

double FaultLineDensity::density(double x, double y) const noexcept {
  if (x < x_lo || x > x_hi) return 0.0;
  const double r = (y - a - b * x) / sigma;
  return std::exp(-0.5 * r * r) / (sigma * std::sqrt(2.0 * std::numbers::pi)) / (x_hi - x_lo);
}

Vec2 FaultLineDensity::sample(Rng& rng) const {
  const double x = x_lo + uniform01(rng) * (x_hi - x_lo);
  return {x, a + b * x + sigma * draw_normal(rng)};
}

double eval_density(const BackgroundDensity& phi, double x, double y) {
  return std::visit([x, y](const auto& d) { return d.density(x, y); }, phi);
}

Vec2 sample_location(const BackgroundDensity& phi, Rng& rng) {
  return std::visit([&rng](const auto& d) { return d.sample(rng); }, phi);
}

std::string_view kind_name(const BackgroundDensity& phi) noexcept {
  switch (phi.index()) {
    case 0: return "uniform";
    case 1: return "kde";
    case 2: return "mixture";
    default: return "fault_line";
  }
}

Mat2 silverman_bandwidth(std::span<const Vec2> points) {
  const auto n = static_cast<double>(points.size());
  if (points.size() < 2) throw Error(ErrorKind::domain, "bandwidth rule needs at least two points");
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= n;
  Vec2 ss = Vec2::Zero();
  for (const auto& p : points) ss += (p - mean).cwiseAbs2();
  const Vec2 sd = (ss / (n - 1.0)).cwiseSqrt();
  const double factor = 1.06 * std::pow(n, -0.2);
  Mat2 h = Mat2::Zero();
  h(0, 0) = std::pow(factor * sd(0), 2);
  h(1, 1) = std::pow(factor * sd(1), 2);
  return h;
}

KdeDensity fit_kde(std::span<const Vec2> points, const std::optional<Mat2>& bandwidth) {
  if (points.size() < 2) throw Error(ErrorKind::domain, "KDE needs at least two points");
  const Mat2 h = bandwidth ? *bandwidth : silverman_bandwidth(points);
  return KdeDensity(std::vector<Vec2>(points.begin(), points.end()), h);
}

std::vector<Vec2> event_locations(std::span<const Event> events) {
  std::vector<Vec2> out;
  out.reserve(events.size());
  for (const auto& e : events) out.emplace_back(e.x, e.y);
  return out;
}

void write_mixture_rows(std::ostream& out, const GaussianMixture& mixture,
                        std::optional<std::size_t> sample_index) {
  using csv::format_double;
  for (const auto& c : mixture.components()) {
    if (sample_index) out << *sample_index << ',';
    out << format_double(c.weight) << ',' << format_double(c.mean(0)) << ','
        << format_double(c.mean(1)) << ',' << format_double(c.cov(0, 0)) << ','
        << format_double(c.cov(0, 1)) << ',' << format_double(c.cov(1, 1)) << '\n';
  }
}

}  // namespace etas
