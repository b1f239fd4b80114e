#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "etas/catalog.hpp"
#include "etas/random.hpp"

namespace etas {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Constant density over the region, zero outside.
struct UniformDensity {
  Region region;

  [[nodiscard]] double density(double x, double y) const noexcept {
    return region.contains(x, y) ? 1.0 / region.area() : 0.0;
  }
  [[nodiscard]] Vec2 sample(Rng& rng) const;
};

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
};

/// Finite mixture of bivariate normals. Used for realizations of the
/// Dirichlet-process background and for the synthetic Gaussian densities.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  [[nodiscard]] double density(double x, double y) const noexcept;
  [[nodiscard]] Vec2 sample(Rng& rng) const;
  [[nodiscard]] std::span<const GaussianComponent> components() const noexcept {
    return components_;
  }

 private:
  struct Cached {
    Mat2 precision;
    Mat2 chol;
    double log_norm;  // log weight - log 2pi - log|cov|/2
  };
  std::vector<GaussianComponent> components_;
  std::vector<Cached> cache_;
  double total_weight_ = 0.0;
};

/// Fixed Gaussian kernel density estimate with a full bandwidth matrix H.
class KdeDensity {
 public:
  KdeDensity(std::vector<Vec2> points, const Mat2& bandwidth);

  [[nodiscard]] double density(double x, double y) const noexcept;
  [[nodiscard]] Vec2 sample(Rng& rng) const;
  [[nodiscard]] std::span<const Vec2> points() const noexcept { return points_; }
  [[nodiscard]] const Mat2& bandwidth() const noexcept { return bandwidth_; }

 private:
  std::vector<Vec2> points_;
  Mat2 bandwidth_;
  Mat2 precision_;
  Mat2 chol_;
  double log_norm_;
};

/// x ~ Uniform(x_lo, x_hi), y = a + b x + N(0, sigma^2): events along a fault.
struct FaultLineDensity {
  double a = 1.0;
  double b = 2.0;
  double sigma = 0.5;
  double x_lo = -2.0;
  double x_hi = 2.0;

  [[nodiscard]] double density(double x, double y) const noexcept;
  [[nodiscard]] Vec2 sample(Rng& rng) const;
};

using BackgroundDensity = std::variant<UniformDensity, KdeDensity, GaussianMixture, FaultLineDensity>;

[[nodiscard]] double eval_density(const BackgroundDensity& phi, double x, double y);
[[nodiscard]] Vec2 sample_location(const BackgroundDensity& phi, Rng& rng);
[[nodiscard]] std::string_view kind_name(const BackgroundDensity& phi) noexcept;

/// Per-axis normal-reference rule: H = diag((1.06 sd_k n^{-1/5})^2).
[[nodiscard]] Mat2 silverman_bandwidth(std::span<const Vec2> points);

/// KDE over all given points. Throws for fewer than two points or a
/// bandwidth that is not symmetric positive-definite.
[[nodiscard]] KdeDensity fit_kde(std::span<const Vec2> points,
                                 const std::optional<Mat2>& bandwidth = std::nullopt);
[[nodiscard]] std::vector<Vec2> event_locations(std::span<const Event> events);

/// Rows `weight,mean_x,mean_y,cov_xx,cov_xy,cov_yy`, optionally prefixed by a
/// sample index column.
void write_mixture_rows(std::ostream& out, const GaussianMixture& mixture,
                        std::optional<std::size_t> sample_index = std::nullopt);

}  // namespace etas
