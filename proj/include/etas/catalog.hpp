#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace etas {

/// One earthquake. Time is in days since the catalog origin; coordinates are
/// planar (degrees or km, but consistent within a catalog). No great-circle
/// correction is applied anywhere.
struct Event {
  double t = 0.0;
  double m = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Axis-aligned observation region.
struct Region {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  [[nodiscard]] double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }
  [[nodiscard]] bool contains(double x, double y) const noexcept {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  /// Throws Error(data) unless x_min < x_max and y_min < y_max.
  void validate() const;

  friend bool operator==(const Region&, const Region&) = default;
};

/// Time-ordered events on the window [t_start, t_end], all at or above the
/// magnitude of completeness. Immutable once built.
///
/// Events sharing a timestamp keep their input order; the k-th duplicate is
/// shifted by k * 1e-9 days so event times are strictly increasing. Events
/// outside `region` are allowed (simulated offspring live in infinite space).
class Catalog {
 public:
  static constexpr double kTieJitter = 1e-9;

  Catalog(std::vector<Event> events, double t_end, double M0, Region region,
          double t_start = 0.0);

  [[nodiscard]] std::span<const Event> events() const noexcept { return events_; }
  [[nodiscard]] const Event& operator[](std::size_t i) const { return events_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
  [[nodiscard]] bool empty() const noexcept { return events_.empty(); }

  [[nodiscard]] double t_start() const noexcept { return t_start_; }
  [[nodiscard]] double t_end() const noexcept { return t_end_; }
  [[nodiscard]] double length() const noexcept { return t_end_ - t_start_; }
  [[nodiscard]] double M0() const noexcept { return M0_; }
  [[nodiscard]] const Region& region() const noexcept { return region_; }

  /// Events strictly before `t`.
  [[nodiscard]] std::span<const Event> before(double t) const;

 private:
  std::vector<Event> events_;
  double t_start_;
  double t_end_;
  double M0_;
  Region region_;
};

struct CatalogLoadOptions {
  double M0 = 0.0;
  /// Events outside are dropped. When absent, the padded bounding box of the
  /// retained events becomes the catalog region.
  std::optional<Region> region;
  /// ISO-8601 date/datetime or decimal days. Required when the file uses ISO
  /// timestamps; decimal-day times are shifted by a decimal origin.
  std::optional<std::string> origin;
  /// Window end in days since origin. Defaults to the last retained event.
  std::optional<double> window_end;
};

/// Reads a `time,magnitude,x,y` CSV. Malformed rows are reported with their
/// line number.
[[nodiscard]] Catalog load_catalog(const std::filesystem::path& path,
                                   const CatalogLoadOptions& options);
[[nodiscard]] Catalog read_catalog(std::istream& in, const CatalogLoadOptions& options,
                                   std::string_view source_name = "<stream>");

void save_catalog(const Catalog& catalog, const std::filesystem::path& path);
void write_catalog(const Catalog& catalog, std::ostream& out);

/// Training part holds t < t_split on [t_start, t_split]; test part holds
/// t >= t_split on [t_split, t_end]. Times are not shifted.
[[nodiscard]] std::pair<Catalog, Catalog> split_window(const Catalog& catalog, double t_split);

/// Days since 1970-01-01 for an ISO-8601 date or datetime
/// (`YYYY-MM-DD[Thh:mm[:ss[.fff]]][Z]`, `T` or a space as separator).
[[nodiscard]] std::optional<double> parse_iso_days(std::string_view text);

}  // namespace etas
