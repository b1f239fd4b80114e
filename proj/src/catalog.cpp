#include "etas/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "etas/csv.hpp"
#include "etas/error.hpp"

namespace etas {

namespace {

// Howard Hinnant's days_from_civil.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

bool read_int(std::string_view& s, std::size_t digits, int& out) {
  if (s.size() < digits) return false;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + digits, out);
  if (ec != std::errc{} || end != s.data() + digits) return false;
  s.remove_prefix(digits);
  return true;
}

bool eat(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

Region bounding_region(std::span<const Event> events) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& e : events) {
    x0 = std::min(x0, e.x);
    x1 = std::max(x1, e.x);
    y0 = std::min(y0, e.y);
    y1 = std::max(y1, e.y);
  }
  const double px = x1 > x0 ? 0.01 * (x1 - x0) : 0.5;
  const double py = y1 > y0 ? 0.01 * (y1 - y0) : 0.5;
  return Region{x0 - px, x1 + px, y0 - py, y1 + py};
}

}  // namespace

void Region::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max) || !std::isfinite(area())) {
    throw Error(ErrorKind::data, "region bounds must satisfy x_min < x_max and y_min < y_max");
  }
}

Catalog::Catalog(std::vector<Event> events, double t_end, double M0, Region region,
                 double t_start)
    : events_(std::move(events)), t_start_(t_start), t_end_(t_end), M0_(M0), region_(region) {
  region_.validate();
  if (!(t_start_ < t_end_)) {
    throw Error(ErrorKind::data, "catalog window must satisfy t_start < t_end");
  }
  for (const auto& e : events_) {
    if (!std::isfinite(e.t) || !std::isfinite(e.m) || !std::isfinite(e.x) || !std::isfinite(e.y)) {
      throw Error(ErrorKind::data, "catalog contains a non-finite event field");
    }
    if (e.t < t_start_ || e.t > t_end_) {
      throw Error(ErrorKind::data, "event time " + csv::format_double(e.t) +
                                       " lies outside the catalog window");
    }
    if (e.m < M0_) {
      throw Error(ErrorKind::data, "event magnitude " + csv::format_double(e.m) +
                                       " is below the magnitude of completeness");
    }
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  std::size_t dup = 0;
  double tied_time = 0.0;
  for (std::size_t i = 1; i < events_.size(); ++i) {
    if (events_[i].t == (dup > 0 ? tied_time : events_[i - 1].t)) {
      if (dup == 0) tied_time = events_[i - 1].t;
      ++dup;
      events_[i].t = tied_time + static_cast<double>(dup) * kTieJitter;
    } else {
      dup = 0;
    }
    if (!(events_[i].t > events_[i - 1].t)) {
      throw Error(ErrorKind::data, "tie-breaking jitter collides with a neighbouring event");
    }
  }
}

std::span<const Event> Catalog::before(double t) const {
  const auto it = std::lower_bound(events_.begin(), events_.end(), t,
                                   [](const Event& e, double value) { return e.t < value; });
  return {events_.data(), static_cast<std::size_t>(it - events_.begin())};
}

std::optional<double> parse_iso_days(std::string_view s) {
  s = csv::trim(s);
  int year = 0, month = 0, day = 0;
  if (!read_int(s, 4, year) || !eat(s, '-') || !read_int(s, 2, month) || !eat(s, '-') ||
      !read_int(s, 2, day)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
  double seconds = 0.0;
  if (!s.empty() && (s.front() == 'T' || s.front() == ' ')) {
    s.remove_prefix(1);
    int hour = 0, minute = 0;
    if (!read_int(s, 2, hour) || !eat(s, ':') || !read_int(s, 2, minute)) return std::nullopt;
    double sec = 0.0;
    if (eat(s, ':')) {
      std::size_t len = 0;
      while (len < s.size() && (std::isdigit(static_cast<unsigned char>(s[len])) || s[len] == '.'))
        ++len;
      const auto parsed = csv::parse_double(s.substr(0, len));
      if (!parsed) return std::nullopt;
      sec = *parsed;
      s.remove_prefix(len);
    }
    if (hour > 23 || minute > 59 || sec >= 61.0) return std::nullopt;
    seconds = hour * 3600.0 + minute * 60.0 + sec;
  }
  if (!s.empty() && s.front() == 'Z') s.remove_prefix(1);
  if (!s.empty()) return std::nullopt;
  const auto days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return static_cast<double>(days) + seconds / 86400.0;
}

Catalog read_catalog(std::istream& in, const CatalogLoadOptions& options,
                     std::string_view source_name) {
  const std::string source(source_name);
  if (options.region) options.region->validate();

  std::optional<double> origin_iso;
  std::optional<double> origin_numeric;
  if (options.origin) {
    if (auto numeric = csv::parse_double(*options.origin)) {
      origin_numeric = numeric;
    } else if (auto iso = parse_iso_days(*options.origin)) {
      origin_iso = iso;
    } else {
      throw Error(ErrorKind::config, "unparseable origin timestamp '" + *options.origin + "'");
    }
  }

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!csv::trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorKind::data, source + ": empty file");
  {
    const auto header = csv::split_fields(line);
    if (header.size() != 4 || header[0] != "time" || header[1] != "magnitude" ||
        header[2] != "x" || header[3] != "y") {
      throw Error(ErrorKind::data,
                  source + ":" + std::to_string(line_no) + ": expected header 'time,magnitude,x,y'");
    }
  }

  std::vector<Event> events;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    const auto fields = csv::split_fields(line);
    if (fields.size() != 4) throw Error(ErrorKind::data, where + "expected 4 fields");

    double t = 0.0;
    if (auto numeric = csv::parse_double(fields[0])) {
      t = *numeric - origin_numeric.value_or(0.0);
    } else if (auto iso = parse_iso_days(fields[0])) {
      if (!origin_iso) {
        throw Error(ErrorKind::config, where + "ISO timestamps require an ISO origin");
      }
      t = *iso - *origin_iso;
    } else {
      throw Error(ErrorKind::data, where + "unparseable time '" + std::string(fields[0]) + "'");
    }
    const auto m = csv::parse_double(fields[1]);
    const auto x = csv::parse_double(fields[2]);
    const auto y = csv::parse_double(fields[3]);
    if (!m || !x || !y) throw Error(ErrorKind::data, where + "unparseable numeric field");
    if (!std::isfinite(t) || !std::isfinite(*m) || !std::isfinite(*x) || !std::isfinite(*y)) {
      throw Error(ErrorKind::data, where + "non-finite field");
    }

    if (*m < options.M0 || t < 0.0) continue;
    if (options.window_end && t > *options.window_end) continue;
    if (options.region && !options.region->contains(*x, *y)) continue;
    events.push_back(Event{t, *m, *x, *y});
  }
  if (events.empty()) throw Error(ErrorKind::data, source + ": no events left after filtering");

  double t_end = 0.0;
  if (options.window_end) {
    t_end = *options.window_end;
  } else {
    for (const auto& e : events) t_end = std::max(t_end, e.t);
  }
  if (!(t_end > 0.0)) {
    throw Error(ErrorKind::data, source + ": window end must be positive");
  }
  const Region region = options.region ? *options.region : bounding_region(events);
  return Catalog(std::move(events), t_end, options.M0, region);
}

Catalog load_catalog(const std::filesystem::path& path, const CatalogLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open catalog file '" + path.string() + "'");
  return read_catalog(in, options, path.string());
}

void write_catalog(const Catalog& catalog, std::ostream& out) {
  out << "time,magnitude,x,y\n";
  for (const auto& e : catalog.events()) {
    out << csv::format_double(e.t) << ',' << csv::format_double(e.m) << ','
        << csv::format_double(e.x) << ',' << csv::format_double(e.y) << '\n';
  }
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write catalog file '" + path.string() + "'");
  write_catalog(catalog, out);
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

std::pair<Catalog, Catalog> split_window(const Catalog& catalog, double t_split) {
  if (!(t_split > catalog.t_start() && t_split < catalog.t_end())) {
    throw Error(ErrorKind::domain, "split time " + csv::format_double(t_split) +
                                       " must lie strictly inside the catalog window");
  }
  const auto head = catalog.before(t_split);
  std::vector<Event> train(head.begin(), head.end());
  std::vector<Event> test(catalog.events().begin() + static_cast<std::ptrdiff_t>(head.size()),
                          catalog.events().end());
  return {Catalog(std::move(train), t_split, catalog.M0(), catalog.region(), catalog.t_start()),
          Catalog(std::move(test), catalog.t_end(), catalog.M0(), catalog.region(), t_split)};
}

}  // namespace etas
