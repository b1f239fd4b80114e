#include "etas/chain_io.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <string>

#include "etas/csv.hpp"
#include "etas/error.hpp"
#include "etas/run_config.hpp"

namespace etas {

namespace {

constexpr std::string_view kChainHeader =
    "sample_index,mu_bar,K_bar,alpha,c,p,d,q,n_immigrants,loglik_full,loglik_branched";
constexpr std::string_view kSidecarHeader =
    "sample_index,weight,mean_x,mean_y,cov_xx,cov_xy,cov_yy";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return in;
}

std::vector<double> parse_row(std::string_view line, std::size_t width,
                              const std::filesystem::path& path, std::size_t line_no) {
  const auto fields = csv::split_fields(line);
  const auto where = path.string() + ":" + std::to_string(line_no);
  if (fields.size() != width) {
    throw Error(ErrorKind::data, where + ": expected " + std::to_string(width) + " fields");
  }
  std::vector<double> out;
  out.reserve(width);
  for (const auto f : fields) {
    const auto v = csv::parse_double(f);
    if (!v) throw Error(ErrorKind::data, where + ": malformed number '" + std::string(f) + "'");
    out.push_back(*v);
  }
  return out;
}

bool close_enough(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)); }

}  // namespace

void write_chain_csv(const Chain& chain, std::ostream& out) {
  out << kChainHeader << "\n";
  for (const auto& s : chain.samples) {
    const auto& p = s.params;
    out << s.index;
    for (double v : {p.mu_bar, p.K_bar, p.alpha, p.c, p.p, p.d, p.q}) {
      out << "," << csv::format_double(v);
    }
    out << "," << s.branching.num_immigrants() << "," << csv::format_double(s.loglik_full) << ","
        << csv::format_double(s.loglik_branched) << "\n";
  }
}

void write_dp_sidecar(const Chain& chain, std::ostream& out) {
  out << kSidecarHeader << "\n";
  for (const auto& s : chain.samples) {
    if (!s.phi) continue;
    if (const auto* mix = std::get_if<GaussianMixture>(s.phi.get())) {
      write_mixture_rows(out, *mix, s.index);
    }
  }
}

void save_chain(const Chain& chain, const Catalog& fitted, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string());
  {
    auto out = open_out(dir / "chain.csv");
    write_chain_csv(chain, out);
  }
  RunConfig meta;
  meta.set("background", std::string(to_string(chain.background)));
  meta.set("beta_gr", csv::format_double(chain.beta_gr));
  meta.set("t_start", csv::format_double(fitted.t_start()));
  meta.set("t_end", csv::format_double(fitted.t_end()));
  meta.set("n_events", std::to_string(fitted.size()));
  meta.set("M0", csv::format_double(fitted.M0()));
  const auto& r = fitted.region();
  meta.set("region", csv::format_double(r.x_min) + "," + csv::format_double(r.x_max) + "," +
                         csv::format_double(r.y_min) + "," + csv::format_double(r.y_max));
  if (chain.background == BackgroundKind::kde && !chain.samples.empty()) {
    const auto& h = std::get<KdeDensity>(*chain.samples.front().phi).bandwidth();
    meta.set("kde_bandwidth", csv::format_double(h(0, 0)) + "," + csv::format_double(h(0, 1)) +
                                  "," + csv::format_double(h(1, 1)));
  }
  {
    auto out = open_out(dir / "chain_meta.txt");
    meta.write(out);
  }
  if (chain.background == BackgroundKind::dp) {
    auto out = open_out(dir / "dp_realizations.csv");
    write_dp_sidecar(chain, out);
  }
}

Chain load_chain(const std::filesystem::path& dir, const Catalog& fitted) {
  const auto meta = RunConfig::load(dir / "chain_meta.txt");
  Chain chain;
  chain.background = parse_background_kind(meta.require("background"));
  chain.beta_gr = meta.require_number("beta_gr");
  if (static_cast<std::size_t>(meta.require_number("n_events")) != fitted.size() ||
      !close_enough(meta.require_number("t_start"), fitted.t_start()) ||
      !close_enough(meta.require_number("t_end"), fitted.t_end())) {
    throw Error(ErrorKind::data, "chain in " + dir.string() +
                                     " was fitted to a different catalog or window");
  }
  const auto bounds = meta.numbers("region");
  if (bounds.size() != 4) throw Error(ErrorKind::data, "chain metadata has no valid region");
  const Region region{bounds[0], bounds[1], bounds[2], bounds[3]};

  std::shared_ptr<const BackgroundDensity> shared_phi;
  if (chain.background == BackgroundKind::uniform) {
    shared_phi = std::make_shared<const BackgroundDensity>(UniformDensity{region});
  } else if (chain.background == BackgroundKind::kde) {
    const auto h = meta.numbers("kde_bandwidth");
    if (h.size() != 3) throw Error(ErrorKind::data, "chain metadata has no KDE bandwidth");
    Mat2 H;
    H << h[0], h[1], h[1], h[2];
    shared_phi = std::make_shared<const BackgroundDensity>(
        fit_kde(event_locations(fitted.events()), H));
  }

  std::map<std::size_t, std::vector<GaussianComponent>> mixtures;
  if (chain.background == BackgroundKind::dp) {
    const auto path = dir / "dp_realizations.csv";
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || csv::trim(line) != kSidecarHeader) {
      throw Error(ErrorKind::data, path.string() + ": unexpected header");
    }
    while (std::getline(in, line)) {
      ++line_no;
      if (csv::trim(line).empty()) continue;
      const auto v = parse_row(line, 7, path, line_no);
      GaussianComponent g;
      g.weight = v[1];
      g.mean = Vec2(v[2], v[3]);
      g.cov << v[4], v[5], v[5], v[6];
      mixtures[static_cast<std::size_t>(v[0])].push_back(g);
    }
  }

  const auto path = dir / "chain.csv";
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || csv::trim(line) != kChainHeader) {
    throw Error(ErrorKind::data, path.string() + ": unexpected header");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto v = parse_row(line, 11, path, line_no);
    PosteriorSample s;
    s.index = static_cast<std::size_t>(v[0]);
    s.params = EtasParams{v[1], v[2], v[3], v[4], v[5], v[6], v[7], chain.beta_gr};
    s.loglik_full = v[9];
    s.loglik_branched = v[10];
    if (chain.background == BackgroundKind::dp) {
      const auto it = mixtures.find(s.index);
      if (it == mixtures.end()) {
        throw Error(ErrorKind::data,
                    "no DP realization for sample " + std::to_string(s.index) + " in " + dir.string());
      }
      s.phi = std::make_shared<const BackgroundDensity>(GaussianMixture(it->second));
    } else {
      s.phi = shared_phi;
    }
    chain.samples.push_back(std::move(s));
  }
  return chain;
}

}  // namespace etas
