#include "etas/commands.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "etas/chain_io.hpp"
#include "etas/csv.hpp"
#include "etas/error.hpp"
#include "etas/evaluation.hpp"
#include "etas/sampler.hpp"
#include "etas/simulator.hpp"

namespace etas {

namespace fs = std::filesystem;

namespace {

constexpr std::array kCatalogKeys = {std::string_view("catalog"), std::string_view("M0"),
                                     std::string_view("region"), std::string_view("origin"),
                                     std::string_view("window_end")};

void check_keys(const RunConfig& config, std::initializer_list<std::string_view> own,
                bool catalog_keys) {
  std::vector<std::string_view> allowed(own);
  allowed.push_back("out");
  allowed.push_back("seed");
  if (catalog_keys) allowed.insert(allowed.end(), kCatalogKeys.begin(), kCatalogKeys.end());
  config.check_keys(allowed);
}

fs::path prepare_out(RunConfig& config) {
  const fs::path dir = config.string_or("out", "out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::io, "cannot create output directory " + dir.string());
  }
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

void echo_config(const RunConfig& config, const fs::path& dir) {
  auto out = open_out(dir / "config.txt");
  config.write(out);
}

std::optional<Region> region_from(const RunConfig& config, const std::string& key) {
  const auto v = config.numbers(key);
  if (v.empty()) return std::nullopt;
  if (v.size() != 4) {
    throw Error(ErrorKind::config, "key '" + key + "': expected x_min,x_max,y_min,y_max");
  }
  Region r{v[0], v[1], v[2], v[3]};
  try {
    r.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, "key '" + key + "': " + e.what());
  }
  return r;
}

std::string format_list(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) s += (s.empty() ? "" : ",") + csv::format_double(v);
  return s;
}

Catalog load_catalog_from(RunConfig& config) {
  const fs::path path = config.require("catalog");
  if (!fs::exists(path)) throw Error(ErrorKind::io, "catalog file not found: " + path.string());
  CatalogLoadOptions opts;
  opts.M0 = config.require_number("M0");
  opts.region = region_from(config, "region");
  if (auto o = config.find("origin"); o && !o->empty()) opts.origin = *o;
  opts.window_end = config.optional_number("window_end");
  return load_catalog(path, opts);
}

std::optional<Mat2> symmetric_from(const RunConfig& config, const std::string& key) {
  const auto v = config.numbers(key);
  if (v.empty()) return std::nullopt;
  if (v.size() != 3) throw Error(ErrorKind::config, "key '" + key + "': expected xx,xy,yy");
  Mat2 m;
  m << v[0], v[1], v[1], v[2];
  return m;
}

void write_branching(const BranchingVector& b, const fs::path& path) {
  auto out = open_out(path);
  out << "child_index,parent_index\n";
  for (std::size_t i = 0; i < b.size(); ++i) out << i + 1 << "," << b.parent(i) << "\n";
}

}  // namespace

void cmd_simulate(RunConfig& config, std::ostream& log) {
  check_keys(config,
             {"phi", "mu_bar", "K_bar", "alpha", "c", "p", "d", "q", "beta", "region", "t_start",
              "T", "M0", "max_events"},
             false);
  const auto dir = prepare_out(config);
  const auto defaults = default_simulation_params();
  SimulationSpec spec;
  const auto phi_name = config.string_or("phi", "phi1");
  spec.params.mu_bar = config.number_or("mu_bar", defaults.mu_bar);
  spec.params.K_bar = config.number_or("K_bar", defaults.K_bar);
  spec.params.alpha = config.number_or("alpha", defaults.alpha);
  spec.params.c = config.number_or("c", defaults.c);
  spec.params.p = config.number_or("p", defaults.p);
  spec.params.d = config.number_or("d", defaults.d);
  spec.params.q = config.number_or("q", defaults.q);
  spec.params.beta_gr = config.number_or("beta", defaults.beta_gr);
  if (!config.has("region")) {
    config.set("region", phi_name == "phi3" ? format_list({-3, 3, -5, 7})
                                            : format_list({-3, 3, -3, 3}));
  }
  spec.region = *region_from(config, "region");
  if (phi_name == "uniform") {
    spec.phi = UniformDensity{spec.region};
  } else {
    try {
      spec.phi = make_synthetic_phi(phi_name);
    } catch (const Error&) {
      throw Error(ErrorKind::config,
                  "unknown phi '" + phi_name + "' (valid: uniform, phi1, phi2, phi3)");
    }
  }
  spec.t_start = config.number_or("t_start", 0.0);
  spec.t_end = config.number_or("T", 300.0);
  spec.M0 = config.number_or("M0", 0.0);
  spec.seed = config.u64_or("seed", 1);
  spec.max_events = config.count_or("max_events", 1'000'000);

  const auto sim = simulate_catalog(spec);
  save_catalog(sim.catalog, dir / "catalog.csv");
  write_branching(sim.true_branching, dir / "branching.csv");
  echo_config(config, dir);
  log << "simulated " << sim.catalog.size() << " events (" << sim.true_branching.num_immigrants()
      << " background) on [" << spec.t_start << ", " << spec.t_end << "] into " << dir.string()
      << "\n";
}

void cmd_fit(RunConfig& config, std::ostream& log) {
  check_keys(config,
             {"split_time", "background", "n_samples", "thinning", "burn_in",
              "branching_update_every", "proposal_sd", "beta", "kde_bandwidth", "prior_mu_shape",
              "prior_mu_rate", "dp_chi", "dp_rho", "dp_df", "dp_xi", "dp_V", "dp_truncation",
              "dp_sweeps", "dp_update_chi"},
             true);
  Catalog catalog = load_catalog_from(config);
  if (const auto split = config.optional_number("split_time")) {
    catalog = split_window(catalog, *split).first;
  }
  const auto dir = prepare_out(config);

  SamplerConfig sc;
  sc.background = parse_background_kind(config.string_or("background", "uniform"));
  sc.n_samples = config.count_or("n_samples", sc.n_samples);
  sc.thinning = config.count_or("thinning", sc.thinning);
  sc.burn_in = config.count_or("burn_in", sc.resolved_burn_in());
  sc.branching_update_every = config.count_or("branching_update_every", sc.branching_update_every);
  sc.proposal_sd = config.number_or("proposal_sd", sc.proposal_sd);
  sc.beta_gr = config.optional_number("beta");
  sc.kde_bandwidth = symmetric_from(config, "kde_bandwidth");
  sc.seed = config.u64_or("seed", 1);

  PriorSpec prior;
  prior.mu_shape = config.number_or("prior_mu_shape", prior.mu_shape);
  prior.mu_rate = config.number_or("prior_mu_rate", prior.mu_rate);

  DPConfig dp;
  if (sc.background == BackgroundKind::dp) {
    dp.chi = config.number_or("dp_chi", dp.chi);
    dp.niw_rho = config.number_or("dp_rho", dp.niw_rho);
    dp.niw_df = config.number_or("dp_df", dp.niw_df);
    if (const auto xi = config.numbers("dp_xi"); !xi.empty()) {
      if (xi.size() != 2) throw Error(ErrorKind::config, "key 'dp_xi': expected x,y");
      dp.niw_xi = Vec2(xi[0], xi[1]);
    }
    dp.niw_V = symmetric_from(config, "dp_V");
    dp.truncation = config.count_or("dp_truncation", dp.truncation);
    dp.sweeps = config.count_or("dp_sweeps", dp.sweeps);
    dp.update_hyperparams = config.flag_or("dp_update_chi", dp.update_hyperparams);
  }

  EtasGibbsSampler sampler(catalog, sc, prior, dp);
  const Chain chain = sampler.run();
  save_chain(chain, catalog, dir);
  write_branching(sampler.branching(), dir / "branching.csv");

  {
    auto out = open_out(dir / "fit_log.txt");
    out << "events " << catalog.size() << "\n";
    out << "window " << csv::format_double(catalog.t_start()) << " "
        << csv::format_double(catalog.t_end()) << "\n";
    out << "beta_gr " << csv::format_double(chain.beta_gr) << "\n";
    out << "iterations " << sc.total_iterations() << "\n";
    out << "retained " << chain.samples.size() << "\n";
    out << "acceptance K_bar,alpha " << csv::format_double(chain.acceptance.rate(Block::K_alpha))
        << "\n";
    out << "acceptance c,p " << csv::format_double(chain.acceptance.rate(Block::c_p)) << "\n";
    out << "acceptance d,q " << csv::format_double(chain.acceptance.rate(Block::d_q)) << "\n";
    out << "immigrants";
    for (auto n : chain.immigrant_trace) out << " " << n;
    out << "\n";
  }
  echo_config(config, dir);
  log << "fitted " << to_string(sc.background) << " model to " << catalog.size() << " events: "
      << chain.samples.size() << " samples in " << dir.string() << "\n";
}

void cmd_evaluate(RunConfig& config, std::ostream& log) {
  check_keys(config, {"split_time", "models", "stride"}, true);
  const auto models = config.require("models");
  const double split = config.require_number("split_time");
  const Catalog catalog = load_catalog_from(config);
  const auto [train, test] = split_window(catalog, split);
  const auto stride = config.count_or("stride", 50);
  const auto dir = prepare_out(config);

  std::vector<NamedReport> reports;
  for (const auto entry : csv::split_fields(models)) {
    const auto colon = entry.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw Error(ErrorKind::config, "key 'models': expected name:chain_dir entries");
    }
    const std::string name(csv::trim(entry.substr(0, colon)));
    const fs::path chain_dir(std::string(csv::trim(entry.substr(colon + 1))));
    try {
      const Chain chain = load_chain(chain_dir, train);
      reports.push_back({name, evaluate_chain(chain, train, test, stride)});
    } catch (const Error& e) {
      throw Error(e.kind(), "model '" + name + "': " + e.what());
    }
  }

  {
    auto out = open_out(dir / "report.csv");
    out << "model,sample_index,oos_loglik\n";
    for (const auto& r : reports) {
      for (std::size_t k = 0; k < r.report.oos_loglik.size(); ++k) {
        out << r.model << "," << r.report.oos_sample_index[k] << ","
            << csv::format_double(r.report.oos_loglik[k]) << "\n";
      }
    }
  }
  {
    auto out = open_out(dir / "summary.txt");
    out << "split " << csv::format_double(split) << ", test events " << test.size()
        << ", DIC plug-in: maximum recorded log-likelihood\n";
    write_comparison_table(out, reports);
  }
  {
    auto out = open_out(dir / "summary.csv");
    write_summary_csv(out, reports);
  }
  echo_config(config, dir);
  write_comparison_table(log, reports);
}

void cmd_forecast(RunConfig& config, std::ostream& log) {
  check_keys(config,
             {"split_time", "chain", "horizon", "horizon_length", "n_sims", "thresholds",
              "grid_n", "grid_samples", "grid_region"},
             true);
  const fs::path chain_dir = config.require("chain");
  Catalog history = load_catalog_from(config);
  if (const auto split = config.optional_number("split_time")) {
    history = split_window(history, *split).first;
  }
  double horizon = 0.0;
  if (const auto h = config.optional_number("horizon")) {
    horizon = *h;
  } else if (const auto len = config.optional_number("horizon_length")) {
    horizon = history.t_end() + *len;
  } else {
    throw Error(ErrorKind::config, "missing required key 'horizon' (or 'horizon_length')");
  }
  if (horizon < history.t_end()) {
    throw Error(ErrorKind::domain, "forecast horizon " + csv::format_double(horizon) +
                                       " ends before the history window end " +
                                       csv::format_double(history.t_end()));
  }
  const auto n_sims = config.count_or("n_sims", 10000);
  std::vector<double> thresholds = config.numbers("thresholds");
  if (thresholds.empty()) {
    const double m0 = history.M0();
    thresholds = {m0, m0 + 1.0, m0 + 2.0, m0 + 3.0};
    config.set("thresholds", format_list({m0, m0 + 1.0, m0 + 2.0, m0 + 3.0}));
  }
  const auto grid_n = config.count_or("grid_n", 100);
  const auto grid_samples = config.count_or("grid_samples", 200);
  if (grid_n < 2) throw Error(ErrorKind::config, "grid_n must be >= 2");
  const auto seed = config.u64_or("seed", 1);
  const auto dir = prepare_out(config);

  const Chain chain = load_chain(chain_dir, history);
  if (chain.samples.empty()) throw Error(ErrorKind::data, "chain has no samples");
  Rng rng = make_rng(seed);
  const auto summary = forecast(history, chain.samples, horizon, n_sims, thresholds, rng);

  {
    auto out = open_out(dir / "forecast_runs.csv");
    out << "run,sample_index,n_events,max_magnitude\n";
    for (std::size_t r = 0; r < summary.runs.size(); ++r) {
      const auto& run = summary.runs[r];
      out << r << "," << run.sample_index << "," << run.n_events << ",";
      if (run.n_events > 0) out << csv::format_double(run.max_magnitude);
      out << "\n";
    }
  }
  {
    auto out = open_out(dir / "forecast_summary.csv");
    out << "threshold,probability\n";
    for (std::size_t k = 0; k < summary.thresholds.size(); ++k) {
      out << csv::format_double(summary.thresholds[k]) << ","
          << csv::format_double(summary.exceedance[k]) << "\n";
    }
  }
  {
    auto out = open_out(dir / "forecast_counts.csv");
    out << "n_events,probability\n";
    const auto dist = summary.count_distribution();
    for (std::size_t k = 0; k < dist.size(); ++k) {
      out << k << "," << csv::format_double(dist[k]) << "\n";
    }
  }
  {
    // Posterior-mean background density on a regular grid, for plotting.
    if (!config.has("grid_region")) {
      const auto& r = history.region();
      config.set("grid_region", format_list({r.x_min, r.x_max, r.y_min, r.y_max}));
    }
    const Region g = *region_from(config, "grid_region");
    const std::size_t step = std::max<std::size_t>(1, chain.samples.size() / grid_samples);
    std::vector<const BackgroundDensity*> used;
    for (std::size_t k = 0; k < chain.samples.size(); k += step) {
      used.push_back(chain.samples[k].phi.get());
    }
    auto out = open_out(dir / "phi_grid.csv");
    out << "x,y,density\n";
    for (std::size_t i = 0; i < grid_n; ++i) {
      const double x = g.x_min + (g.x_max - g.x_min) * static_cast<double>(i) /
                                     static_cast<double>(grid_n - 1);
      for (std::size_t j = 0; j < grid_n; ++j) {
        const double y = g.y_min + (g.y_max - g.y_min) * static_cast<double>(j) /
                                       static_cast<double>(grid_n - 1);
        double sum = 0.0;
        for (const auto* phi : used) sum += eval_density(*phi, x, y);
        out << csv::format_double(x) << "," << csv::format_double(y) << ","
            << csv::format_double(sum / static_cast<double>(used.size())) << "\n";
      }
    }
  }
  echo_config(config, dir);
  log << "forecast over [" << history.t_end() << ", " << horizon << "] from " << n_sims
      << " simulations:";
  for (std::size_t k = 0; k < summary.thresholds.size(); ++k) {
    log << " P(m>=" << summary.thresholds[k] << ")=" << summary.exceedance[k];
  }
  log << "\n";
}

}  // namespace etas
