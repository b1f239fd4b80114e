#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <vector>

#include "etas/chain_io.hpp"
#include "etas/error.hpp"
#include "etas/evaluation.hpp"
#include "etas/simulator.hpp"

using namespace etas;
using std::numbers::pi;

namespace {

const Region kBox{0, 2, 0, 2};

EtasParams toy_params() {
  EtasParams p;
  p.mu_bar = 0.7;
  p.K_bar = 0.3;
  p.alpha = 0.9;
  p.c = 0.05;
  p.p = 1.4;
  p.d = 0.02;
  p.q = 1.7;
  return p;
}

NamedReport named(std::string model, double dic, double oos_mean, double oos_max) {
  NamedReport r;
  r.model = std::move(model);
  r.report.dic.dic = dic;
  r.report.oos_mean_loglik = oos_mean;
  r.report.oos_max_loglik = oos_max;
  r.report.split_time = 300;
  r.report.test_end = 350;
  return r;
}

}  // namespace

TEST_CASE("DIC from log-likelihood draws") {
  const std::vector<double> two{-10, -12};
  const auto r = compute_dic(two);
  CHECK(r.p_dic_alt == doctest::Approx(4.0));
  CHECK(r.plug_in_loglik == -10.0);
  CHECK(r.dic == doctest::Approx(28.0));
  const std::vector<double> flat(5, -3.5);
  CHECK(compute_dic(flat).p_dic_alt == 0.0);
  CHECK(compute_dic(flat).dic == doctest::Approx(7.0));
  CHECK_THROWS_AS((void)compute_dic(std::vector<double>{-1.0}), Error);
  CHECK_THROWS_AS((void)compute_dic(std::vector<double>{}), Error);
}

TEST_CASE("out-of-sample value for an empty, quiet test window") {
  auto P = toy_params();
  P.K_bar = 0.0;
  const Catalog train({{1, 0.2, 1, 1}}, 10, 0, kBox);
  const Catalog test({}, 14, 0, kBox, 10);
  CHECK(oos_log_likelihood(train, test, P, UniformDensity{kBox}) == doctest::Approx(-0.7 * 4));
}

TEST_CASE("out-of-sample value by hand") {
  const auto P = toy_params();
  const Catalog train({{1.0, 0.5, 0.5, 0.5}, {3.0, 0.1, 1.0, 1.2}}, 5, 0, kBox);
  const Catalog test({{5.5, 0.3, 0.55, 0.45}, {6.0, 0.0, 1.5, 1.5}, {7.25, 0.8, 0.6, 0.5}}, 8, 0, kBox, 5);
  const double phi = 0.25;
  auto g = [&](double z) { return (P.p - 1) * std::pow(P.c, P.p - 1) * std::pow(z + P.c, -P.p); };
  auto G = [&](double z) { return z <= 0 ? 0.0 : 1 - std::pow(P.c / (z + P.c), P.p - 1); };
  auto f = [&](double r2) { return (P.q - 1) * std::pow(P.d, P.q - 1) / pi * std::pow(r2 + P.d, -P.q); };
  std::vector<Event> all{train[0], train[1], test[0], test[1], test[2]};
  double expect = 0.0;
  for (std::size_t i = 2; i < all.size(); ++i) {
    double lam = P.mu_bar * phi;
    for (std::size_t j = 0; j < i; ++j) {
      const double r2 = std::pow(all[i].x - all[j].x, 2) + std::pow(all[i].y - all[j].y, 2);
      lam += P.K_bar * std::exp(P.alpha * all[j].m) * g(all[i].t - all[j].t) * f(r2);
    }
    expect += std::log(lam);
  }
  expect -= P.mu_bar * 3;
  for (const auto& e : all) expect -= P.K_bar * std::exp(P.alpha * e.m) * (G(8 - e.t) - G(5 - e.t));
  CHECK(oos_log_likelihood(train, test, P, UniformDensity{kBox}) == doctest::Approx(expect).epsilon(1e-10));

  // Also the difference of full-window log-likelihoods.
  const Catalog whole(all, 8, 0, kBox);
  const double diff = log_likelihood(whole, P, UniformDensity{kBox}) - log_likelihood(train, P, UniformDensity{kBox});
  CHECK(oos_log_likelihood(train, test, P, UniformDensity{kBox}) == doctest::Approx(diff).epsilon(1e-10));

  CHECK_THROWS_AS((void)oos_log_likelihood(test, train, P, UniformDensity{kBox}), Error);
}

TEST_CASE("out-of-sample value is additive over consecutive windows") {
  SimulationSpec spec;
  spec.region = Region{-3, 3, -3, 3};
  spec.phi = make_synthetic_phi("phi1");
  spec.t_end = 120;
  spec.seed = 3;
  const auto sim = simulate_catalog(spec);
  const auto [train, rest] = split_window(sim.catalog, 80);
  const auto [first, second] = split_window(rest, 100);
  const Catalog train_plus = split_window(sim.catalog, 100).first;
  const auto& P = spec.params;
  const double whole = oos_log_likelihood(train, rest, P, spec.phi);
  const double parts = oos_log_likelihood(train, first, P, spec.phi) +
                       oos_log_likelihood(train_plus, second, P, spec.phi);
  CHECK(whole == doctest::Approx(parts).epsilon(1e-10));
}

TEST_CASE("model comparison") {
  const std::vector<NamedReport> reports{named("kde", 110, -50, -40), named("dp", 100, -45, -38)};
  const auto t = compare_models(reports);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].model == "dp");
  CHECK(t.best_dic == 0);
  CHECK(t.overall_best == std::optional<std::size_t>(0));

  const std::vector<NamedReport> swapped{reports[1], reports[0]};
  const auto u = compare_models(swapped);
  CHECK(u.rows[0].model == t.rows[0].model);
  CHECK(u.best_dic == t.best_dic);
  CHECK(u.overall_best == t.overall_best);

  const std::vector<NamedReport> split{named("kde", 90, -50, -40), named("dp", 100, -45, -38)};
  const auto v = compare_models(split);
  CHECK(v.rows[v.best_dic].model == "kde");
  CHECK(v.rows[v.best_oos_max].model == "dp");
  CHECK_FALSE(v.overall_best.has_value());

  const std::vector<NamedReport> tie{named("b", 100, -45, -38), named("a", 100, -45, -38)};
  const auto w = compare_models(tie);
  CHECK(w.rows[*w.overall_best].model == "a");

  auto bad = reports;
  bad[1].report.split_time = 301;
  CHECK_THROWS_WITH_AS((void)compare_models(bad), doctest::Contains("different data splits"), Error);
  CHECK_THROWS_AS((void)compare_models(std::span<const NamedReport>(reports).first(1)), Error);

  std::ostringstream table, csv;
  write_comparison_table(table, reports);
  CHECK(table.str().find("*") != std::string::npos);
  write_summary_csv(csv, reports);
  CHECK(csv.str().rfind("DIC_dp,DIC_kde,oos_mean_dp,oos_mean_kde,oos_max_dp,oos_max_kde\n", 0) == 0);
}

TEST_CASE("chain files round-trip to the same evaluation") {
  SimulationSpec spec;
  spec.region = Region{-3, 3, -3, 3};
  spec.phi = make_synthetic_phi("phi2");
  spec.t_end = 120;
  spec.seed = 6;
  const auto sim = simulate_catalog(spec);
  const auto [train, test] = split_window(sim.catalog, 100);
  SamplerConfig cfg;
  cfg.n_samples = 60;
  cfg.thinning = 2;
  const auto dir = std::filesystem::temp_directory_path() / "etas_eval_roundtrip";
  std::filesystem::remove_all(dir);
  for (auto kind : {BackgroundKind::uniform, BackgroundKind::kde, BackgroundKind::dp}) {
    cfg.background = kind;
    const auto chain = run_chain(train, cfg, PriorSpec{});
    save_chain(chain, train, dir / to_string(kind));
    CHECK(std::filesystem::exists(dir / to_string(kind) / "dp_realizations.csv") ==
          (kind == BackgroundKind::dp));
    const auto loaded = load_chain(dir / to_string(kind), train);
    REQUIRE(loaded.samples.size() == chain.samples.size());
    const auto a = evaluate_chain(chain, train, test, 7);
    const auto b = evaluate_chain(loaded, train, test, 7);
    CHECK(a.dic.dic == b.dic.dic);
    CHECK(a.oos_sample_index == b.oos_sample_index);
    CHECK(a.oos_sample_index.size() == 9);
    for (std::size_t k = 0; k < a.oos_loglik.size(); ++k) {
      CHECK(a.oos_loglik[k] == doctest::Approx(b.oos_loglik[k]).epsilon(1e-12));
    }
    // Plug-in value is the best recorded log-likelihood, so p_DICalt drives the gap.
    CHECK(a.dic.dic == doctest::Approx(-2 * a.dic.plug_in_loglik + 2 * a.dic.p_dic_alt));
  }
  // A different catalog is rejected.
  CHECK_THROWS_AS((void)load_chain(dir / "kde", test), Error);
  std::filesystem::remove_all(dir);
}
