#include "etas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "etas/csv.hpp"
#include "etas/error.hpp"

namespace etas {

DicResult compute_dic(std::span<const double> logliks) {
  if (logliks.size() < 2) {
    throw Error(ErrorKind::domain, "DIC needs at least two posterior samples (got " +
                                       std::to_string(logliks.size()) + ")");
  }
  const auto n = static_cast<double>(logliks.size());
  const double mean = std::accumulate(logliks.begin(), logliks.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : logliks) ss += (v - mean) * (v - mean);
  DicResult out;
  out.p_dic_alt = 2.0 * ss / (n - 1.0);
  out.plug_in_loglik = *std::max_element(logliks.begin(), logliks.end());
  out.dic = -2.0 * out.plug_in_loglik + 2.0 * out.p_dic_alt;
  return out;
}

DicResult compute_dic(const Chain& chain) {
  std::vector<double> ll;
  ll.reserve(chain.samples.size());
  for (const auto& s : chain.samples) ll.push_back(s.loglik_full);
  return compute_dic(ll);
}

double oos_log_likelihood(const Catalog& train, const Catalog& test, const EtasParams& params,
                          const BackgroundDensity& phi) {
  const double from = test.t_start();
  const double to = test.t_end();
  if (train.t_end() > from) {
    throw Error(ErrorKind::domain, "test window must start at or after the training window end");
  }
  const auto hist = train.events();
  const auto fut = test.events();
  const double M0 = train.M0();
  const bool triggering = params.K_bar > 0.0;

  auto trigger = [&](const Event& parent, const Event& child) {
    const double dx = child.x - parent.x;
    const double dy = child.y - parent.y;
    return params.K_bar * std::exp(params.alpha * (parent.m - M0)) *
           omori_density(child.t - parent.t, params.c, params.p) *
           spatial_density(dx, dy, params.d, params.q);
  };

  double sum_log = 0.0;
  for (std::size_t i = 0; i < fut.size(); ++i) {
    const double bg = params.mu_bar * eval_density(phi, fut[i].x, fut[i].y);
    double lambda = bg;
    if (triggering) {
      for (const auto& e : hist) lambda += trigger(e, fut[i]);
      for (std::size_t k = 0; k < i; ++k) lambda += trigger(fut[k], fut[i]);
    }
    if (!(lambda > 0.0)) {
      if (!(bg > 0.0) && (!triggering || (hist.empty() && i == 0))) {
        return -std::numeric_limits<double>::infinity();
      }
      lambda = std::numeric_limits<double>::min();
    }
    sum_log += std::log(lambda);
  }

  double compensator = params.mu_bar * (to - from);
  if (triggering) {
    auto window_mass = [&](const Event& e) {
      return std::exp(params.alpha * (e.m - M0)) *
             (omori_mass(to - e.t, params.c, params.p) -
              omori_mass(std::max(0.0, from - e.t), params.c, params.p));
    };
    double s = 0.0;
    for (const auto& e : hist) s += window_mass(e);
    for (const auto& e : fut) s += window_mass(e);
    compensator += params.K_bar * s;
  }
  return sum_log - compensator;
}

EvaluationReport evaluate_chain(const Chain& chain, const Catalog& train, const Catalog& test,
                                std::size_t stride) {
  if (chain.samples.empty()) throw Error(ErrorKind::domain, "chain has no samples");
  if (stride < 1) throw Error(ErrorKind::config, "evaluation stride must be >= 1");
  EvaluationReport r;
  r.dic = compute_dic(chain);
  r.train_start = train.t_start();
  r.split_time = test.t_start();
  r.test_end = test.t_end();
  r.n_train = train.size();
  r.n_test = test.size();
  for (std::size_t k = 0; k < chain.samples.size(); k += stride) {
    const auto& s = chain.samples[k];
    if (!s.phi) throw Error(ErrorKind::domain, "posterior sample has no background density");
    r.oos_sample_index.push_back(s.index);
    r.oos_loglik.push_back(oos_log_likelihood(train, test, s.params, *s.phi));
  }
  r.oos_mean_loglik = std::accumulate(r.oos_loglik.begin(), r.oos_loglik.end(), 0.0) /
                      static_cast<double>(r.oos_loglik.size());
  r.oos_max_loglik = *std::max_element(r.oos_loglik.begin(), r.oos_loglik.end());
  return r;
}

namespace {

bool same_split(const EvaluationReport& a, const EvaluationReport& b) {
  return a.train_start == b.train_start && a.split_time == b.split_time &&
         a.test_end == b.test_end && a.n_train == b.n_train && a.n_test == b.n_test;
}

std::vector<NamedReport> sorted_by_name(std::span<const NamedReport> reports) {
  std::vector<NamedReport> rows(reports.begin(), reports.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const NamedReport& a, const NamedReport& b) { return a.model < b.model; });
  return rows;
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

ComparisonTable compare_models(std::span<const NamedReport> reports) {
  if (reports.size() < 2) throw Error(ErrorKind::domain, "model comparison needs at least two reports");
  for (const auto& r : reports) {
    if (!same_split(r.report, reports.front().report)) {
      throw Error(ErrorKind::domain, "reports '" + reports.front().model + "' and '" + r.model +
                                         "' were computed on different data splits");
    }
  }
  ComparisonTable t;
  t.rows = sorted_by_name(reports);
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    const auto& cur = t.rows[k].report;
    if (cur.dic.dic < t.rows[t.best_dic].report.dic.dic) t.best_dic = k;
    if (cur.oos_max_loglik > t.rows[t.best_oos_max].report.oos_max_loglik) t.best_oos_max = k;
    if (cur.oos_mean_loglik > t.rows[t.best_oos_mean].report.oos_mean_loglik) t.best_oos_mean = k;
  }
  if (t.best_dic == t.best_oos_max && t.best_dic == t.best_oos_mean) t.overall_best = t.best_dic;
  return t;
}

void write_comparison_table(std::ostream& out, std::span<const NamedReport> reports) {
  std::optional<ComparisonTable> table;
  std::vector<NamedReport> rows;
  if (reports.size() >= 2) {
    table = compare_models(reports);
    rows = table->rows;
  } else {
    rows = sorted_by_name(reports);
  }
  out << std::left << std::setw(12) << "model" << std::right << std::setw(14) << "DIC"
      << std::setw(12) << "p_DICalt" << std::setw(14) << "oos_mean" << std::setw(14) << "oos_max"
      << "  best\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k].report;
    std::string flags;
    if (table) {
      if (table->best_dic == k) flags += " DIC";
      if (table->best_oos_mean == k) flags += " oos_mean";
      if (table->best_oos_max == k) flags += " oos_max";
      if (table->overall_best == k) flags += " *";
    }
    out << std::left << std::setw(12) << rows[k].model << std::right << std::setw(14)
        << fixed(r.dic.dic) << std::setw(12) << fixed(r.dic.p_dic_alt) << std::setw(14)
        << fixed(r.oos_mean_loglik) << std::setw(14) << fixed(r.oos_max_loglik) << " " << flags
        << "\n";
  }
}

void write_summary_csv(std::ostream& out, std::span<const NamedReport> reports) {
  const auto rows = sorted_by_name(reports);
  std::string header, values;
  auto add = [&](const std::string& name, double v) {
    header += (header.empty() ? "" : ",") + name;
    values += (values.empty() ? "" : ",") + csv::format_double(v);
  };
  for (const auto& r : rows) add("DIC_" + r.model, r.report.dic.dic);
  for (const auto& r : rows) add("oos_mean_" + r.model, r.report.oos_mean_loglik);
  for (const auto& r : rows) add("oos_max_" + r.model, r.report.oos_max_loglik);
  out << header << "\n" << values << "\n";
}

}  // namespace etas
