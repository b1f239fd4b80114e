#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etas/background.hpp"
#include "etas/catalog.hpp"
#include "etas/kernels.hpp"
#include "etas/sampler.hpp"

namespace etas {

struct DicResult {
  double dic = 0.0;
  double p_dic_alt = 0.0;  // 2 * sample variance of the log-likelihoods
  /// Plug-in log-likelihood: the largest recorded value, since a posterior
  /// mean of a random background density is not well defined.
  double plug_in_loglik = 0.0;
};

/// Throws Error(domain) for fewer than two values.
[[nodiscard]] DicResult compute_dic(std::span<const double> logliks);
[[nodiscard]] DicResult compute_dic(const Chain& chain);

/// Log-likelihood of the test events on [test.t_start, test.t_end] given the
/// whole history: training events trigger into the test window and the
/// compensator covers the test window only.
[[nodiscard]] double oos_log_likelihood(const Catalog& train, const Catalog& test,
                                        const EtasParams& params, const BackgroundDensity& phi);

struct EvaluationReport {
  DicResult dic;
  double oos_mean_loglik = 0.0;
  double oos_max_loglik = 0.0;
  std::vector<std::size_t> oos_sample_index;
  std::vector<double> oos_loglik;
  // The split the report was computed on.
  double train_start = 0.0;
  double split_time = 0.0;
  double test_end = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// DIC over every sample plus the out-of-sample value of every `stride`-th
/// retained sample (starting with the first).
[[nodiscard]] EvaluationReport evaluate_chain(const Chain& chain, const Catalog& train,
                                              const Catalog& test, std::size_t stride = 50);

struct NamedReport {
  std::string model;
  EvaluationReport report;
};

struct ComparisonTable {
  std::vector<NamedReport> rows;  // sorted by model name
  std::size_t best_dic = 0;
  std::size_t best_oos_max = 0;
  std::size_t best_oos_mean = 0;
  /// Set when one model wins all three metrics.
  std::optional<std::size_t> overall_best;
};

/// Ranks at least two reports computed on the same split. Ties go to the
/// alphabetically first model so the result ignores input order.
[[nodiscard]] ComparisonTable compare_models(std::span<const NamedReport> reports);

/// Fixed-width text table. A single report is printed without best flags.
void write_comparison_table(std::ostream& out, std::span<const NamedReport> reports);
/// One row, columns DIC_<model>... then oos_mean_<model>... then oos_max_<model>...
void write_summary_csv(std::ostream& out, std::span<const NamedReport> reports);

}  // namespace etas
