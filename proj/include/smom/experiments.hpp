#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smom/estimators.hpp"

namespace smom {

// Replication-study configuration. Empty n/K lists select the per-study
// defaults; `full` restores the publication-scale replication count.
struct ExperimentConfig {
  std::string experiment;  // gnormal | ppi | bingham | are-curve | trace
  std::vector<int> n_list;
  std::vector<int> k_list;
  int reps = 300;
  int pairs = 10;
  int mc = 1000;  // Monte Carlo integration size for moment matrices
  int beta = 2;
  std::uint64_t master_seed = 1;
  std::string out;
  bool full = false;
};

struct ResultRow {
  std::string experiment;
  std::string parameter;
  int n = 0;
  int k = 0;
  int pair = -1;  // -1 for estimators that do not depend on the field pair
  std::string estimator;  // sm | mle | improved_oracle | improved_plugin
  double mse = 0;
  double ratio_vs_sm = 0;
  double are_estimate = 0;
  int failures = 0;
};

// Replication studies. Data per (n, K, rep) is shared by every estimator;
// failures count replications whose estimator threw (their values are
// excluded from the MSE); a fallback to score matching is a valid estimate.
std::vector<ResultRow> run_gnormal(const ExperimentConfig& cfg);
std::vector<ResultRow> run_ppi(const ExperimentConfig& cfg);
std::vector<ResultRow> run_bingham(const ExperimentConfig& cfg);

// Canonical CSV (sorted rows, %.10g, non-finite as "nan"); byte-stable under
// any worker count.
std::string result_csv(std::vector<ResultRow> rows);
std::vector<ResultRow> parse_result_csv(const std::string& text);
void write_text(const std::string& path, const std::string& text);

// median (min, max) across field pairs per (experiment, parameter, n, K,
// estimator); figures above 100 or non-finite render as "-".
std::string summarize_csv(const std::vector<ResultRow>& rows);

// (beta, efficiency ratio, 1/3 limit) for beta = 1..beta_max.
std::string are_curve_csv(int beta_max);

// Test functions on a fixed grid: the score-matching and likelihood
// directions plus the per-pair mean improved field across replications.
std::string testfunction_trace_csv(const ExperimentConfig& cfg);

}  // namespace smom
