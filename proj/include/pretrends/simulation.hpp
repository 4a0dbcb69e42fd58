#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pretrends/estimators.hpp"

namespace pretrends {

using Rng = std::mt19937_64;

/// Per-stream seed from a base seed and a stream index (splitmix64 mixing),
/// so that replication r always sees the same draws.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Repeated cross-sections with y = slope * t * treated + N(0, sigma^2) noise.
/// slope = 0 is the parallel-trends DGP.
struct SimConfig {
  int k_max = 8;
  int n_per_cell = 250;
  double sigma_noise = 1.0;
  double trend_slope = 0.0;
  std::size_t reps = 100000;
  std::uint64_t seed = 42;
  double alpha_pretest = 0.05;
  double alpha_ci = 0.05;
  int trend_order = 1;
  /// Draw per-cell sufficient statistics instead of individual observations.
  bool fast_path = true;
  /// Use the population covariance instead of estimating it per replication.
  bool known_sigma = false;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;

  void validate() const;
};

/// Population coefficients (post, pre_{-1}, ..., pre_{-k}).
Vec population_beta(const SimConfig& config, int k);
CovarianceMatrix population_sigma(const SimConfig& config, int k);

/// Cell means and sample variances with their exact sampling laws:
/// mean ~ N(mu, sigma^2 / n), var ~ sigma^2 chi2(n - 1) / (n - 1).
CellSummaries draw_cell_summaries(const SimConfig& config, int k, Rng& rng);

/// Individual observations, n_per_cell for each (group, period).
PanelData generate_panel(const SimConfig& config, int k, Rng& rng);

/// Everything one replication contributes to a table row at one K.
struct ReplicationRecord {
  bool accepted = false;
  double trad_estimate = 0.0;
  double trad_se = 0.0;
  double eff_estimate = 0.0;
  double eff_se = 0.0;
  // Conditional quantities; NaN unless accepted.
  double tn_beta = std::numeric_limits<double>::quiet_NaN();
  double tn_beta_lower = std::numeric_limits<double>::quiet_NaN();
  double tn_beta_upper = std::numeric_limits<double>::quiet_NaN();
  double tn_gamma = std::numeric_limits<double>::quiet_NaN();
  double tn_gamma_lower = std::numeric_limits<double>::quiet_NaN();
  double tn_gamma_upper = std::numeric_limits<double>::quiet_NaN();
};

ReplicationRecord make_record(const EstimateBundle& bundle, const SimConfig& config);

struct Truth {
  double beta_post = 0.0;
  double gamma_post = 0.0;
};

/// One aggregated row. Statistics are over accepted replications (all of
/// them when k = 0); NaN marks a value that is undefined or suppressed.
struct SimTableRow {
  int k = 0;
  double slope = 0.0;
  std::size_t reps = 0;
  std::size_t n_accepted = 0;
  bool degenerate = false;
  double accept_prob = 0.0;
  double accept_prob_mcse = 0.0;

  double mean_traditional = 0.0;
  double median_traditional = 0.0;
  double bias_traditional = 0.0;
  double bias_traditional_mcse = 0.0;
  double mean_se_traditional = 0.0;
  double actual_sd_traditional = 0.0;
  double size_traditional = 0.0;
  double size_traditional_mcse = 0.0;
  double reject_beta_post_traditional = 0.0;
  double reject_zero_traditional = 0.0;

  double mean_efficient = 0.0;
  double bias_efficient = 0.0;
  double bias_efficient_mcse = 0.0;
  double mean_se_efficient = 0.0;
  double actual_sd_efficient = 0.0;
  double size_efficient = 0.0;
  double size_efficient_mcse = 0.0;
  double reject_beta_post_efficient = 0.0;
  double reject_zero_efficient = 0.0;

  double median_tn_beta = 0.0;
  double median_tn_gamma = 0.0;
  double tn_reject_beta_post = 0.0;
  double tn_reject_beta_post_mcse = 0.0;
  double tn_reject_zero_gamma = 0.0;
  double tn_reject_zero_gamma_mcse = 0.0;
  double median_width_traditional = 0.0;
  double median_width_tn_beta = 0.0;
  double median_width_tn_gamma = 0.0;
};

/// Minimum accepted replications for a row's statistics to be reported.
inline constexpr std::size_t kMinAcceptedReps = 500;

/// Aggregates the records for one K. With k = 0 every record counts as
/// accepted and conditional columns are left undefined.
SimTableRow summarize_row(int k, std::span<const ReplicationRecord> records, const Truth& truth,
                          double alpha_ci, double slope = 0.0);

/// Median with infinities taking part in the ordering; NaN if empty.
double median_of(std::vector<double> values);

/// Rows K = 0..k_max for tables 1 and 2, K = 1..k_max for tables 3 and 4,
/// under the DGP given by config.trend_slope. Deterministic for a fixed seed
/// whatever the worker count.
std::vector<SimTableRow> run_table(const SimConfig& config, int table_id);

/// Runs every replication once and aggregates all K in 0..k_max.
std::vector<SimTableRow> run_experiment(const SimConfig& config);

}  // namespace pretrends
