#include "pretrends/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace pretrends {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double cell_mean(const SimConfig& config, int period, bool treated) {
  return treated ? config.trend_slope * period : 0.0;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

void SimConfig::validate() const {
  if (reps < 1) throw ValidationError("reps must be at least 1");
  if (n_per_cell < 2) throw ValidationError("n_per_cell must be at least 2");
  if (k_max < 1) throw ValidationError("k_max must be at least 1");
  if (!(sigma_noise > 0)) throw ValidationError("sigma_noise must be positive");
  if (!(alpha_pretest > 0 && alpha_pretest < 1)) throw ValidationError("alpha_pretest must lie in (0, 1)");
  if (!(alpha_ci > 0 && alpha_ci < 1)) throw ValidationError("alpha_ci must lie in (0, 1)");
  if (trend_order < 1 || trend_order > k_max) throw ValidationError("trend_order must lie in [1, k_max]");
}

Vec population_beta(const SimConfig& config, int k) {
  Vec beta(k + 1);
  beta(0) = config.trend_slope;
  for (int j = 1; j <= k; ++j) beta(j) = -config.trend_slope * j;
  return beta;
}

CovarianceMatrix population_sigma(const SimConfig& config, int k) {
  const double v = 2.0 * config.sigma_noise * config.sigma_noise / config.n_per_cell;
  return CovarianceMatrix(EquicorrelatedSpec<double>{k + 1, 2.0 * v, v}.to_matrix());
}

CellSummaries draw_cell_summaries(const SimConfig& config, int k, Rng& rng) {
  const auto n_periods = static_cast<std::size_t>(k) + 2;
  CellSummaries cells{k, std::vector<CellStats>(n_periods), std::vector<CellStats>(n_periods)};
  const auto n = static_cast<std::size_t>(config.n_per_cell);
  const double sd_mean = config.sigma_noise / std::sqrt(static_cast<double>(n));
  const double var = config.sigma_noise * config.sigma_noise;
  std::normal_distribution<double> std_normal;
  std::chi_squared_distribution<double> chi2(static_cast<double>(n - 1));

  for (int t = -k; t <= 1; ++t) {
    const auto i = static_cast<std::size_t>(t + k);
    for (const bool treated : {true, false}) {
      CellStats& c = (treated ? cells.treated : cells.control)[i];
      c.n = n;
      c.mean = cell_mean(config, t, treated) + sd_mean * std_normal(rng);
      c.var = var * chi2(rng) / static_cast<double>(n - 1);
    }
  }
  return cells;
}

PanelData generate_panel(const SimConfig& config, int k, Rng& rng) {
  std::normal_distribution<double> noise(0.0, config.sigma_noise);
  std::vector<Observation> rows;
  rows.reserve(static_cast<std::size_t>(k + 2) * 2 * static_cast<std::size_t>(config.n_per_cell));
  std::size_t unit = 0;
  for (int t = -k; t <= 1; ++t) {
    for (const bool treated : {true, false}) {
      for (int i = 0; i < config.n_per_cell; ++i) {
        rows.push_back({"u" + std::to_string(unit++), t, treated, cell_mean(config, t, treated) + noise(rng)});
      }
    }
  }
  return PanelData(std::move(rows));
}

ReplicationRecord make_record(const EstimateBundle& bundle, const SimConfig& config) {
  const InferenceReport report =
      analyze(bundle, config.alpha_pretest, config.alpha_ci, std::min(config.trend_order, bundle.k()));
  ReplicationRecord rec;
  rec.accepted = report.pretest_passed;
  rec.trad_estimate = report.traditional.estimate;
  rec.trad_se = report.traditional.se;
  rec.eff_estimate = report.efficient.estimate;
  rec.eff_se = report.efficient.se;
  if (report.median_unbiased_beta) {
    rec.tn_beta = report.median_unbiased_beta->estimate.to_double();
    rec.tn_beta_lower = report.median_unbiased_beta->ci.lower.to_double();
    rec.tn_beta_upper = report.median_unbiased_beta->ci.upper.to_double();
  }
  if (report.median_unbiased_gamma) {
    rec.tn_gamma = report.median_unbiased_gamma->estimate.to_double();
    rec.tn_gamma_lower = report.median_unbiased_gamma->ci.lower.to_double();
    rec.tn_gamma_upper = report.median_unbiased_gamma->ci.upper.to_double();
  }
  return rec;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return kNaN;
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

namespace {

struct Moments {
  double mean = kNaN;
  double sd = kNaN;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  if (x.empty()) return m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() >= 2) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / (n - 1.0));
  }
  return m;
}

double fraction(std::size_t hits, std::size_t n) {
  return n == 0 ? kNaN : static_cast<double>(hits) / static_cast<double>(n);
}

double proportion_mcse(double p, std::size_t n) {
  return n == 0 ? kNaN : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

bool excludes(double lower, double upper, double value) { return value < lower || value > upper; }

// Both endpoints at the same infinity still counts as an unbounded interval.
double width_of(double lower, double upper) {
  const double w = upper - lower;
  return std::isnan(w) ? std::numeric_limits<double>::infinity() : w;
}

}  // namespace

SimTableRow summarize_row(int k, std::span<const ReplicationRecord> records, const Truth& truth,
                          double alpha_ci, double slope) {
  SimTableRow row;
  row.k = k;
  row.slope = slope;
  row.reps = records.size();

  const double z = critical_value(alpha_ci);
  std::vector<double> trad, trad_se, eff, eff_se, tn_beta, tn_gamma;
  std::vector<double> width_trad, width_beta, width_gamma;
  std::size_t trad_rej_truth = 0, trad_rej_zero = 0, eff_rej_truth = 0, eff_rej_zero = 0;
  std::size_t tn_beta_n = 0, tn_beta_rej = 0, tn_gamma_n = 0, tn_gamma_rej = 0;

  for (const auto& r : records) {
    if (k > 0 && !r.accepted) continue;
    trad.push_back(r.trad_estimate);
    trad_se.push_back(r.trad_se);
    eff.push_back(r.eff_estimate);
    eff_se.push_back(r.eff_se);
    width_trad.push_back(2.0 * z * r.trad_se);
    trad_rej_truth += std::abs(r.trad_estimate - truth.beta_post) > z * r.trad_se;
    trad_rej_zero += std::abs(r.trad_estimate) > z * r.trad_se;
    eff_rej_truth += std::abs(r.eff_estimate - truth.beta_post) > z * r.eff_se;
    eff_rej_zero += std::abs(r.eff_estimate) > z * r.eff_se;
    if (k == 0) continue;
    if (!std::isnan(r.tn_beta)) {
      tn_beta.push_back(r.tn_beta);
      width_beta.push_back(width_of(r.tn_beta_lower, r.tn_beta_upper));
      ++tn_beta_n;
      tn_beta_rej += excludes(r.tn_beta_lower, r.tn_beta_upper, truth.beta_post);
    }
    if (!std::isnan(r.tn_gamma)) {
      tn_gamma.push_back(r.tn_gamma);
      width_gamma.push_back(width_of(r.tn_gamma_lower, r.tn_gamma_upper));
      ++tn_gamma_n;
      tn_gamma_rej += excludes(r.tn_gamma_lower, r.tn_gamma_upper, truth.gamma_post);
    }
  }

  const std::size_t n = trad.size();
  row.n_accepted = n;
  row.accept_prob = fraction(n, records.size());
  row.accept_prob_mcse = proportion_mcse(row.accept_prob, records.size());

  const Moments mt = moments(trad);
  row.mean_traditional = mt.mean;
  row.median_traditional = median_of(trad);
  row.bias_traditional = mt.mean - truth.beta_post;
  row.bias_traditional_mcse = mt.sd / std::sqrt(static_cast<double>(n));
  row.mean_se_traditional = moments(trad_se).mean;
  row.actual_sd_traditional = mt.sd;
  row.reject_beta_post_traditional = fraction(trad_rej_truth, n);
  row.size_traditional = row.reject_beta_post_traditional;
  row.size_traditional_mcse = proportion_mcse(row.size_traditional, n);
  row.reject_zero_traditional = fraction(trad_rej_zero, n);

  const Moments me = moments(eff);
  row.mean_efficient = me.mean;
  row.bias_efficient = me.mean - truth.beta_post;
  row.bias_efficient_mcse = me.sd / std::sqrt(static_cast<double>(n));
  row.mean_se_efficient = moments(eff_se).mean;
  row.actual_sd_efficient = me.sd;
  row.reject_beta_post_efficient = fraction(eff_rej_truth, n);
  row.size_efficient = row.reject_beta_post_efficient;
  row.size_efficient_mcse = proportion_mcse(row.size_efficient, n);
  row.reject_zero_efficient = fraction(eff_rej_zero, n);
  row.median_width_traditional = median_of(width_trad);

  if (k == 0) {
    row.mean_efficient = row.bias_efficient = row.bias_efficient_mcse = kNaN;
    row.mean_se_efficient = row.actual_sd_efficient = kNaN;
    row.size_efficient = row.size_efficient_mcse = kNaN;
    row.reject_beta_post_efficient = row.reject_zero_efficient = kNaN;
  }
  row.median_tn_beta = median_of(tn_beta);
  row.median_tn_gamma = median_of(tn_gamma);
  row.tn_reject_beta_post = fraction(tn_beta_rej, tn_beta_n);
  row.tn_reject_beta_post_mcse = proportion_mcse(row.tn_reject_beta_post, tn_beta_n);
  row.tn_reject_zero_gamma = fraction(tn_gamma_rej, tn_gamma_n);
  row.tn_reject_zero_gamma_mcse = proportion_mcse(row.tn_reject_zero_gamma, tn_gamma_n);
  row.median_width_tn_beta = median_of(width_beta);
  row.median_width_tn_gamma = median_of(width_gamma);
  return row;
}

namespace {

void suppress(SimTableRow& row) {
  row.degenerate = true;
  const SimTableRow kept = row;
  row = SimTableRow{};
  row.k = kept.k;
  row.slope = kept.slope;
  row.reps = kept.reps;
  row.n_accepted = kept.n_accepted;
  row.degenerate = true;
  row.accept_prob = kept.accept_prob;
  row.accept_prob_mcse = kept.accept_prob_mcse;
  for (double* field : {&row.mean_traditional, &row.median_traditional, &row.bias_traditional,
                        &row.bias_traditional_mcse, &row.mean_se_traditional, &row.actual_sd_traditional,
                        &row.size_traditional, &row.size_traditional_mcse, &row.reject_beta_post_traditional,
                        &row.reject_zero_traditional, &row.mean_efficient, &row.bias_efficient,
                        &row.bias_efficient_mcse, &row.mean_se_efficient, &row.actual_sd_efficient,
                        &row.size_efficient, &row.size_efficient_mcse, &row.reject_beta_post_efficient,
                        &row.reject_zero_efficient, &row.median_tn_beta, &row.median_tn_gamma,
                        &row.tn_reject_beta_post, &row.tn_reject_beta_post_mcse, &row.tn_reject_zero_gamma,
                        &row.tn_reject_zero_gamma_mcse, &row.median_width_traditional,
                        &row.median_width_tn_beta, &row.median_width_tn_gamma}) {
    *field = kNaN;
  }
}

/// records[k - 1][rep] for k = 1..k_max.
using RecordTable = std::vector<std::vector<ReplicationRecord>>;

void simulate_range(const SimConfig& config, std::size_t begin, std::size_t end, RecordTable& records) {
  for (std::size_t rep = begin; rep < end; ++rep) {
    Rng rng(derive_seed(config.seed, rep));
    const CellSummaries cells = config.fast_path ? draw_cell_summaries(config, config.k_max, rng)
                                                 : summarize_cells(generate_panel(config, config.k_max, rng));
    const CellSummaries* source = &cells;
    CellSummaries known;
    if (config.known_sigma) {
      // Population variances make covariance_from_cells return the true Sigma.
      known = cells;
      for (auto* group : {&known.treated, &known.control}) {
        for (auto& c : *group) c.var = config.sigma_noise * config.sigma_noise;
      }
      source = &known;
    }
    const EstimateBundle full = bundle_from_cells(*source);
    for (int k = 1; k <= config.k_max; ++k) {
      records[static_cast<std::size_t>(k - 1)][rep] = make_record(full.leading(k), config);
    }
  }
}

}  // namespace

std::vector<SimTableRow> run_experiment(const SimConfig& config) {
  config.validate();
  const std::size_t reps = config.reps;
  RecordTable records(static_cast<std::size_t>(config.k_max), std::vector<ReplicationRecord>(reps));

  unsigned workers = config.workers != 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));
  if (workers <= 1) {
    simulate_range(config, 0, reps, records);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = reps * w / workers;
        const std::size_t end = reps * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] {
          try {
            simulate_range(config, begin, end, records);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<SimTableRow> rows;
  for (int k = 0; k <= config.k_max; ++k) {
    const auto& recs = records[static_cast<std::size_t>(std::max(k, 1) - 1)];
    Truth truth;
    truth.beta_post = config.trend_slope;
    if (k > 0) truth.gamma_post = eta_gamma(k, std::min(config.trend_order, k)).dot(population_beta(config, k));
    SimTableRow row = summarize_row(k, recs, truth, config.alpha_ci, config.trend_slope);
    if (row.n_accepted < kMinAcceptedReps) suppress(row);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SimTableRow> run_table(const SimConfig& config, int table_id) {
  if (table_id < 1 || table_id > 4) throw ValidationError("table id must be 1, 2, 3 or 4");
  std::vector<SimTableRow> rows = run_experiment(config);
  if (table_id >= 3) rows.erase(rows.begin());
  return rows;
}

}  // namespace pretrends
