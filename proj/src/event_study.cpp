#include "pretrends/event_study.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace pretrends {

PanelData::PanelData(std::vector<Observation> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw InsufficientData("panel has no observations");

  std::set<int> periods;
  for (const auto& r : rows_) periods.insert(r.period);
  const int first = *periods.begin();
  const int last = *periods.rbegin();
  if (last != 1) throw NonContiguousPeriods("panel must end at post period 1");
  if (first > -1) throw NonContiguousPeriods("panel needs at least one pre-period before period 0");
  if (static_cast<int>(periods.size()) != last - first + 1) {
    throw NonContiguousPeriods("panel periods are not contiguous from " + std::to_string(first) +
                               " to 1");
  }
  k_ = -first;

  std::unordered_set<std::string> seen;
  for (const auto& r : rows_) {
    if (!seen.insert(r.unit + '\x1f' + std::to_string(r.period)).second) {
      throw ValidationError("duplicate row for unit '" + r.unit + "' in period " +
                            std::to_string(r.period));
    }
  }

  std::vector<std::size_t> treated(static_cast<std::size_t>(k_) + 2, 0);
  std::vector<std::size_t> control(treated.size(), 0);
  for (const auto& r : rows_) {
    (r.treated ? treated : control)[static_cast<std::size_t>(r.period + k_)]++;
  }
  for (int t = -k_; t <= 1; ++t) {
    const auto i = static_cast<std::size_t>(t + k_);
    if (treated[i] < 2 || control[i] < 2) {
      throw InsufficientData("period " + std::to_string(t) +
                             " needs at least two treated and two control observations");
    }
  }
}

PanelData PanelData::restricted_to(int k) const {
  if (k < 1 || k > k_) throw ValidationError("cannot restrict panel to " + std::to_string(k) + " pre-periods");
  std::vector<Observation> kept;
  std::copy_if(rows_.begin(), rows_.end(), std::back_inserter(kept),
               [k](const Observation& r) { return r.period >= -k; });
  return PanelData(std::move(kept));
}

EstimateBundle::EstimateBundle(double beta_post, Vec beta_pre, CovarianceMatrix sigma)
    : beta_post_(beta_post), beta_pre_(std::move(beta_pre)), sigma_(std::move(sigma)) {
  if (beta_pre_.size() < 1) throw ValidationError("bundle needs at least one pre coefficient");
  if (sigma_.dim() != beta_pre_.size() + 1) {
    throw ValidationError("bundle covariance dimension must be K + 1");
  }
}

Vec EstimateBundle::beta() const {
  Vec b(beta_pre_.size() + 1);
  b << beta_post_, beta_pre_;
  return b;
}

EstimateBundle EstimateBundle::leading(int k) const {
  if (k < 1 || k > this->k()) throw ValidationError("leading bundle larger than estimate");
  return EstimateBundle(beta_post_, beta_pre_.head(k), sigma_.leading(k));
}

CellSummaries summarize_cells(const PanelData& data) {
  const int k = data.k();
  const auto n_periods = static_cast<std::size_t>(k) + 2;
  CellSummaries cells{k, std::vector<CellStats>(n_periods), std::vector<CellStats>(n_periods)};

  // Two passes for the sample variance.
  for (const auto& r : data.rows()) {
    auto& c = (r.treated ? cells.treated : cells.control)[static_cast<std::size_t>(r.period + k)];
    c.n++;
    c.mean += r.outcome;
  }
  for (auto* group : {&cells.treated, &cells.control}) {
    for (auto& c : *group) c.mean /= static_cast<double>(c.n);
  }
  for (const auto& r : data.rows()) {
    auto& c = (r.treated ? cells.treated : cells.control)[static_cast<std::size_t>(r.period + k)];
    const double d = r.outcome - c.mean;
    c.var += d * d;
  }
  for (auto* group : {&cells.treated, &cells.control}) {
    for (auto& c : *group) c.var /= static_cast<double>(c.n - 1);
  }
  return cells;
}

namespace {

double diff_of_means(const CellSummaries& cells, int t) {
  return cells.treated_at(t).mean - cells.control_at(t).mean;
}

double var_of_diff(const CellSummaries& cells, int t) {
  const auto& tr = cells.treated_at(t);
  const auto& co = cells.control_at(t);
  if (tr.n < 2 || co.n < 2) {
    throw InsufficientData("period " + std::to_string(t) + " has a cell with fewer than two observations");
  }
  return tr.var / static_cast<double>(tr.n) + co.var / static_cast<double>(co.n);
}

}  // namespace

CovarianceMatrix covariance_from_cells(const CellSummaries& cells) {
  const int k = cells.k;
  const double v0 = var_of_diff(cells, 0);
  Mat sigma = Mat::Constant(k + 1, k + 1, v0);
  sigma(0, 0) += var_of_diff(cells, 1);
  for (int j = 1; j <= k; ++j) sigma(j, j) += var_of_diff(cells, -j);
  return CovarianceMatrix(std::move(sigma));
}

Vec coefficients_from_cells(const CellSummaries& cells) {
  const double base = diff_of_means(cells, 0);
  Vec beta(cells.k + 1);
  beta(0) = diff_of_means(cells, 1) - base;
  for (int j = 1; j <= cells.k; ++j) beta(j) = diff_of_means(cells, -j) - base;
  return beta;
}

EstimateBundle bundle_from_cells(const CellSummaries& cells) {
  const Vec beta = coefficients_from_cells(cells);
  return EstimateBundle(beta(0), beta.tail(cells.k), covariance_from_cells(cells));
}

EstimateBundle estimate_event_study(const PanelData& data) { return bundle_from_cells(summarize_cells(data)); }

CovarianceMatrix estimate_covariance(const PanelData& data) {
  return covariance_from_cells(summarize_cells(data));
}

}  // namespace pretrends
