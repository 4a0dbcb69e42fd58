#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pretrends/gaussian_core.hpp"

namespace pretrends {

struct Observation {
  std::string unit;
  int period = 0;
  bool treated = false;
  double outcome = 0.0;
};

/// Long-format observations over the contiguous periods -K, ..., 0, 1.
///
/// Immutable once built. Construction checks that periods are contiguous
/// with K >= 1, that no (unit, period) pair repeats, and that every
/// (group, period) cell holds at least two observations.
class PanelData {
 public:
  explicit PanelData(std::vector<Observation> rows);

  const std::vector<Observation>& rows() const { return rows_; }
  int k() const { return k_; }

  /// Keeps only periods -k, ..., 1.
  PanelData restricted_to(int k) const;

 private:
  std::vector<Observation> rows_;
  int k_ = 0;
};

/// Count, mean and sample variance of one (group, period) cell.
struct CellStats {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;
};

/// Per-period cell statistics, indexed by period + k (so index 0 is t = -k
/// and index k + 1 is the post period).
struct CellSummaries {
  int k = 0;
  std::vector<CellStats> treated;
  std::vector<CellStats> control;

  const CellStats& treated_at(int period) const { return treated.at(static_cast<std::size_t>(period + k)); }
  const CellStats& control_at(int period) const { return control.at(static_cast<std::size_t>(period + k)); }
};

/// Coefficients ordered (post, pre_{-1}, ..., pre_{-K}) with their covariance.
class EstimateBundle {
 public:
  EstimateBundle(double beta_post, Vec beta_pre, CovarianceMatrix sigma);

  double beta_post() const { return beta_post_; }
  const Vec& beta_pre() const { return beta_pre_; }
  const CovarianceMatrix& sigma() const { return sigma_; }
  int k() const { return static_cast<int>(beta_pre_.size()); }

  /// Stacked (post, pre) vector.
  Vec beta() const;

  /// Bundle for the first `k` pre-periods only, which equals re-estimating
  /// on periods -k, ..., 1.
  EstimateBundle leading(int k) const;

 private:
  double beta_post_;
  Vec beta_pre_;
  CovarianceMatrix sigma_;
};

CellSummaries summarize_cells(const PanelData& data);

/// Stacked (post, pre) coefficients alone, with no covariance attached.
Vec coefficients_from_cells(const CellSummaries& cells);

/// Differenced cell means and the repeated-cross-section covariance.
EstimateBundle bundle_from_cells(const CellSummaries& cells);

/// Treated-minus-control difference at each period, relative to period 0.
EstimateBundle estimate_event_study(const PanelData& data);

/// Var(dy_0) off the diagonal and Var(dy_0) + Var(dy_t) on it, where
/// Var(dy_t) = s_T^2 / n_T + s_C^2 / n_C.
CovarianceMatrix estimate_covariance(const PanelData& data);
CovarianceMatrix covariance_from_cells(const CellSummaries& cells);

/// Reads `unit,period,treatment,outcome` CSV. Throws ParseError on malformed
/// lines and ValidationError (or a subclass) on invariant violations.
PanelData load_panel(const std::filesystem::path& path);
PanelData parse_panel(const std::string& text);

/// Writes the same CSV format with round-trip precision.
void write_panel(const PanelData& data, const std::filesystem::path& path);
std::string format_panel(const PanelData& data);

}  // namespace pretrends
