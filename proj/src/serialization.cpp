#include "pretrends/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>

namespace pretrends {

namespace {

using json = nlohmann::ordered_json;

json extended(const ExtendedReal& x) {
  if (x.is_finite()) return x.value();
  return x.is_pos_inf() ? "inf" : "-inf";
}

json vector_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json wald_json(const WaldBlock& w) {
  return {{"estimate", w.estimate}, {"se", w.se}, {"ci", {w.ci_lower, w.ci_upper}}};
}

json conditional_json(const std::optional<ConditionalBlock>& block) {
  if (!block) return nullptr;
  return {{"estimate", extended(block->estimate)},
          {"ci", {extended(block->ci.lower), extended(block->ci.upper)}},
          {"eta", vector_json(block->eta)},
          {"truncation_window", {extended(block->window_lower), extended(block->window_upper)}}};
}

json report_json(const EstimateBundle& bundle, const InferenceReport& report) {
  json sigma = json::array();
  for (Eigen::Index i = 0; i < bundle.sigma().dim(); ++i) {
    sigma.push_back(vector_json(bundle.sigma().matrix().row(i).transpose()));
  }
  json gamma = conditional_json(report.median_unbiased_gamma);
  if (!gamma.is_null()) gamma["trend_order"] = report.trend_order;
  return {{"schema_version", kReportSchemaVersion},
          {"k", report.k},
          {"coefficients", {{"beta_post", bundle.beta_post()}, {"beta_pre", vector_json(bundle.beta_pre())}}},
          {"sigma", sigma},
          {"pretest",
           {{"alpha", report.alpha_pretest},
            {"critical_value", critical_value(report.alpha_pretest)},
            {"passed", report.pretest_passed}}},
          {"alpha_ci", report.alpha_ci},
          {"traditional", wald_json(report.traditional)},
          {"efficient", wald_json(report.efficient)},
          {"median_unbiased_beta", conditional_json(report.median_unbiased_beta)},
          {"median_unbiased_gamma", gamma}};
}

void flatten(const json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out += prefix + "," + (j.is_string() ? j.get<std::string>() : j.is_null() ? "NA" : j.dump()) + "\n";
  }
}

struct Column {
  const char* name;
  std::function<json(const SimTableRow&)> get;
};

json num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

#define PRETRENDS_COLUMN(field) Column{#field, [](const SimTableRow& r) { return num(r.field); }}

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      Column{"k", [](const SimTableRow& r) { return json(r.k); }},
      PRETRENDS_COLUMN(slope),
      Column{"reps", [](const SimTableRow& r) { return json(r.reps); }},
      Column{"n_accepted", [](const SimTableRow& r) { return json(r.n_accepted); }},
      Column{"degenerate", [](const SimTableRow& r) { return json(r.degenerate); }},
      PRETRENDS_COLUMN(accept_prob),
      PRETRENDS_COLUMN(accept_prob_mcse),
      PRETRENDS_COLUMN(mean_traditional),
      PRETRENDS_COLUMN(median_traditional),
      PRETRENDS_COLUMN(bias_traditional),
      PRETRENDS_COLUMN(bias_traditional_mcse),
      PRETRENDS_COLUMN(mean_se_traditional),
      PRETRENDS_COLUMN(actual_sd_traditional),
      PRETRENDS_COLUMN(size_traditional),
      PRETRENDS_COLUMN(size_traditional_mcse),
      PRETRENDS_COLUMN(reject_beta_post_traditional),
      PRETRENDS_COLUMN(reject_zero_traditional),
      PRETRENDS_COLUMN(mean_efficient),
      PRETRENDS_COLUMN(bias_efficient),
      PRETRENDS_COLUMN(bias_efficient_mcse),
      PRETRENDS_COLUMN(mean_se_efficient),
      PRETRENDS_COLUMN(actual_sd_efficient),
      PRETRENDS_COLUMN(size_efficient),
      PRETRENDS_COLUMN(size_efficient_mcse),
      PRETRENDS_COLUMN(reject_beta_post_efficient),
      PRETRENDS_COLUMN(reject_zero_efficient),
      PRETRENDS_COLUMN(median_tn_beta),
      PRETRENDS_COLUMN(median_tn_gamma),
      PRETRENDS_COLUMN(tn_reject_beta_post),
      PRETRENDS_COLUMN(tn_reject_beta_post_mcse),
      PRETRENDS_COLUMN(tn_reject_zero_gamma),
      PRETRENDS_COLUMN(tn_reject_zero_gamma_mcse),
      PRETRENDS_COLUMN(median_width_traditional),
      PRETRENDS_COLUMN(median_width_tn_beta),
      PRETRENDS_COLUMN(median_width_tn_gamma),
  };
  return cols;
}

#undef PRETRENDS_COLUMN

std::string csv_cell(const json& v) {
  if (v.is_null()) return "NA";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
    return buf;
  }
  return v.dump();
}

}  // namespace

std::string report_to_json(const EstimateBundle& bundle, const InferenceReport& report) {
  return report_json(bundle, report).dump(2) + "\n";
}

std::string report_to_csv(const EstimateBundle& bundle, const InferenceReport& report) {
  std::string out = "key,value\n";
  flatten(report_json(bundle, report), "", out);
  return out;
}

std::string rows_to_csv(const std::vector<SimTableRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns().size(); ++i) {
    out += (i ? "," : "");
    out += columns()[i].name;
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns().size(); ++i) {
      out += (i ? "," : "");
      out += csv_cell(columns()[i].get(row));
    }
    out += '\n';
  }
  return out;
}

std::string rows_to_json(const std::vector<SimTableRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (const auto& col : columns()) obj[col.name] = col.get(row);
    out.push_back(std::move(obj));
  }
  return out.dump(2) + "\n";
}

}  // namespace pretrends
