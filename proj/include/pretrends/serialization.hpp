#pragma once

#include <string>
#include <vector>

#include "pretrends/estimators.hpp"
#include "pretrends/simulation.hpp"

namespace pretrends {

inline constexpr int kReportSchemaVersion = 1;

/// JSON report with schema_version, the coefficients, Sigma, the pre-test
/// verdict and every estimator block. Conditional blocks are null when the
/// pre-test failed; infinite endpoints are the strings "inf" / "-inf".
std::string report_to_json(const EstimateBundle& bundle, const InferenceReport& report);

/// The same content as `key,value` lines.
std::string report_to_csv(const EstimateBundle& bundle, const InferenceReport& report);

/// One row per line under a header of field names; NaN prints as NA.
std::string rows_to_csv(const std::vector<SimTableRow>& rows);
/// Array of row objects; NaN prints as null.
std::string rows_to_json(const std::vector<SimTableRow>& rows);

}  // namespace pretrends
