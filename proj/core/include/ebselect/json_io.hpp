#pragma once

#include <string>

#include "ebselect/estimation.hpp"
#include "ebselect/ingestion.hpp"
#include "ebselect/prior.hpp"
#include "ebselect/selection.hpp"
#include "ebselect/simulation.hpp"

namespace ebselect {

/// {"family": "normal"|"scale_mixture"|"discrete", ...} with numbers at
/// 17 significant digits. Parsing rejects unknown families and anything
/// violating the prior invariants.
std::string prior_to_json(const Prior& prior);
Prior prior_from_json(const std::string& text);

std::string fit_diagnostics_to_json(const FitDiagnostics& diag);
std::string regret_report_to_json(const RegretReport& report);
std::string ingest_report_to_json(const IngestReport& report,
                                  std::int64_t min_impressions,
                                  std::int64_t min_clicks);

StudyConfig study_config_from_json(const std::string& text);
SharpnessConfig sharpness_config_from_json(const std::string& text);
std::string study_config_to_json(const StudyConfig& cfg);

/// Tidy CSV, one row per (n, multiplier, method, metric).
std::string scaling_summary_csv(const ScalingSummary& summary);
std::string scaling_summary_json(const ScalingSummary& summary);
std::string slopes_json(const ScalingSummary& summary);

std::string sharpness_csv(const SharpnessResult& result);
std::string sharpness_json(const SharpnessResult& result);

}  // namespace ebselect
