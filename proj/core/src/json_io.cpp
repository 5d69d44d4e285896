#include "ebselect/json_io.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ebselect/csv.hpp"

namespace ebselect {

namespace {

using nlohmann::json;

std::string num(double v) {
  if (!std::isfinite(v))
    throw std::invalid_argument("cannot serialize a non-finite number");
  return format_double(v);
}

std::string num_array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw std::invalid_argument(std::string("prior JSON: missing array ") + key);
  std::vector<double> out;
  for (const auto& e : j.at(key)) {
    if (!e.is_number())
      throw std::invalid_argument(std::string("prior JSON: non-number in ") + key);
    out.push_back(e.get<double>());
  }
  return out;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw std::invalid_argument(std::string("JSON: missing number ") + key);
  return j.at(key).get<double>();
}

Prior prior_from_json_value(const json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
    throw std::invalid_argument("prior JSON: missing family");
  const std::string family = j.at("family").get<std::string>();
  Prior prior;
  if (family == "normal") {
    prior = NormalPrior{number_field(j, "mean"), number_field(j, "variance")};
  } else if (family == "scale_mixture") {
    prior = ScaleMixturePrior{number_list(j, "variances"),
                              number_list(j, "weights")};
  } else if (family == "discrete") {
    prior = DiscretePrior{number_list(j, "atoms"), number_list(j, "weights")};
  } else {
    throw std::invalid_argument("prior JSON: unknown family " + family);
  }
  validate_prior(prior);
  return prior;
}

}  // namespace

std::string prior_to_json(const Prior& prior) {
  validate_prior(prior);
  struct Writer {
    std::string operator()(const NormalPrior& g) const {
      return "{\"family\": \"normal\", \"mean\": " + num(g.mean) +
             ", \"variance\": " + num(g.variance) + "}";
    }
    std::string operator()(const ScaleMixturePrior& g) const {
      return "{\"family\": \"scale_mixture\", \"variances\": " +
             num_array(g.variances) + ", \"weights\": " + num_array(g.weights) +
             "}";
    }
    std::string operator()(const DiscretePrior& g) const {
      return "{\"family\": \"discrete\", \"atoms\": " + num_array(g.atoms) +
             ", \"weights\": " + num_array(g.weights) + "}";
    }
  };
  return std::visit(Writer{}, prior);
}

Prior prior_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("prior JSON: ") + e.what());
  }
  return prior_from_json_value(j);
}

std::string fit_diagnostics_to_json(const FitDiagnostics& diag) {
  return "{\"final_log_likelihood\": " + num(diag.final_log_likelihood) +
         ", \"iterations\": " + std::to_string(diag.iterations) +
         ", \"converged\": " + (diag.converged ? "true" : "false") + "}";
}

std::string regret_report_to_json(const RegretReport& report) {
  return "{\"n\": " + std::to_string(report.n) +
         ", \"regret\": " + num(report.regret) +
         ", \"n_mistakes\": " + std::to_string(report.n_mistakes) +
         ", \"prop_mistakes\": " + num(report.prop_mistakes) +
         ", \"max_shrinkage_error\": " + num(report.max_shrinkage_error) +
         ", \"two_parts_bound\": " + num(report.two_parts_bound) + "}";
}

std::string ingest_report_to_json(const IngestReport& report,
                                  std::int64_t min_impressions,
                                  std::int64_t min_clicks) {
  return "{\"total_rows\": " + std::to_string(report.total_rows) +
         ", \"kept_rows\": " + std::to_string(report.kept_rows) +
         ", \"dropped_filter\": " + std::to_string(report.dropped_filter) +
         ", \"dropped_malformed\": " + std::to_string(report.dropped_malformed) +
         ", \"min_impressions\": " + std::to_string(min_impressions) +
         ", \"min_clicks\": " + std::to_string(min_clicks) + "}";
}

StudyConfig study_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("study config JSON: ") + e.what());
  }
  StudyConfig cfg;
  if (!j.contains("n_grid") || !j.at("n_grid").is_array())
    throw std::invalid_argument("study config: missing n_grid");
  for (const auto& e : j.at("n_grid")) cfg.n_grid.push_back(e.get<int>());
  cfg.alpha = number_field(j, "alpha");
  cfg.iterations = static_cast<int>(number_field(j, "iterations"));
  if (j.contains("noise_multipliers")) {
    cfg.noise_multipliers.clear();
    for (const auto& e : j.at("noise_multipliers"))
      cfg.noise_multipliers.push_back(e.get<double>());
  }
  if (!j.contains("methods") || !j.at("methods").is_array())
    throw std::invalid_argument("study config: missing methods");
  for (const auto& e : j.at("methods"))
    cfg.methods.push_back(method_from_name(e.get<std::string>()));
  if (!j.contains("g0")) throw std::invalid_argument("study config: missing g0");
  cfg.g0 = prior_from_json_value(j.at("g0"));
  if (!j.contains("h0")) throw std::invalid_argument("study config: missing h0");
  const Prior h0 = prior_from_json_value(j.at("h0"));
  if (!std::holds_alternative<DiscretePrior>(h0))
    throw std::invalid_argument("study config: h0 must be a discrete prior");
  cfg.h0 = std::get<DiscretePrior>(h0);
  cfg.master_seed =
      j.contains("master_seed") ? j.at("master_seed").get<std::uint64_t>() : 0;
  validate_study_config(cfg);
  return cfg;
}

std::string study_config_to_json(const StudyConfig& cfg) {
  std::string n_grid = "[";
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (i > 0) n_grid += ", ";
    n_grid += std::to_string(cfg.n_grid[i]);
  }
  n_grid += "]";
  std::string methods = "[";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    if (i > 0) methods += ", ";
    methods += "\"" + method_name(cfg.methods[i]) + "\"";
  }
  methods += "]";
  std::string mults = "[";
  for (std::size_t i = 0; i < cfg.noise_multipliers.size(); ++i) {
    if (i > 0) mults += ", ";
    mults += num(cfg.noise_multipliers[i]);
  }
  mults += "]";
  return "{\"n_grid\": " + n_grid + ", \"alpha\": " + num(cfg.alpha) +
         ", \"iterations\": " + std::to_string(cfg.iterations) +
         ", \"noise_multipliers\": " + mults + ", \"methods\": " + methods +
         ", \"g0\": " + prior_to_json(cfg.g0) +
         ", \"h0\": " + prior_to_json(Prior{cfg.h0}) +
         ", \"master_seed\": " + std::to_string(cfg.master_seed) + "}";
}

SharpnessConfig sharpness_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("sharpness config JSON: ") +
                                e.what());
  }
  SharpnessConfig cfg;
  if (!j.contains("n_grid") || !j.at("n_grid").is_array())
    throw std::invalid_argument("sharpness config: missing n_grid");
  for (const auto& e : j.at("n_grid")) cfg.n_grid.push_back(e.get<int>());
  cfg.iterations = static_cast<int>(number_field(j, "iterations"));
  cfg.alpha = number_field(j, "alpha");
  if (j.contains("eta0")) cfg.eta0 = j.at("eta0").get<double>();
  if (j.contains("threshold_c")) cfg.threshold_c = j.at("threshold_c").get<double>();
  cfg.master_seed =
      j.contains("master_seed") ? j.at("master_seed").get<std::uint64_t>() : 0;
  return cfg;
}

std::string scaling_summary_csv(const ScalingSummary& summary) {
  std::string out = csv_row(
      {"n", "multiplier", "method", "metric", "mean", "p99", "ci_halfwidth",
       "iterations"});
  for (const SummaryRow& row : summary.rows) {
    out += csv_row({std::to_string(row.n), format_double(row.multiplier),
                    method_name(row.method), metric_name(row.metric),
                    format_double(row.mean), format_double(row.p99),
                    format_double(row.ci_halfwidth),
                    std::to_string(row.iterations)});
  }
  return out;
}

namespace {

std::string summary_row_json(const SummaryRow& row) {
  return "{\"n\": " + std::to_string(row.n) +
         ", \"multiplier\": " + num(row.multiplier) + ", \"method\": \"" +
         method_name(row.method) + "\", \"metric\": \"" +
         metric_name(row.metric) + "\", \"mean\": " + num(row.mean) +
         ", \"p99\": " + num(row.p99) +
         ", \"ci_halfwidth\": " + num(row.ci_halfwidth) +
         ", \"iterations\": " + std::to_string(row.iterations) + "}";
}

std::string diagnostics_json(const ScalingSummary& summary) {
  return "{\"total_em_violations\": " +
         std::to_string(summary.total_em_violations) +
         ", \"bound_violations\": " + std::to_string(summary.bound_violations) +
         ", \"flagged_outcomes\": " + std::to_string(summary.flagged_outcomes) +
         ", \"decompose_calls\": " + std::to_string(summary.decompose_calls) +
         "}";
}

}  // namespace

std::string scaling_summary_json(const ScalingSummary& summary) {
  std::string rows = "[";
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    if (i > 0) rows += ", ";
    rows += summary_row_json(summary.rows[i]);
  }
  rows += "]";
  return "{\"rows\": " + rows +
         ", \"diagnostics\": " + diagnostics_json(summary) + "}";
}

std::string slopes_json(const ScalingSummary& summary) {
  std::string slopes = "[";
  for (std::size_t i = 0; i < summary.slopes.size(); ++i) {
    if (i > 0) slopes += ", ";
    const SlopeRow& s = summary.slopes[i];
    slopes += "{\"method\": \"" + method_name(s.method) +
              "\", \"multiplier\": " + num(s.multiplier) + ", \"metric\": \"" +
              metric_name(s.metric) + "\", \"slope\": " + num(s.slope) + "}";
  }
  slopes += "]";
  return "{\"slopes\": " + slopes +
         ", \"diagnostics\": " + diagnostics_json(summary) + "}";
}

std::string sharpness_json(const SharpnessResult& result) {
  std::string rows = "[";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (i > 0) rows += ", ";
    const SharpnessRow& row = result.rows[i];
    rows += "{\"n\": " + std::to_string(row.n) +
            ", \"mean_nr\": " + num(row.mean_nr) +
            ", \"p10_nr\": " + num(row.p10_nr) +
            ", \"p50_nr\": " + num(row.p50_nr) +
            ", \"p90_nr\": " + num(row.p90_nr) +
            ", \"freq_above_threshold\": " + num(row.freq_above_threshold) +
            ", \"iterations\": " + std::to_string(row.iterations) + "}";
  }
  rows += "]";
  return "{\"rows\": " + rows + ", \"threshold_c\": " + num(result.threshold_c) +
         ", \"crossing_violations\": " +
         std::to_string(result.crossing_violations) + "}";
}

std::string sharpness_csv(const SharpnessResult& result) {
  std::string out = csv_row({"n", "mean_nr", "p10_nr", "p50_nr", "p90_nr",
                             "freq_above_threshold", "threshold_c",
                             "iterations"});
  for (const SharpnessRow& row : result.rows) {
    out += csv_row({std::to_string(row.n), format_double(row.mean_nr),
                    format_double(row.p10_nr), format_double(row.p50_nr),
                    format_double(row.p90_nr),
                    format_double(row.freq_above_threshold),
                    format_double(result.threshold_c),
                    std::to_string(row.iterations)});
  }
  return out;
}

}  // namespace ebselect
