#include "ebselect/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ebselect/csv.hpp"

namespace ebselect {

namespace {

const char* kHeader[] = {"experiment_id", "control_impressions",
                         "control_clicks", "treatment_impressions",
                         "treatment_clicks"};

bool parse_count(const std::string& field, std::int64_t& out) {
  if (field.empty()) return false;
  std::int64_t value = 0;
  for (char c : field) {
    if (c < '0' || c > '9') return false;
    if (value > (std::numeric_limits<std::int64_t>::max() - 9) / 10)
      return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::pair<std::vector<RawExperiment>, IngestReport> parse_experiments_csv(
    std::istream& in) {
  std::string line;
  if (!read_csv_line(in, line))
    throw std::invalid_argument("experiments CSV: missing header");
  const auto header = split_csv_record(line);
  if (!header || header->size() != 5)
    throw std::invalid_argument("experiments CSV: bad header");
  for (std::size_t i = 0; i < 5; ++i)
    if ((*header)[i] != kHeader[i])
      throw std::invalid_argument("experiments CSV: bad header");

  std::vector<RawExperiment> rows;
  IngestReport report;
  while (read_csv_line(in, line)) {
    if (line.empty()) continue;
    ++report.total_rows;
    const auto fields = split_csv_record(line);
    if (!fields || fields->size() != 5) {
      ++report.dropped_malformed;
      continue;
    }
    RawExperiment raw;
    raw.experiment_id = (*fields)[0];
    const bool counts_ok = parse_count((*fields)[1], raw.control_impressions) &&
                           parse_count((*fields)[2], raw.control_clicks) &&
                           parse_count((*fields)[3], raw.treatment_impressions) &&
                           parse_count((*fields)[4], raw.treatment_clicks);
    if (!counts_ok || raw.control_clicks > raw.control_impressions ||
        raw.treatment_clicks > raw.treatment_impressions) {
      ++report.dropped_malformed;
      continue;
    }
    rows.push_back(std::move(raw));
  }
  report.kept_rows = static_cast<std::int64_t>(rows.size());
  return {std::move(rows), report};
}

std::pair<std::vector<RawExperiment>, IngestReport> parse_experiments_csv(
    const std::string& text) {
  std::istringstream in(text);
  return parse_experiments_csv(in);
}

Observation effect_of(const RawExperiment& raw) {
  const double nc = static_cast<double>(raw.control_impressions);
  const double nt = static_cast<double>(raw.treatment_impressions);
  const double pc = static_cast<double>(raw.control_clicks) / nc;
  const double pt = static_cast<double>(raw.treatment_clicks) / nt;
  const double var = pt * (1.0 - pt) / nt + pc * (1.0 - pc) / nc;
  return Observation{pt - pc, std::sqrt(var)};
}

bool passes_filters(const RawExperiment& raw, std::int64_t min_impressions,
                    std::int64_t min_clicks) {
  if (raw.control_impressions < min_impressions ||
      raw.treatment_impressions < min_impressions ||
      raw.control_clicks < min_clicks || raw.treatment_clicks < min_clicks)
    return false;
  return effect_of(raw).sigma > 0.0;
}

std::vector<Observation> compute_effects(const std::vector<RawExperiment>& raw,
                                         std::int64_t min_impressions,
                                         std::int64_t min_clicks) {
  std::vector<Observation> out;
  out.reserve(raw.size());
  for (const auto& r : raw)
    if (passes_filters(r, min_impressions, min_clicks))
      out.push_back(effect_of(r));
  return out;
}

DiscretePrior empirical_sigma_distribution(
    const std::vector<Observation>& obs) {
  if (obs.empty())
    throw std::invalid_argument("empirical sigma law needs observations");
  std::map<double, std::size_t> counts;
  for (const auto& o : obs) ++counts[o.sigma];
  DiscretePrior law;
  const double inv_n = 1.0 / static_cast<double>(obs.size());
  for (const auto& [sigma, count] : counts) {
    law.atoms.push_back(sigma);
    law.weights.push_back(static_cast<double>(count) * inv_n);
  }
  return law;
}

}  // namespace ebselect
