// Command-line surface for the empirical Bayes top-m selection toolkit.
//
// Exit codes: 0 success, 2 usage error, 3 input/data error, 4 numerical
// failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ebselect/csv.hpp"
#include "ebselect/estimation.hpp"
#include "ebselect/ingestion.hpp"
#include "ebselect/json_io.hpp"
#include "ebselect/math_util.hpp"
#include "ebselect/prior.hpp"
#include "ebselect/selection.hpp"
#include "ebselect/simulation.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << content;
}

struct ObservationRow {
  std::string id;
  ebselect::Observation obs;
};

std::vector<ObservationRow> read_observations_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!ebselect::read_csv_line(in, line) || line != "experiment_id,x,sigma")
    throw std::invalid_argument(path + ": expected header experiment_id,x,sigma");
  std::vector<ObservationRow> rows;
  while (ebselect::read_csv_line(in, line)) {
    if (line.empty()) continue;
    const auto fields = ebselect::split_csv_record(line);
    if (!fields || fields->size() != 3)
      throw std::invalid_argument(path + ": malformed observation row");
    ObservationRow row;
    row.id = (*fields)[0];
    try {
      row.obs.x = std::stod((*fields)[1]);
      row.obs.sigma = std::stod((*fields)[2]);
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ": malformed observation row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ebselect::Observation> strip_ids(
    const std::vector<ObservationRow>& rows) {
  std::vector<ebselect::Observation> obs;
  obs.reserve(rows.size());
  for (const auto& r : rows) obs.push_back(r.obs);
  return obs;
}

struct IngestArgs {
  std::string input, output;
  std::int64_t min_impressions = 1000;
  std::int64_t min_clicks = 100;
};

int cmd_ingest(const IngestArgs& args) {
  std::ifstream in(args.input, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + args.input);
  auto [raws, report] = ebselect::parse_experiments_csv(in);

  std::string csv = ebselect::csv_row({"experiment_id", "x", "sigma"});
  std::int64_t kept = 0;
  for (const auto& raw : raws) {
    if (!ebselect::passes_filters(raw, args.min_impressions, args.min_clicks))
      continue;
    const auto obs = ebselect::effect_of(raw);
    csv += ebselect::csv_row({ebselect::csv_escape(raw.experiment_id),
                              ebselect::format_double(obs.x),
                              ebselect::format_double(obs.sigma)});
    ++kept;
  }
  report.dropped_filter = report.kept_rows - kept;
  report.kept_rows = kept;
  write_file(args.output, csv);
  std::cout << ebselect::ingest_report_to_json(report, args.min_impressions,
                                               args.min_clicks)
            << "\n";
  return 0;
}

struct FitArgs {
  std::string observations, family, output;
  std::size_t grid_size = 0;
};

int cmd_fit(const FitArgs& args) {
  const auto rows = read_observations_csv(args.observations);
  const auto obs = strip_ids(rows);
  if (obs.size() < 2)
    throw std::invalid_argument("fit needs at least 2 observations");

  ebselect::Prior prior;
  ebselect::FitDiagnostics diag;
  if (args.family == "normal") {
    auto [fitted, d] = ebselect::fit_normal(obs);
    prior = ebselect::Prior{fitted};
    diag = std::move(d);
  } else if (args.family == "nsm") {
    auto grid = ebselect::default_scale_grid(obs);
    if (args.grid_size >= 2) grid.size = args.grid_size;
    auto [fitted, d] = ebselect::fit_scale_mixture(obs, grid);
    prior = ebselect::Prior{fitted};
    diag = std::move(d);
  } else if (args.family == "npmle") {
    auto [fitted, d] =
        ebselect::fit_npmle(obs, ebselect::default_atom_grid(obs, args.grid_size));
    prior = ebselect::Prior{fitted};
    diag = std::move(d);
  } else {
    throw UsageError("unknown family: " + args.family);
  }

  if (!diag.converged &&
      diag.last_delta() > 1e-6 * static_cast<double>(obs.size()))
    throw ebselect::NumericalError(
        "fit hit its iteration cap while still improving");

  write_file(args.output, ebselect::prior_to_json(prior) + "\n");
  std::cout << ebselect::fit_diagnostics_to_json(diag) << "\n";
  return 0;
}

struct SelectArgs {
  std::string observations, prior_path, output;
  std::optional<std::int64_t> m;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
};

int cmd_select(const SelectArgs& args) {
  if (args.m && args.alpha)
    throw UsageError("give either --m or --alpha, not both");
  if (!args.m && !args.alpha) throw UsageError("one of --m or --alpha is required");
  if (args.m && *args.m <= 0) throw UsageError("--m must be >= 1");
  if (args.alpha && !(*args.alpha > 0.0 && *args.alpha < 1.0))
    throw UsageError("--alpha must lie in (0, 1)");

  const auto rows = read_observations_csv(args.observations);
  const auto obs = strip_ids(rows);
  const auto prior = ebselect::prior_from_json(read_file(args.prior_path));

  const std::size_t n = obs.size();
  const std::size_t m =
      args.m ? static_cast<std::size_t>(*args.m)
             : static_cast<std::size_t>(std::floor(*args.alpha *
                                                   static_cast<double>(n)));
  if (m == 0 || m >= n)
    throw std::invalid_argument("m must satisfy 1 <= m < n for this input");

  const auto scores = ebselect::score_units(prior, obs);
  ebselect::SplitMix64 rng(args.seed);
  const auto outcome = ebselect::select_top_m(scores, m, rng);

  std::vector<char> selected(n, 0);
  for (std::size_t i : outcome.selected) selected[i] = 1;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::string csv = ebselect::csv_row(
      {"experiment_id", "x", "sigma", "posterior_mean", "selected"});
  for (std::size_t i : order) {
    csv += ebselect::csv_row({ebselect::csv_escape(rows[i].id),
                              ebselect::format_double(rows[i].obs.x),
                              ebselect::format_double(rows[i].obs.sigma),
                              ebselect::format_double(scores[i]),
                              selected[i] ? "1" : "0"});
  }
  if (args.output.empty())
    std::cout << csv;
  else
    write_file(args.output, csv);
  return 0;
}

struct SimulateArgs {
  std::string config, output_dir;
  int threads = 0;
};

int cmd_simulate(const SimulateArgs& args) {
  const auto cfg = ebselect::study_config_from_json(read_file(args.config));
  const auto summary = ebselect::run_scaling_study(cfg, args.threads);

  std::filesystem::create_directories(args.output_dir);
  const auto dir = std::filesystem::path(args.output_dir);
  write_file((dir / "summary.csv").string(),
             ebselect::scaling_summary_csv(summary));
  write_file((dir / "summary.json").string(),
             ebselect::scaling_summary_json(summary) + "\n");
  write_file((dir / "slopes.json").string(),
             ebselect::slopes_json(summary) + "\n");

  for (const auto& row : summary.rows) {
    if (row.metric != ebselect::Metric::Regret) continue;
    std::cerr << "n=" << row.n << " multiplier=" << row.multiplier
              << " method=" << ebselect::method_name(row.method)
              << " mean_regret=" << ebselect::format_double(row.mean)
              << " iterations=" << row.iterations << "\n";
  }
  return 0;
}

struct SharpnessArgs {
  std::string config, output, output_json;
  int threads = 0;
};

int cmd_sharpness(const SharpnessArgs& args) {
  const auto cfg = ebselect::sharpness_config_from_json(read_file(args.config));
  if (cfg.iterations == 0) throw UsageError("iterations must be >= 1");
  ebselect::validate_sharpness_config(cfg);
  const auto result = ebselect::run_sharpness_study(cfg, args.threads);
  write_file(args.output, ebselect::sharpness_csv(result));
  if (!args.output_json.empty())
    write_file(args.output_json, ebselect::sharpness_json(result) + "\n");
  for (const auto& row : result.rows)
    std::cerr << "n=" << row.n
              << " mean_nr=" << ebselect::format_double(row.mean_nr) << "\n";
  return 0;
}

struct PosteriorArgs {
  std::string prior_path;
  double sigma = 0.0;
  double x = 0.0;
};

int cmd_posterior(const PosteriorArgs& args) {
  if (!(args.sigma > 0.0))
    throw std::invalid_argument("--sigma must be positive");
  const auto prior = ebselect::prior_from_json(read_file(args.prior_path));
  const double mean = ebselect::posterior_mean(prior, args.sigma, args.x);
  const double var = ebselect::posterior_variance(prior, args.sigma, args.x);
  std::cout << "{\"posterior_mean\": " << ebselect::format_double(mean)
            << ", \"posterior_variance\": " << ebselect::format_double(var)
            << "}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"empirical Bayes top-m selection toolkit"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd =
      app.add_subcommand("ingest", "convert experiment counts to observations");
  ingest_cmd->add_option("--input", ingest.input)->required();
  ingest_cmd->add_option("--output", ingest.output)->required();
  ingest_cmd->add_option("--min-impressions", ingest.min_impressions);
  ingest_cmd->add_option("--min-clicks", ingest.min_clicks);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a prior family by marginal ML");
  fit_cmd->add_option("--observations", fit.observations)->required();
  fit_cmd->add_option("--family", fit.family)
      ->required()
      ->check(CLI::IsMember({"normal", "nsm", "npmle"}));
  fit_cmd->add_option("--grid-size", fit.grid_size);
  fit_cmd->add_option("--output", fit.output)->required();

  SelectArgs select;
  auto* select_cmd =
      app.add_subcommand("select", "rank units by posterior mean and pick m");
  select_cmd->add_option("--observations", select.observations)->required();
  select_cmd->add_option("--prior", select.prior_path)->required();
  std::int64_t m_flag = 0;
  double alpha_flag = 0.0;
  auto* m_opt = select_cmd->add_option("--m", m_flag);
  auto* alpha_opt = select_cmd->add_option("--alpha", alpha_flag);
  select_cmd->add_option("--seed", select.seed);
  select_cmd->add_option("--output", select.output);

  SimulateArgs simulate;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "run the semi-synthetic scaling study");
  simulate_cmd->add_option("--config", simulate.config)->required();
  simulate_cmd->add_option("--output-dir", simulate.output_dir)->required();
  simulate_cmd->add_option("--threads", simulate.threads);

  SharpnessArgs sharpness;
  auto* sharpness_cmd =
      app.add_subcommand("sharpness", "run the location-family example study");
  sharpness_cmd->add_option("--config", sharpness.config)->required();
  sharpness_cmd->add_option("--output", sharpness.output)->required();
  sharpness_cmd->add_option("--output-json", sharpness.output_json);
  sharpness_cmd->add_option("--threads", sharpness.threads);

  PosteriorArgs posterior;
  auto* posterior_cmd =
      app.add_subcommand("posterior", "evaluate one posterior mean/variance");
  posterior_cmd->add_option("--prior", posterior.prior_path)->required();
  posterior_cmd->add_option("--sigma", posterior.sigma)->required();
  posterior_cmd->add_option("--x", posterior.x)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest);
    if (*fit_cmd) return cmd_fit(fit);
    if (*select_cmd) {
      if (m_opt->count() > 0) select.m = m_flag;
      if (alpha_opt->count() > 0) select.alpha = alpha_flag;
      return cmd_select(select);
    }
    if (*simulate_cmd) return cmd_simulate(simulate);
    if (*sharpness_cmd) return cmd_sharpness(sharpness);
    if (*posterior_cmd) return cmd_posterior(posterior);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ebselect::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
