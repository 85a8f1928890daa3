// aoisim: analyze / simulate / compare / inflection for a single-loop
// networked control system with aging feedback.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoisim/montecarlo.hpp"
#include "aoisim/scenario_io.hpp"
#include "aoisim/version.hpp"

namespace {

using namespace aoisim;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitCheckFailed = 3;

struct CommonOptions {
  std::string scenario_path;
  std::string out_path;
  std::string format = "csv";
  std::string convention_override;
  std::string axis_override;
  std::optional<std::int64_t> seed_override;
  int threads = 0;
};

Scenario load_with_overrides(const CommonOptions& opt) {
  Scenario s = load_scenario(opt.scenario_path);
  if (opt.seed_override) {
    s.base_seed = static_cast<std::uint64_t>(*opt.seed_override);
  }
  if (!opt.convention_override.empty()) {
    s.convention = parse_convention(opt.convention_override);
  }
  if (!opt.axis_override.empty()) {
    s.axis = parse_axis(opt.axis_override);
  }
  return s;
}

class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) {
        throw ScenarioParseError("cannot open output file: " + path);
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

ResultMetadata make_metadata(const std::string& command, const Scenario& s) {
  ResultMetadata meta;
  meta.command = command;
  meta.scenario_name = s.name;
  meta.scenario_hash = scenario_hash_hex(s);
  meta.seed = s.base_seed;
  meta.convention = to_string(s.convention);
  meta.axis = to_string(s.axis);
  return meta;
}

std::vector<int> default_ages(const Scenario& s) {
  if (!s.age_grid.empty()) {
    return s.age_grid;
  }
  return {1, 2, 3, 4, 5, 6, 7, 8};
}

int run_analyze(const CommonOptions& opt, const std::vector<int>& ages_flag) {
  const Scenario s = load_with_overrides(opt);
  const std::vector<int> ages = ages_flag.empty() ? default_ages(s) : ages_flag;
  const auto curve = outage_curve(s.model, ages, s.convention, s.axis);

  ResultMetadata meta = make_metadata("analyze", s);
  const InflectionResult infl_v =
      inflection_variance(s.model.delta_g, ConvexityAxis::variance);
  const InflectionResult infl_s =
      inflection_variance(s.model.delta_g, ConvexityAxis::std_dev);
  meta.extra.emplace_back("inflection_variance_axis",
                          format_number(infl_v.numeric_value));
  meta.extra.emplace_back("inflection_std_dev_axis",
                          format_number(infl_s.numeric_value));
  meta.extra.emplace_back("inflection_closed_form",
                          format_number(infl_s.paper_value));

  OutputSink sink(opt.out_path);
  write_outage_curve(sink.stream(), meta, curve,
                     parse_output_format(opt.format));
  return kExitOk;
}

int run_simulate(const CommonOptions& opt) {
  const Scenario s = load_with_overrides(opt);
  const RunStats stats = run_scenario(s, opt.threads);

  std::vector<SimulationAgeRow> rows;
  rows.reserve(stats.age_histogram.size());
  for (const auto& [age, steps] : stats.age_histogram) {
    SimulationAgeRow row;
    row.age = age;
    row.steps = steps;
    const auto it = stats.age_outage_histogram.find(age);
    row.outages = it == stats.age_outage_histogram.end() ? 0 : it->second;
    const RateEstimate rate = wilson_interval(row.outages, row.steps, 0.95);
    row.p_sim = rate.p;
    row.ci_half_width = rate.half_width();
    rows.push_back(row);
  }

  OutputSink sink(opt.out_path);
  write_simulation(sink.stream(), make_metadata("simulate", s), stats, rows,
                   parse_output_format(opt.format));
  return kExitOk;
}

int run_compare(const CommonOptions& opt, const std::vector<double>& noise_flag,
                const std::vector<int>& ages_flag, double confidence,
                bool check, double check_fraction) {
  const Scenario s = load_with_overrides(opt);
  const std::vector<double> noise_grid =
      noise_flag.empty() ? s.noise_grid : noise_flag;
  const std::vector<int> age_grid = ages_flag.empty() ? s.age_grid : ages_flag;
  if (noise_grid.empty() || age_grid.empty()) {
    throw CLI::ValidationError(
        "compare needs a noise grid and an age grid (flags or scenario file)");
  }

  const auto rows = compare(s, noise_grid, age_grid, confidence, opt.threads);

  ResultMetadata meta = make_metadata("compare", s);
  meta.extra.emplace_back("confidence", format_number(confidence));

  OutputSink sink(opt.out_path);
  write_comparison(sink.stream(), meta, rows, parse_output_format(opt.format));

  if (check) {
    std::size_t within = 0;
    for (const auto& row : rows) {
      within += row.within_ci ? 1 : 0;
    }
    const double fraction =
        static_cast<double>(within) / static_cast<double>(rows.size());
    if (fraction < check_fraction) {
      std::cerr << "compare check failed: " << within << "/" << rows.size()
                << " cells within CI (" << format_number(fraction) << " < "
                << format_number(check_fraction) << ")\n";
      return kExitCheckFailed;
    }
  }
  return kExitOk;
}

int run_inflection(double delta_g, const std::string& axis,
                   const CommonOptions& opt) {
  if (!(delta_g > 0.0)) {
    throw CLI::ValidationError("--delta-g must be positive");
  }
  std::vector<InflectionRow> rows;
  const auto add_row = [&](ConvexityAxis ax) {
    const InflectionResult result = inflection_variance(delta_g, ax);
    rows.push_back(InflectionRow{to_string(ax), result.paper_value,
                                 result.numeric_value});
  };
  if (axis == "both") {
    add_row(ConvexityAxis::variance);
    add_row(ConvexityAxis::std_dev);
  } else {
    add_row(parse_axis(axis));
  }

  ResultMetadata meta;
  meta.command = "inflection";
  meta.extra.emplace_back("delta_g", format_number(delta_g));

  OutputSink sink(opt.out_path);
  write_inflection(sink.stream(), meta, rows, parse_output_format(opt.format));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"outage analysis and Monte-Carlo validation for a control "
               "loop with aging status updates"};
  app.set_version_flag("--version",
                       std::string(aoisim::kToolName) + " " + aoisim::kVersion);
  app.require_subcommand(1);

  CommonOptions opt;
  std::vector<int> ages_flag;
  std::vector<double> noise_flag;
  double confidence = 0.95;
  bool check = false;
  double check_fraction = 0.95;
  double delta_g = 0.0;
  std::string inflection_axis = "both";

  const auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    if (needs_scenario) {
      cmd->add_option("--scenario", opt.scenario_path, "scenario file (JSON)")
          ->required();
      cmd->add_option("--seed", opt.seed_override, "override base seed");
      cmd->add_option("--convention", opt.convention_override,
                      "variance convention")
          ->check(CLI::IsMember({"paper_shifted", "accumulation"}));
      cmd->add_option("--axis", opt.axis_override, "convexity axis")
          ->check(CLI::IsMember({"variance", "std_dev"}));
    }
    cmd->add_option("--out", opt.out_path, "output path (default stdout)");
    cmd->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", opt.threads,
                    "worker threads (0 = AOISIM_THREADS or hardware)");
  };

  CLI::App* analyze =
      app.add_subcommand("analyze", "tabulate the analytical outage curve");
  add_common(analyze, true);
  analyze->add_option("--ages", ages_flag, "ages to tabulate");

  CLI::App* simulate =
      app.add_subcommand("simulate", "run the Monte-Carlo scenario");
  add_common(simulate, true);

  CLI::App* cmp = app.add_subcommand(
      "compare", "model-vs-simulation sweep over noise scales and ages");
  add_common(cmp, true);
  cmp->add_option("--noise-grid", noise_flag, "noise scale grid");
  cmp->add_option("--ages", ages_flag, "age grid");
  cmp->add_option("--confidence", confidence, "Wilson interval confidence");
  cmp->add_flag("--check", check,
                "exit 3 when the within-CI fraction drops below --check-frac");
  cmp->add_option("--check-frac", check_fraction,
                  "required within-CI fraction for --check");

  CLI::App* infl = app.add_subcommand(
      "inflection", "closed-form and numeric inflection of the outage curve");
  add_common(infl, false);
  infl->add_option("--delta-g", delta_g, "half-width of the cost band")
      ->required();
  infl->add_option("--axis", inflection_axis, "axis to report")
      ->check(CLI::IsMember({"variance", "std_dev", "both"}));

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) {
      return run_analyze(opt, ages_flag);
    }
    if (simulate->parsed()) {
      return run_simulate(opt);
    }
    if (cmp->parsed()) {
      return run_compare(opt, noise_flag, ages_flag, confidence, check,
                         check_fraction);
    }
    if (infl->parsed()) {
      return run_inflection(delta_g, inflection_axis, opt);
    }
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const aoisim::ScenarioParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const aoisim::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}
