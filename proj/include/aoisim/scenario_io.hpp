#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aoisim/montecarlo.hpp"

namespace aoisim {

class ScenarioParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario_json(const std::string& text);

/// Canonical JSON form (alphabetical keys, round-trip-exact numbers).
std::string serialize_scenario(const Scenario& scenario);

/// FNV-1a 64 over the canonical serialization.
std::uint64_t scenario_hash(const Scenario& scenario);
std::string scenario_hash_hex(const Scenario& scenario);

enum class OutputFormat { csv, json };
OutputFormat parse_output_format(const std::string& text);

/// Shortest round-trip decimal form; scientific for 0 < |x| < 1e-3.
/// Locale-independent.
std::string format_number(double x);

struct ResultMetadata {
  std::string command;
  std::string scenario_name;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  std::string convention;
  std::string axis;
  std::vector<std::pair<std::string, std::string>> extra;
  bool with_timestamp = true;
};

void write_outage_curve(std::ostream& out, const ResultMetadata& meta,
                        const std::vector<OutagePoint>& rows,
                        OutputFormat format);

struct SimulationAgeRow {
  int age = 0;
  std::int64_t steps = 0;
  std::int64_t outages = 0;
  double p_sim = 0.0;
  double ci_half_width = 0.0;
};

void write_simulation(std::ostream& out, const ResultMetadata& meta,
                      const RunStats& totals,
                      const std::vector<SimulationAgeRow>& rows,
                      OutputFormat format);

void write_comparison(std::ostream& out, const ResultMetadata& meta,
                      const std::vector<ComparisonRow>& rows,
                      OutputFormat format);

struct InflectionRow {
  std::string axis;
  double paper_value = 0.0;
  double numeric_value = 0.0;
};

void write_inflection(std::ostream& out, const ResultMetadata& meta,
                      const std::vector<InflectionRow>& rows,
                      OutputFormat format);

}  // namespace aoisim
