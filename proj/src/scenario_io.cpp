#include "aoisim/scenario_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "aoisim/version.hpp"

namespace aoisim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ScenarioParseError(where + ": " + what);
}

const json& field(const json& j, const std::string& where,
                  const std::string& key) {
  if (!j.is_object() || !j.contains(key)) {
    fail(where + "." + key, "missing field");
  }
  return j.at(key);
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) {
    fail(where, "expected a number");
  }
  return j.get<double>();
}

std::int64_t integer_at(const json& j, const std::string& where) {
  if (!j.is_number_integer()) {
    fail(where, "expected an integer");
  }
  return j.get<std::int64_t>();
}

Matrix matrix_at(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    fail(where, "expected a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  if (!j.at(0).is_array() || j.at(0).empty()) {
    fail(where, "expected rows to be arrays");
  }
  const std::size_t cols = j.at(0).size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    if (!row.is_array() || row.size() != cols) {
      fail(where + "[" + std::to_string(r) + "]", "ragged matrix row");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number_at(row.at(c), where + "[" + std::to_string(r) + "][" +
                                   std::to_string(c) + "]");
    }
  }
  return m;
}

Vector vector_at(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    fail(where, "expected a non-empty array");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        number_at(j.at(i), where + "[" + std::to_string(i) + "]");
  }
  return v;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v(i));
  }
  return arr;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_metadata_csv(std::ostream& out, const ResultMetadata& meta) {
  out << "# tool=" << kToolName << " " << kVersion << "\n";
  out << "# command=" << meta.command << "\n";
  if (!meta.scenario_name.empty()) {
    out << "# scenario=" << meta.scenario_name << "\n";
  }
  if (!meta.scenario_hash.empty()) {
    out << "# scenario_hash=" << meta.scenario_hash << "\n";
  }
  out << "# seed=" << meta.seed << "\n";
  if (!meta.convention.empty()) {
    out << "# convention=" << meta.convention << "\n";
  }
  if (!meta.axis.empty()) {
    out << "# axis=" << meta.axis << "\n";
  }
  for (const auto& [key, value] : meta.extra) {
    out << "# " << key << "=" << value << "\n";
  }
  if (meta.with_timestamp) {
    out << "# written=" << timestamp_utc() << "\n";
  }
}

json metadata_json(const ResultMetadata& meta) {
  json j;
  j["tool"] = std::string(kToolName) + " " + kVersion;
  j["command"] = meta.command;
  if (!meta.scenario_name.empty()) {
    j["scenario"] = meta.scenario_name;
  }
  if (!meta.scenario_hash.empty()) {
    j["scenario_hash"] = meta.scenario_hash;
  }
  j["seed"] = meta.seed;
  if (!meta.convention.empty()) {
    j["convention"] = meta.convention;
  }
  if (!meta.axis.empty()) {
    j["axis"] = meta.axis;
  }
  for (const auto& [key, value] : meta.extra) {
    j[key] = value;
  }
  if (meta.with_timestamp) {
    j["written"] = timestamp_utc();
  }
  return j;
}

}  // namespace

Scenario parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioParseError(std::string("invalid JSON: ") + e.what());
  }

  Scenario s;
  const json& model = field(j, "scenario", "model");
  s.model.a = matrix_at(field(model, "model", "A"), "model.A");
  s.model.b = matrix_at(field(model, "model", "B"), "model.B");
  s.model.sigma = matrix_at(field(model, "model", "Sigma"), "model.Sigma");
  const Vector g = vector_at(field(model, "model", "g"), "model.g");
  s.model.g = g.transpose();
  s.model.x_aim = vector_at(field(model, "model", "x_aim"), "model.x_aim");
  s.model.delta_g = number_at(field(model, "model", "delta_g"), "model.delta_g");

  const json& link = field(j, "scenario", "link");
  const json& mode = field(link, "link", "mode");
  if (!mode.is_string()) {
    fail("link.mode", "expected a string");
  }
  if (mode.get<std::string>() == "bernoulli") {
    s.link = LinkModel::make_bernoulli(
        number_at(field(link, "link", "p"), "link.p"));
  } else if (mode.get<std::string>() == "fixed_age") {
    s.link = LinkModel::make_fixed_age(static_cast<int>(
        integer_at(field(link, "link", "age"), "link.age")));
  } else {
    fail("link.mode", "expected 'bernoulli' or 'fixed_age'");
  }

  s.x0 = vector_at(field(j, "scenario", "x0"), "x0");
  s.horizon = integer_at(field(j, "scenario", "horizon"), "horizon");
  s.episodes = integer_at(field(j, "scenario", "episodes"), "episodes");
  s.warmup = integer_at(field(j, "scenario", "warmup"), "warmup");
  const std::int64_t seed =
      integer_at(field(j, "scenario", "base_seed"), "base_seed");
  s.base_seed = static_cast<std::uint64_t>(seed);

  const json& conv = field(j, "scenario", "convention");
  if (!conv.is_string()) {
    fail("convention", "expected a string");
  }
  try {
    s.convention = parse_convention(conv.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("convention", e.what());
  }
  const json& axis = field(j, "scenario", "axis");
  if (!axis.is_string()) {
    fail("axis", "expected a string");
  }
  try {
    s.axis = parse_axis(axis.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("axis", e.what());
  }

  if (j.contains("name")) {
    if (!j.at("name").is_string()) {
      fail("name", "expected a string");
    }
    s.name = j.at("name").get<std::string>();
  }
  if (j.contains("history_capacity")) {
    s.history_capacity = static_cast<std::size_t>(
        integer_at(j.at("history_capacity"), "history_capacity"));
  }
  if (j.contains("noise_grid")) {
    const Vector grid = vector_at(j.at("noise_grid"), "noise_grid");
    s.noise_grid.assign(grid.data(), grid.data() + grid.size());
  }
  if (j.contains("age_grid")) {
    const json& grid = j.at("age_grid");
    if (!grid.is_array() || grid.empty()) {
      fail("age_grid", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      s.age_grid.push_back(static_cast<int>(
          integer_at(grid.at(i), "age_grid[" + std::to_string(i) + "]")));
    }
  }

  try {
    s.validate();
  } catch (const NumericError&) {
    throw;  // non-PSD Sigma and friends are numerical failures, not parse errors
  } catch (const std::exception& e) {
    throw ScenarioParseError(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioParseError("cannot open scenario file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Scenario s = parse_scenario_json(buffer.str());
  if (s.name.empty()) {
    s.name = path.stem().string();
  }
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["model"]["A"] = to_json(s.model.a);
  j["model"]["B"] = to_json(s.model.b);
  j["model"]["Sigma"] = to_json(s.model.sigma);
  j["model"]["g"] = to_json(Vector(s.model.g.transpose()));
  j["model"]["x_aim"] = to_json(s.model.x_aim);
  j["model"]["delta_g"] = s.model.delta_g;
  if (s.link.mode == LinkModel::Mode::bernoulli) {
    j["link"]["mode"] = "bernoulli";
    j["link"]["p"] = s.link.p;
  } else {
    j["link"]["mode"] = "fixed_age";
    j["link"]["age"] = s.link.fixed_age;
  }
  j["x0"] = to_json(s.x0);
  j["horizon"] = s.horizon;
  j["episodes"] = s.episodes;
  j["warmup"] = s.warmup;
  j["base_seed"] = s.base_seed;
  j["convention"] = to_string(s.convention);
  j["axis"] = to_string(s.axis);
  j["history_capacity"] = s.history_capacity;
  if (!s.noise_grid.empty()) {
    j["noise_grid"] = s.noise_grid;
  }
  if (!s.age_grid.empty()) {
    j["age_grid"] = s.age_grid;
  }
  return j.dump(2) + "\n";
}

std::uint64_t scenario_hash(const Scenario& s) {
  const std::string canonical = serialize_scenario(s);
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char ch : canonical) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string scenario_hash_hex(const Scenario& s) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(scenario_hash(s)));
  return buf;
}

OutputFormat parse_output_format(const std::string& text) {
  if (text == "csv") {
    return OutputFormat::csv;
  }
  if (text == "json") {
    return OutputFormat::json;
  }
  throw std::invalid_argument("unknown output format: " + text);
}

std::string format_number(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[40];
  const bool scientific = x != 0.0 && std::abs(x) < 1e-3;
  const auto result =
      scientific
          ? std::to_chars(buf, buf + sizeof(buf), x,
                          std::chars_format::scientific)
          : std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general);
  return std::string(buf, result.ptr);
}

void write_outage_curve(std::ostream& out, const ResultMetadata& meta,
                        const std::vector<OutagePoint>& rows,
                        OutputFormat format) {
  if (format == OutputFormat::csv) {
    write_metadata_csv(out, meta);
    out << "age,sigma_g_sq,p_out,regime\n";
    for (const OutagePoint& row : rows) {
      out << row.age << ',' << format_number(row.sigma_g_sq) << ','
          << format_number(row.p_out) << ',' << to_string(row.regime) << "\n";
    }
    return;
  }
  json doc;
  doc["metadata"] = metadata_json(meta);
  doc["rows"] = json::array();
  for (const OutagePoint& row : rows) {
    doc["rows"].push_back({{"age", row.age},
                           {"sigma_g_sq", row.sigma_g_sq},
                           {"p_out", row.p_out},
                           {"regime", to_string(row.regime)}});
  }
  out << doc.dump(2) << "\n";
}

void write_simulation(std::ostream& out, const ResultMetadata& meta,
                      const RunStats& totals,
                      const std::vector<SimulationAgeRow>& rows,
                      OutputFormat format) {
  if (format == OutputFormat::csv) {
    write_metadata_csv(out, meta);
    out << "# counted_steps=" << totals.counted_steps << "\n";
    out << "# outage_steps=" << totals.outage_steps << "\n";
    out << "# empirical_variance=" << format_number(totals.empirical_variance())
        << "\n";
    out << "age,steps,outages,p_sim,ci_half_width\n";
    for (const SimulationAgeRow& row : rows) {
      out << row.age << ',' << row.steps << ',' << row.outages << ','
          << format_number(row.p_sim) << ',' << format_number(row.ci_half_width)
          << "\n";
    }
    return;
  }
  json doc;
  doc["metadata"] = metadata_json(meta);
  doc["totals"] = {{"counted_steps", totals.counted_steps},
                   {"outage_steps", totals.outage_steps},
                   {"empirical_variance", totals.empirical_variance()}};
  doc["rows"] = json::array();
  for (const SimulationAgeRow& row : rows) {
    doc["rows"].push_back({{"age", row.age},
                           {"steps", row.steps},
                           {"outages", row.outages},
                           {"p_sim", row.p_sim},
                           {"ci_half_width", row.ci_half_width}});
  }
  out << doc.dump(2) << "\n";
}

void write_comparison(std::ostream& out, const ResultMetadata& meta,
                      const std::vector<ComparisonRow>& rows,
                      OutputFormat format) {
  if (format == OutputFormat::csv) {
    write_metadata_csv(out, meta);
    out << "noise_scale,age,p_sim,ci_half_width,p_model,within_ci\n";
    for (const ComparisonRow& row : rows) {
      out << format_number(row.noise_scale) << ',' << row.age << ','
          << format_number(row.p_sim) << ',' << format_number(row.ci_half_width)
          << ',' << format_number(row.p_model) << ','
          << (row.within_ci ? "true" : "false") << "\n";
    }
    return;
  }
  json doc;
  doc["metadata"] = metadata_json(meta);
  doc["rows"] = json::array();
  for (const ComparisonRow& row : rows) {
    doc["rows"].push_back({{"noise_scale", row.noise_scale},
                           {"age", row.age},
                           {"p_sim", row.p_sim},
                           {"ci_half_width", row.ci_half_width},
                           {"p_model", row.p_model},
                           {"within_ci", row.within_ci}});
  }
  out << doc.dump(2) << "\n";
}

void write_inflection(std::ostream& out, const ResultMetadata& meta,
                      const std::vector<InflectionRow>& rows,
                      OutputFormat format) {
  if (format == OutputFormat::csv) {
    write_metadata_csv(out, meta);
    out << "axis,paper_value,numeric_value\n";
    for (const InflectionRow& row : rows) {
      out << row.axis << ',' << format_number(row.paper_value) << ','
          << format_number(row.numeric_value) << "\n";
    }
    return;
  }
  json doc;
  doc["metadata"] = metadata_json(meta);
  doc["rows"] = json::array();
  for (const InflectionRow& row : rows) {
    doc["rows"].push_back({{"axis", row.axis},
                           {"paper_value", row.paper_value},
                           {"numeric_value", row.numeric_value}});
  }
  out << doc.dump(2) << "\n";
}

}  // namespace aoisim
