#include "usocost/exchange.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "usocost/csv.hpp"
#include "usocost/error.hpp"

#ifndef USOCOST_DATA_DIR
#define USOCOST_DATA_DIR "data"
#endif

namespace usocost {
namespace {

enum Column : std::size_t {
  kName,
  kType,
  kCapacity,
  kTeledensity,
  kArea,
  kPopulation,
  kVillages,
  kDels,
  kMaxDistance,
  kDensity,
  kCkm,
  kCost,
  kShare,
  kColumnCount
};

struct RowReader {
  const std::vector<std::string>& cells;
  const std::vector<std::size_t>& index;  // canonical column -> position in file
  std::size_t row;

  const std::string& cell(Column c) const { return cells[index[c]]; }
  const std::string& column_name(Column c) const { return exchange_columns()[c]; }

  [[noreturn]] void fail(Column c, const std::string& what) const {
    throw ParseError("row " + std::to_string(row) + ", column '" + column_name(c) + "': " + what, row,
                     column_name(c));
  }

  double real(Column c) const {
    const auto v = csv::parse_double(cell(c));
    if (!v) fail(c, cell(c).empty() ? "missing value" : "not a number: '" + cell(c) + "'");
    if (!std::isfinite(*v)) fail(c, "not finite");
    return *v;
  }

  long long count(Column c) const {
    const auto v = csv::parse_integer(cell(c));
    if (!v) fail(c, cell(c).empty() ? "missing value" : "not an integer: '" + cell(c) + "'");
    return *v;
  }

  // Accepts "44%" or "0.44".
  double share(Column c) const {
    std::string_view text = csv::trim(cell(c));
    bool percent = false;
    if (!text.empty() && text.back() == '%') {
      percent = true;
      text.remove_suffix(1);
    }
    const auto v = csv::parse_double(text);
    if (!v) fail(c, cell(c).empty() ? "missing value" : "not a share: '" + cell(c) + "'");
    return percent ? *v / 100.0 : *v;
  }
};

}  // namespace

const std::vector<std::string>& exchange_columns() {
  static const std::vector<std::string> columns = {
      "name",         "exchange_type",      "equipped_capacity", "teledensity",   "served_area",
      "served_population", "villages_served", "dels",            "max_distance",  "subscriber_density",
      "ckm_per_line", "cost_per_line",      "installation_share"};
  return columns;
}

bool is_summary_row_name(std::string_view name) {
  std::string upper;
  for (char c : csv::trim(name)) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return upper == "AVERAGE" || upper == "TOTAL" || upper == "MEAN";
}

std::vector<ExchangeRecord> parse_exchange_csv(std::istream& source, const ParseOptions& options) {
  const csv::Table table = csv::read(source);
  const auto& columns = exchange_columns();
  if (table.header.empty()) throw ParseError("missing header row", 0, "");

  std::vector<std::size_t> index(kColumnCount);
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto pos = table.column_index(columns[c]);
    if (!pos) throw ParseError("missing mandatory column '" + columns[c] + "'", 0, columns[c]);
    index[c] = *pos;
  }

  std::vector<ExchangeRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t row = r + 1;
    if (cells.size() != table.header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(table.header.size()) +
                           " cells, found " + std::to_string(cells.size()),
                       row, "");
    }
    const RowReader in{cells, index, row};

    ExchangeRecord rec;
    rec.name = std::string(csv::trim(in.cell(kName)));
    if (is_summary_row_name(rec.name)) {
      if (options.summary_rows == SummaryRowPolicy::skip) continue;
      in.fail(kName, "summary row '" + rec.name + "' not allowed");
    }
    if (rec.name.empty()) in.fail(kName, "missing value");
    rec.exchange_type = std::string(csv::trim(in.cell(kType)));
    if (rec.exchange_type.empty()) in.fail(kType, "missing value");
    rec.equipped_capacity = in.count(kCapacity);
    rec.teledensity = in.real(kTeledensity);
    rec.served_area = in.real(kArea);
    rec.served_population = in.count(kPopulation);
    rec.villages_served = in.count(kVillages);
    if (!csv::trim(in.cell(kDels)).empty()) rec.dels = in.count(kDels);
    rec.max_distance = in.real(kMaxDistance);
    rec.subscriber_density = in.real(kDensity);
    rec.ckm_per_line = in.real(kCkm);
    rec.cost_per_line = in.real(kCost);
    rec.installation_share = in.share(kShare);

    if (rec.equipped_capacity <= 0) in.fail(kCapacity, "must be positive");
    if (rec.served_area <= 0.0) in.fail(kArea, "must be positive");
    if (rec.served_population <= 0) in.fail(kPopulation, "must be positive");
    if (rec.villages_served < 0) in.fail(kVillages, "must be non-negative");
    if (rec.dels && *rec.dels < 0) in.fail(kDels, "must be non-negative");
    if (rec.teledensity < 0.0) in.fail(kTeledensity, "must be non-negative");
    if (rec.max_distance <= 0.0) in.fail(kMaxDistance, "must be positive");
    if (rec.subscriber_density <= 0.0) in.fail(kDensity, "must be positive");
    if (rec.ckm_per_line < 0.0) in.fail(kCkm, "must be non-negative");
    if (rec.cost_per_line <= 0.0) in.fail(kCost, "must be positive");
    if (rec.installation_share < 0.0 || rec.installation_share > 1.0) in.fail(kShare, "must lie in [0, 1]");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ExchangeRecord> load_exchange_csv(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0, "");
  return parse_exchange_csv(in, options);
}

void write_exchange_csv(std::ostream& out, std::span<const ExchangeRecord> records) {
  csv::write_row(out, exchange_columns());
  for (const auto& r : records) {
    csv::write_row(out, {r.name, r.exchange_type, std::to_string(r.equipped_capacity),
                         csv::format_double(r.teledensity), csv::format_double(r.served_area),
                         std::to_string(r.served_population), std::to_string(r.villages_served),
                         r.dels ? std::to_string(*r.dels) : std::string(), csv::format_double(r.max_distance),
                         csv::format_double(r.subscriber_density), csv::format_double(r.ckm_per_line),
                         csv::format_double(r.cost_per_line), csv::format_double(r.installation_share)});
  }
}

void check_record_domain(const ExchangeRecord& r) {
  const std::string who = "exchange '" + r.name + "': ";
  if (r.equipped_capacity <= 0) throw DomainError(who + "equipped capacity must be positive");
  if (!(r.served_area > 0.0)) throw DomainError(who + "served area must be positive");
  if (r.served_population <= 0) throw DomainError(who + "served population must be positive");
  if (!(r.cost_per_line > 0.0)) throw DomainError(who + "cost per line must be positive");
  if (!(r.max_distance > 0.0)) throw DomainError(who + "max distance must be positive");
  if (!(r.subscriber_density > 0.0)) throw DomainError(who + "subscriber density must be positive");
  if (!(r.installation_share >= 0.0 && r.installation_share <= 1.0))
    throw DomainError(who + "installation share must lie in [0, 1]");
}

std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("USOCOST_FIXTURE_DIR"); env && *env) return env;
  return USOCOST_DATA_DIR;
}

std::filesystem::path resolve_input(const std::filesystem::path& name) {
  if (std::filesystem::exists(name)) return name;
  if (name.is_relative()) {
    auto candidate = fixture_dir() / name;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return name;
}

std::vector<ExchangeRecord> load_table3() { return load_exchange_csv(fixture_dir() / "table3.csv"); }

std::string_view to_string(CheckKind kind) {
  switch (kind) {
    case CheckKind::density_vs_capacity_area:
      return "density_vs_capacity_area";
    case CheckKind::teledensity_vs_capacity_population:
      return "teledensity_vs_capacity_population";
    case CheckKind::density_vs_teledensity_identity:
      return "density_vs_teledensity_identity";
  }
  return "unknown";
}

ValidationReport validate_records(std::span<const ExchangeRecord> records, const ValidationConfig& config) {
  for (const auto& r : records) check_record_domain(r);

  const auto make = [](CheckKind kind, bool mandatory, double expected, double observed, double tol) {
    CheckResult c{kind, mandatory, expected, observed, 0.0, tol, false};
    c.relative_error = observed != 0.0 ? std::abs(observed - expected) / std::abs(observed)
                                       : (expected == 0.0 ? 0.0 : INFINITY);
    c.passed = c.relative_error <= tol;
    return c;
  };

  ValidationReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double capacity = static_cast<double>(r.equipped_capacity);
    const double population = static_cast<double>(r.served_population);
    RecordReport rr;
    rr.index = i;
    rr.name = r.name;
    rr.checks.push_back(make(CheckKind::density_vs_capacity_area, true, capacity / r.served_area,
                             r.subscriber_density, config.density_tolerance));
    rr.checks.push_back(make(CheckKind::teledensity_vs_capacity_population, false, 100.0 * capacity / population,
                             r.teledensity, config.teledensity_tolerance));
    rr.checks.push_back(make(CheckKind::density_vs_teledensity_identity, false,
                             r.teledensity * (population / r.served_area) / 100.0, r.subscriber_density,
                             config.identity_tolerance));
    rr.passed = std::all_of(rr.checks.begin(), rr.checks.end(),
                            [](const CheckResult& c) { return !c.mandatory || c.passed; });
    report.passed = report.passed && rr.passed;
    report.records.push_back(std::move(rr));
  }
  return report;
}

void to_json(nlohmann::json& j, const ExchangeRecord& r) {
  j = nlohmann::json{{"name", r.name},
                     {"exchange_type", r.exchange_type},
                     {"equipped_capacity", r.equipped_capacity},
                     {"teledensity", r.teledensity},
                     {"served_area", r.served_area},
                     {"served_population", r.served_population},
                     {"villages_served", r.villages_served},
                     {"dels", r.dels ? nlohmann::json(*r.dels) : nlohmann::json(nullptr)},
                     {"max_distance", r.max_distance},
                     {"subscriber_density", r.subscriber_density},
                     {"ckm_per_line", r.ckm_per_line},
                     {"cost_per_line", r.cost_per_line},
                     {"installation_share", r.installation_share}};
}

void from_json(const nlohmann::json& j, ExchangeRecord& r) {
  j.at("name").get_to(r.name);
  r.exchange_type = j.value("exchange_type", std::string());
  j.at("equipped_capacity").get_to(r.equipped_capacity);
  r.teledensity = j.value("teledensity", 0.0);
  j.at("served_area").get_to(r.served_area);
  j.at("served_population").get_to(r.served_population);
  r.villages_served = j.value("villages_served", 0LL);
  if (j.contains("dels") && !j.at("dels").is_null()) {
    r.dels = j.at("dels").get<long long>();
  } else {
    r.dels.reset();
  }
  j.at("max_distance").get_to(r.max_distance);
  j.at("subscriber_density").get_to(r.subscriber_density);
  r.ckm_per_line = j.value("ckm_per_line", 0.0);
  j.at("cost_per_line").get_to(r.cost_per_line);
  r.installation_share = j.value("installation_share", 0.0);
}

void to_json(nlohmann::json& j, const ValidationReport& report) {
  j = nlohmann::json::object();
  j["passed"] = report.passed;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& rr : report.records) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : rr.checks) {
      checks.push_back({{"check", to_string(c.kind)},
                        {"mandatory", c.mandatory},
                        {"expected", c.expected},
                        {"observed", c.observed},
                        {"relative_error", c.relative_error},
                        {"tolerance", c.tolerance},
                        {"passed", c.passed}});
    }
    recs.push_back({{"index", rr.index}, {"name", rr.name}, {"passed", rr.passed}, {"checks", std::move(checks)}});
  }
}

}  // namespace usocost
