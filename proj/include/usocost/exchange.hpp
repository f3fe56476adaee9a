#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace usocost {

/// One rural exchange area: switch capacity, served area and population,
/// and the outdoor-plant (local loop) cost parameters measured for it.
///
/// Units: areas in km², distances in km, cost_per_line in thousand currency
/// units per line, installation_share as a fraction of outdoor-plant cost.
struct ExchangeRecord {
  std::string name;
  std::string exchange_type;
  long long equipped_capacity = 0;
  double teledensity = 0.0;  // phones per 100 population
  double served_area = 0.0;
  long long served_population = 0;
  long long villages_served = 0;
  std::optional<long long> dels;  // blank in the source table for some rows
  double max_distance = 0.0;
  double subscriber_density = 0.0;  // subscribers per km²
  double ckm_per_line = 0.0;
  double cost_per_line = 0.0;
  double installation_share = 0.0;

  bool operator==(const ExchangeRecord&) const = default;
};

/// Canonical CSV column order.
const std::vector<std::string>& exchange_columns();

enum class SummaryRowPolicy { skip, reject };

struct ParseOptions {
  // Rows whose name is AVERAGE/TOTAL/MEAN (case-insensitive) are summaries.
  SummaryRowPolicy summary_rows = SummaryRowPolicy::skip;
};

std::vector<ExchangeRecord> parse_exchange_csv(std::istream& source, const ParseOptions& options = {});
std::vector<ExchangeRecord> load_exchange_csv(const std::filesystem::path& path,
                                              const ParseOptions& options = {});

// Writes the canonical header and one line per record; absent dels is an
// empty cell and installation_share is written as a fraction.
void write_exchange_csv(std::ostream& out, std::span<const ExchangeRecord> records);

bool is_summary_row_name(std::string_view name);

// Throws DomainError unless capacity, area and population are positive,
// cost and max distance are positive and the installation share is in [0,1].
void check_record_domain(const ExchangeRecord& record);

// Directory holding bundled fixtures; USOCOST_FIXTURE_DIR overrides the
// compiled-in default.
std::filesystem::path fixture_dir();

// Resolves `name` as given if it exists, otherwise inside fixture_dir().
std::filesystem::path resolve_input(const std::filesystem::path& name);

// The ten field-study exchanges shipped as table3.csv.
std::vector<ExchangeRecord> load_table3();

// ---------------------------------------------------------------------------
// Validation

struct ValidationConfig {
  double density_tolerance = 0.02;
  double teledensity_tolerance = 0.05;
  double identity_tolerance = 0.10;
};

enum class CheckKind {
  density_vs_capacity_area,          // subscriber_density ≈ capacity / area
  teledensity_vs_capacity_population,  // teledensity ≈ 100 · capacity / population
  density_vs_teledensity_identity,   // density ≈ teledensity · (population / area) / 100
};

std::string_view to_string(CheckKind kind);

struct CheckResult {
  CheckKind kind;
  bool mandatory = false;
  double expected = 0.0;  // value implied by the other columns
  double observed = 0.0;  // value printed in the record
  double relative_error = 0.0;  // |observed - expected| / observed
  double tolerance = 0.0;
  bool passed = false;
};

struct RecordReport {
  std::size_t index = 0;
  std::string name;
  std::vector<CheckResult> checks;
  bool passed = false;  // all mandatory checks pass
};

struct ValidationReport {
  std::vector<RecordReport> records;
  bool passed = true;
};

ValidationReport validate_records(std::span<const ExchangeRecord> records, const ValidationConfig& config = {});

void to_json(nlohmann::json& j, const ExchangeRecord& record);
void from_json(const nlohmann::json& j, ExchangeRecord& record);
void to_json(nlohmann::json& j, const ValidationReport& report);

}  // namespace usocost
