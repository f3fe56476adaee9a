#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace usocost {

// Village phones by call facility. Revenues are per phone per year.
struct RevenueMix {
  double count_local_only = 0.0;
  double count_long_distance = 0.0;
  double revenue_local = 0.0;
  double revenue_ld = 0.0;

  // Sample counts pooled over all surveyed circles: 38391 local-only and
  // 20 long-distance village phones.
  static RevenueMix sampled_vpts(double revenue_local, double revenue_ld);
};

/// Inputs for one net universal service cost evaluation. Money is in
/// thousand currency units; rates are per year.
struct NuscScenario {
  double capex_per_line = 0.0;
  double discount_rate = 0.0;
  int lifetime = 0;
  double opex_fraction = 0.0;  // of capex, per year
  std::variant<double, RevenueMix> revenue = 0.0;  // direct annual revenue per line, or a mix

  // Capital already spent on existing village phones. Excluded unless
  // include_existing_costs is set.
  double existing_capex_per_line = 0.0;
  bool include_existing_costs = false;

  std::string currency = "INR thousand";
};

struct NuscResult {
  double capex_per_line = 0.0;
  double annualized_capex = 0.0;
  double annual_opex = 0.0;
  double annual_revenue = 0.0;
  double nusc = 0.0;  // annualized_capex + annual_opex - annual_revenue; negative means viable
};

inline const std::vector<double> kDefaultCapexGrid = {50.0, 75.0, 100.0};

double capital_recovery_factor(double rate, int lifetime);
// Present value of 1 per year for `lifetime` years; the reciprocal of the CRF.
double annuity_present_value_factor(double rate, int lifetime);
double expected_revenue(const RevenueMix& mix);
double annual_revenue(const NuscScenario& scenario);

void validate(const NuscScenario& scenario);
NuscResult nusc_per_line(const NuscScenario& scenario);
std::vector<NuscResult> scenario_grid(const NuscScenario& base,
                                      std::span<const double> capex_values = kDefaultCapexGrid);

void to_json(nlohmann::json& j, const NuscScenario& s);
// capex_per_line may be omitted when the scenario only feeds a grid.
void from_json(const nlohmann::json& j, NuscScenario& s);
void to_json(nlohmann::json& j, const NuscResult& r);

// Columns: capex, annualized_capex, opex, revenue, nusc.
void write_nusc_csv(std::ostream& out, std::span<const NuscResult> rows);

}  // namespace usocost
