#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "usocost/exchange.hpp"
#include "usocost/loop_cost.hpp"

namespace usocost {

/// Exchange-size distribution of one short distance charging area. Full
/// exchange records are optional; when present their observed densities
/// replace the size-derived ones.
struct SdcaProfile {
  std::string sdca_id;
  std::string ssa_id;
  std::vector<double> exchange_sizes;
  std::vector<ExchangeRecord> records;
  std::map<std::string, std::string> tags;
};

struct ExchangeEstimate {
  double size = 0.0;
  double density = 0.0;
  double cost_per_line = 0.0;
  bool observed_density = false;
};

struct SdcaCostEstimate {
  std::string sdca_id;
  std::string ssa_id;
  std::vector<ExchangeEstimate> exchanges;
  double weighted_cost_per_line = 0.0;  // Σ(size · cost) / Σ size
  double aggregate_density = 0.0;
  bool used_observed_densities = false;
};

SdcaCostEstimate estimate_sdca_cost(const SdcaProfile& profile, const DensitySizeModel& dsm,
                                    const LoopCostModel& lcm);

/// Summary row over a set of exchanges, with the weighting used by the
/// field-study table's AVERAGE line:
///  - simple means: capacity, area, population, villages, max distance
///  - dels: mean over records that carry a value
///  - density: Σ capacity / Σ area; teledensity: 100 · Σ capacity / Σ population
///  - cost and CKM per line: capacity-weighted means
///  - installation share: weighted by outdoor-plant spend (capacity · cost)
struct AggregateRow {
  std::size_t count = 0;
  double equipped_capacity = 0.0;
  double teledensity = 0.0;
  double served_area = 0.0;
  double served_population = 0.0;
  double villages_served = 0.0;
  std::optional<double> dels;
  double max_distance = 0.0;
  double subscriber_density = 0.0;
  double ckm_per_line = 0.0;
  double cost_per_line = 0.0;
  double installation_share = 0.0;

  double total_capacity = 0.0;
  double total_area = 0.0;
  double total_population = 0.0;
};

AggregateRow summarize_records(std::span<const ExchangeRecord> records);

struct ProfileGroup {
  std::vector<std::string> key;  // tag values in key order; empty for the untagged group
  bool untagged = false;
  std::vector<SdcaProfile> profiles;
};

// Exact-match grouping on the tag tuple; groups appear in order of first
// occurrence, the untagged group (missing or empty tag values) last.
std::vector<ProfileGroup> group_profiles(std::span<const SdcaProfile> profiles,
                                         const std::vector<std::string>& keys);

void to_json(nlohmann::json& j, const SdcaProfile& p);
void from_json(const nlohmann::json& j, SdcaProfile& p);
void to_json(nlohmann::json& j, const SdcaCostEstimate& e);
void to_json(nlohmann::json& j, const AggregateRow& row);

// Flat CSV, one line per exchange: sdca_id, ssa_id, size, density,
// observed_density, cost_per_line, weighted_cost_per_line, aggregate_density.
void write_estimates_csv(std::ostream& out, std::span<const SdcaCostEstimate> estimates);
void write_aggregate_csv(std::ostream& out, const AggregateRow& row);

}  // namespace usocost
