#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "usocost/exchange.hpp"

namespace usocost {

struct CostPoint {
  double density = 0.0;  // subscribers per km²
  double cost = 0.0;     // thousand currency per line
};

/// Double-log loop cost model: ln(cost) = intercept + slope · ln(density),
/// with density clamped at density_cap before evaluation (cost per line
/// flattens out once subscribers are dense enough to share trenching).
struct LoopCostModel {
  double intercept = 0.0;
  double slope = 0.0;  // elasticity of cost with respect to density
  double r_squared = 0.0;
  double t_intercept = 0.0;
  double t_slope = 0.0;
  std::size_t n = 0;
  double density_cap = 50.0;

  // Coefficients and diagnostics as published for the ten-exchange sample.
  static LoopCostModel published();

  bool operator==(const LoopCostModel&) const = default;
};

/// Linear exchange size → subscriber density relationship.
struct DensitySizeModel {
  double slope = 0.0179;  // density per equipped line
  double intercept = 0.0169;
  std::optional<double> r_squared = 0.988;

  bool operator==(const DensitySizeModel&) const = default;
};

LoopCostModel fit_loglog(std::span<const CostPoint> points, double density_cap = 50.0);
std::vector<CostPoint> cost_points(std::span<const ExchangeRecord> records);

double predict_cost(const LoopCostModel& model, double density);
double density_from_size(const DensitySizeModel& model, double exchange_size);

// Conductor-km per line is twice the average subscriber distance.
double ckm_per_line(double avg_subscriber_distance);

// Half-open bands [0,5), [5,10), [10,inf).
enum class DensityBand { below_5, from_5_to_10, above_10 };
inline constexpr std::array<DensityBand, 3> kDensityBands = {DensityBand::below_5, DensityBand::from_5_to_10,
                                                            DensityBand::above_10};

DensityBand classify_density_band(double density);
std::string_view to_string(DensityBand band);

struct GroupStats {
  std::size_t count = 0;
  std::optional<double> mean_cost;  // absent for an empty group
};

struct BandStatistics {
  std::array<GroupStats, 3> bands;
  const GroupStats& operator[](DensityBand b) const { return bands[static_cast<std::size_t>(b)]; }
};

BandStatistics band_statistics(std::span<const ExchangeRecord> records);

struct SizeGroupStatistics {
  long long cutoff = 512;
  GroupStats small;  // equipped_capacity <= cutoff
  GroupStats large;  // equipped_capacity > cutoff
};

SizeGroupStatistics size_group_statistics(std::span<const ExchangeRecord> records, long long cutoff = 512);

void to_json(nlohmann::json& j, const LoopCostModel& m);
void from_json(const nlohmann::json& j, LoopCostModel& m);
void to_json(nlohmann::json& j, const DensitySizeModel& m);
void from_json(const nlohmann::json& j, DensitySizeModel& m);

}  // namespace usocost
