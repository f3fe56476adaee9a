#include "usocost/loop_cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "usocost/error.hpp"

namespace usocost {
namespace {

// Non-finite values are written as strings so that exact fits (infinite
// t-statistics) survive a JSON round trip.
nlohmann::json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

GroupStats mean_of(const std::vector<double>& costs) {
  GroupStats g;
  g.count = costs.size();
  if (!costs.empty()) {
    double sum = 0.0;
    for (double c : costs) sum += c;
    g.mean_cost = sum / static_cast<double>(costs.size());
  }
  return g;
}

}  // namespace

LoopCostModel LoopCostModel::published() {
  return LoopCostModel{3.467, -0.4411, 0.91, 28.94, -9.02, 10, 50.0};
}

LoopCostModel fit_loglog(std::span<const CostPoint> points, double density_cap) {
  if (points.size() < 3) throw DomainError("need >=3 points to fit the loop cost model");
  if (!(density_cap > 0.0)) throw DomainError("density cap must be positive");

  const double n = static_cast<double>(points.size());
  std::vector<double> x, y;
  x.reserve(points.size());
  y.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.density > 0.0) || !(p.cost > 0.0) || !std::isfinite(p.density) || !std::isfinite(p.cost))
      throw DomainError("density and cost must be positive and finite for a log-log fit");
    x.push_back(std::log(p.density));
    y.push_back(std::log(p.cost));
  }

  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DomainError("densities are all equal; slope is undefined");

  LoopCostModel m;
  m.n = points.size();
  m.density_cap = density_cap;
  m.slope = sxy / sxx;
  m.intercept = mean_y - m.slope * mean_x;

  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (m.intercept + m.slope * x[i]);
    sse += r * r;
  }
  // Pearson r² of (ln x, ln y); equal to 1 - SSE/SST for simple OLS.
  m.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;

  const double sigma2 = sse / (n - 2.0);
  const double se_slope = std::sqrt(sigma2 / sxx);
  const double se_intercept = std::sqrt(sigma2 * (1.0 / n + mean_x * mean_x / sxx));
  const auto t_stat = [](double coef, double se) {
    if (se > 0.0) return coef / se;
    if (coef == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), coef);
  };
  m.t_slope = t_stat(m.slope, se_slope);
  m.t_intercept = t_stat(m.intercept, se_intercept);
  return m;
}

std::vector<CostPoint> cost_points(std::span<const ExchangeRecord> records) {
  std::vector<CostPoint> pts;
  pts.reserve(records.size());
  for (const auto& r : records) pts.push_back({r.subscriber_density, r.cost_per_line});
  return pts;
}

double predict_cost(const LoopCostModel& model, double density) {
  if (!(density > 0.0)) throw DomainError("density must be positive");
  if (!(model.density_cap > 0.0)) throw DomainError("density cap must be positive");
  const double d = std::min(density, model.density_cap);
  return std::exp(model.intercept + model.slope * std::log(d));
}

double density_from_size(const DensitySizeModel& model, double exchange_size) {
  if (!(exchange_size >= 0.0)) throw DomainError("exchange size must be non-negative");
  return model.slope * exchange_size + model.intercept;
}

double ckm_per_line(double avg_subscriber_distance) {
  if (!(avg_subscriber_distance >= 0.0)) throw DomainError("average subscriber distance must be non-negative");
  return 2.0 * avg_subscriber_distance;
}

DensityBand classify_density_band(double density) {
  if (!(density > 0.0)) throw DomainError("density must be positive");
  if (density < 5.0) return DensityBand::below_5;
  if (density < 10.0) return DensityBand::from_5_to_10;
  return DensityBand::above_10;
}

std::string_view to_string(DensityBand band) {
  switch (band) {
    case DensityBand::below_5:
      return "below_5";
    case DensityBand::from_5_to_10:
      return "from_5_to_10";
    case DensityBand::above_10:
      return "above_10";
  }
  return "unknown";
}

BandStatistics band_statistics(std::span<const ExchangeRecord> records) {
  if (records.empty()) throw DomainError("band statistics need at least one record");
  std::array<std::vector<double>, 3> costs;
  for (const auto& r : records)
    costs[static_cast<std::size_t>(classify_density_band(r.subscriber_density))].push_back(r.cost_per_line);
  BandStatistics stats;
  for (std::size_t b = 0; b < costs.size(); ++b) stats.bands[b] = mean_of(costs[b]);
  return stats;
}

SizeGroupStatistics size_group_statistics(std::span<const ExchangeRecord> records, long long cutoff) {
  if (records.empty()) throw DomainError("size group statistics need at least one record");
  if (cutoff <= 0) throw DomainError("size cutoff must be positive");
  std::vector<double> small, large;
  for (const auto& r : records) (r.equipped_capacity <= cutoff ? small : large).push_back(r.cost_per_line);
  return SizeGroupStatistics{cutoff, mean_of(small), mean_of(large)};
}

void to_json(nlohmann::json& j, const LoopCostModel& m) {
  j = nlohmann::json{{"intercept", number_to_json(m.intercept)},
                     {"slope", number_to_json(m.slope)},
                     {"r_squared", number_to_json(m.r_squared)},
                     {"t_intercept", number_to_json(m.t_intercept)},
                     {"t_slope", number_to_json(m.t_slope)},
                     {"n", m.n},
                     {"density_cap", number_to_json(m.density_cap)}};
}

void from_json(const nlohmann::json& j, LoopCostModel& m) {
  m.intercept = number_from_json(j.at("intercept"));
  m.slope = number_from_json(j.at("slope"));
  m.r_squared = number_from_json(j.at("r_squared"));
  m.t_intercept = number_from_json(j.at("t_intercept"));
  m.t_slope = number_from_json(j.at("t_slope"));
  m.n = j.at("n").get<std::size_t>();
  m.density_cap = j.contains("density_cap") ? number_from_json(j.at("density_cap")) : 50.0;
  if (m.n < 3) throw ConfigError("loop cost model needs n >= 3");
  if (!(m.density_cap > 0.0)) throw ConfigError("density_cap must be positive");
  if (!(m.r_squared >= 0.0 && m.r_squared <= 1.0)) throw ConfigError("r_squared must lie in [0, 1]");
}

void to_json(nlohmann::json& j, const DensitySizeModel& m) {
  j = nlohmann::json{{"slope", m.slope}, {"intercept", m.intercept}};
  j["r_squared"] = m.r_squared ? nlohmann::json(*m.r_squared) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, DensitySizeModel& m) {
  j.at("slope").get_to(m.slope);
  j.at("intercept").get_to(m.intercept);
  if (j.contains("r_squared") && !j.at("r_squared").is_null()) {
    m.r_squared = j.at("r_squared").get<double>();
  } else {
    m.r_squared.reset();
  }
  if (!(m.slope > 0.0)) throw ConfigError("density-size slope must be positive");
}

}  // namespace usocost
