#include "usocost/nusc.hpp"

#include <cmath>
#include <ostream>

#include "usocost/csv.hpp"
#include "usocost/error.hpp"

namespace usocost {

RevenueMix RevenueMix::sampled_vpts(double revenue_local, double revenue_ld) {
  return RevenueMix{38391.0, 20.0, revenue_local, revenue_ld};
}

double capital_recovery_factor(double rate, int lifetime) {
  if (lifetime < 1) throw DomainError("lifetime must be at least one year");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("discount rate must be finite and non-negative");
  if (rate == 0.0) return 1.0 / static_cast<double>(lifetime);
  // r / (1 - (1+r)^-n), written with expm1/log1p to stay accurate for small r.
  return rate / -std::expm1(-static_cast<double>(lifetime) * std::log1p(rate));
}

double annuity_present_value_factor(double rate, int lifetime) {
  return 1.0 / capital_recovery_factor(rate, lifetime);
}

double expected_revenue(const RevenueMix& mix) {
  if (!(mix.count_local_only >= 0.0) || !(mix.count_long_distance >= 0.0))
    throw DomainError("phone counts must be non-negative");
  if (!(mix.revenue_local >= 0.0) || !(mix.revenue_ld >= 0.0)) throw DomainError("revenues must be non-negative");
  const double total = mix.count_local_only + mix.count_long_distance;
  if (total == 0.0) throw DomainError("revenue mix has no phones");
  return (mix.count_local_only * mix.revenue_local + mix.count_long_distance * mix.revenue_ld) / total;
}

double annual_revenue(const NuscScenario& s) {
  if (const auto* direct = std::get_if<double>(&s.revenue)) {
    if (!(*direct >= 0.0) || !std::isfinite(*direct)) throw DomainError("annual revenue must be non-negative");
    return *direct;
  }
  return expected_revenue(std::get<RevenueMix>(s.revenue));
}

void validate(const NuscScenario& s) {
  if (!(s.capex_per_line > 0.0) || !std::isfinite(s.capex_per_line))
    throw DomainError("capex per line must be positive");
  if (!(s.discount_rate >= 0.0) || !std::isfinite(s.discount_rate))
    throw DomainError("discount rate must be non-negative");
  if (s.lifetime < 1) throw DomainError("lifetime must be at least one year");
  if (!(s.opex_fraction >= 0.0) || !std::isfinite(s.opex_fraction))
    throw DomainError("opex fraction must be non-negative");
  if (!(s.existing_capex_per_line >= 0.0)) throw DomainError("existing capex must be non-negative");
}

NuscResult nusc_per_line(const NuscScenario& s) {
  validate(s);
  const double crf = capital_recovery_factor(s.discount_rate, s.lifetime);
  NuscResult r;
  r.capex_per_line = s.capex_per_line;
  r.annualized_capex = s.capex_per_line * crf;
  if (s.include_existing_costs) r.annualized_capex += s.existing_capex_per_line * crf;
  r.annual_opex = s.opex_fraction * s.capex_per_line;
  r.annual_revenue = annual_revenue(s);
  r.nusc = r.annualized_capex + r.annual_opex - r.annual_revenue;
  return r;
}

std::vector<NuscResult> scenario_grid(const NuscScenario& base, std::span<const double> capex_values) {
  if (capex_values.empty()) throw DomainError("capex grid is empty");
  std::vector<NuscResult> rows;
  rows.reserve(capex_values.size());
  for (double capex : capex_values) {
    NuscScenario s = base;
    s.capex_per_line = capex;
    rows.push_back(nusc_per_line(s));
  }
  return rows;
}

void to_json(nlohmann::json& j, const NuscScenario& s) {
  j = nlohmann::json{{"capex_per_line", s.capex_per_line},
                     {"discount_rate", s.discount_rate},
                     {"lifetime", s.lifetime},
                     {"opex_fraction", s.opex_fraction},
                     {"existing_capex_per_line", s.existing_capex_per_line},
                     {"include_existing_costs", s.include_existing_costs},
                     {"currency", s.currency}};
  if (const auto* direct = std::get_if<double>(&s.revenue)) {
    j["revenue"] = *direct;
  } else {
    const auto& mix = std::get<RevenueMix>(s.revenue);
    j["revenue"] = {{"count_local_only", mix.count_local_only},
                    {"count_long_distance", mix.count_long_distance},
                    {"revenue_local", mix.revenue_local},
                    {"revenue_ld", mix.revenue_ld}};
  }
}

void from_json(const nlohmann::json& j, NuscScenario& s) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  // Rate and lifetime have no defaults on purpose.
  if (!j.contains("discount_rate")) throw ConfigError("scenario: discount_rate is required");
  if (!j.contains("lifetime")) throw ConfigError("scenario: lifetime is required");
  s.capex_per_line = j.value("capex_per_line", 0.0);
  j.at("discount_rate").get_to(s.discount_rate);
  j.at("lifetime").get_to(s.lifetime);
  s.opex_fraction = j.value("opex_fraction", 0.0);
  s.existing_capex_per_line = j.value("existing_capex_per_line", 0.0);
  s.include_existing_costs = j.value("include_existing_costs", false);
  s.currency = j.value("currency", std::string("INR thousand"));
  if (!j.contains("revenue")) throw ConfigError("scenario: revenue is required");
  const auto& rev = j.at("revenue");
  if (rev.is_number()) {
    s.revenue = rev.get<double>();
  } else if (rev.is_object()) {
    RevenueMix mix;
    rev.at("count_local_only").get_to(mix.count_local_only);
    rev.at("count_long_distance").get_to(mix.count_long_distance);
    rev.at("revenue_local").get_to(mix.revenue_local);
    rev.at("revenue_ld").get_to(mix.revenue_ld);
    s.revenue = mix;
  } else {
    throw ConfigError("scenario: revenue must be a number or a revenue mix object");
  }
}

void to_json(nlohmann::json& j, const NuscResult& r) {
  j = nlohmann::json{{"capex", r.capex_per_line},
                     {"annualized_capex", r.annualized_capex},
                     {"opex", r.annual_opex},
                     {"revenue", r.annual_revenue},
                     {"nusc", r.nusc}};
}

void write_nusc_csv(std::ostream& out, std::span<const NuscResult> rows) {
  csv::write_row(out, {"capex", "annualized_capex", "opex", "revenue", "nusc"});
  for (const auto& r : rows) {
    csv::write_row(out, {csv::format_double(r.capex_per_line), csv::format_double(r.annualized_capex),
                         csv::format_double(r.annual_opex), csv::format_double(r.annual_revenue),
                         csv::format_double(r.nusc)});
  }
}

}  // namespace usocost
