#include "usocost/sdca.hpp"

#include <algorithm>
#include <ostream>

#include "usocost/csv.hpp"
#include "usocost/error.hpp"

namespace usocost {

SdcaCostEstimate estimate_sdca_cost(const SdcaProfile& profile, const DensitySizeModel& dsm,
                                    const LoopCostModel& lcm) {
  SdcaCostEstimate est;
  est.sdca_id = profile.sdca_id;
  est.ssa_id = profile.ssa_id;

  double size_sum = 0.0;
  double weighted_cost = 0.0;
  if (!profile.records.empty()) {
    if (!profile.exchange_sizes.empty() && profile.exchange_sizes.size() != profile.records.size())
      throw DomainError("profile '" + profile.sdca_id + "': exchange_sizes and records disagree in length");
    double area_sum = 0.0;
    for (std::size_t i = 0; i < profile.records.size(); ++i) {
      const auto& r = profile.records[i];
      check_record_domain(r);
      const double size = static_cast<double>(r.equipped_capacity);
      if (!profile.exchange_sizes.empty() && profile.exchange_sizes[i] != size)
        throw DomainError("profile '" + profile.sdca_id + "': size of '" + r.name + "' disagrees with its record");
      const double cost = predict_cost(lcm, r.subscriber_density);
      est.exchanges.push_back({size, r.subscriber_density, cost, true});
      size_sum += size;
      area_sum += r.served_area;
      weighted_cost += size * cost;
    }
    est.aggregate_density = size_sum / area_sum;
    est.used_observed_densities = true;
  } else {
    if (profile.exchange_sizes.empty())
      throw DomainError("profile '" + profile.sdca_id + "' has no exchanges");
    double weighted_density = 0.0;
    for (double size : profile.exchange_sizes) {
      if (!(size > 0.0)) throw DomainError("profile '" + profile.sdca_id + "': exchange sizes must be positive");
      const double density = density_from_size(dsm, size);
      const double cost = predict_cost(lcm, density);
      est.exchanges.push_back({size, density, cost, false});
      size_sum += size;
      weighted_cost += size * cost;
      weighted_density += size * density;
    }
    // Areas are unknown, so this stands in for the ratio of sums.
    est.aggregate_density = weighted_density / size_sum;
  }
  est.weighted_cost_per_line = weighted_cost / size_sum;
  return est;
}

AggregateRow summarize_records(std::span<const ExchangeRecord> records) {
  if (records.empty()) throw DomainError("cannot summarize an empty record list");
  AggregateRow row;
  row.count = records.size();
  const double n = static_cast<double>(records.size());

  double villages = 0.0, max_distance = 0.0;
  double cost_weighted = 0.0, ckm_weighted = 0.0;
  double spend = 0.0, installation_spend = 0.0;
  double dels_sum = 0.0;
  std::size_t dels_count = 0;
  for (const auto& r : records) {
    const double cap = static_cast<double>(r.equipped_capacity);
    row.total_capacity += cap;
    row.total_area += r.served_area;
    row.total_population += static_cast<double>(r.served_population);
    villages += static_cast<double>(r.villages_served);
    max_distance += r.max_distance;
    cost_weighted += cap * r.cost_per_line;
    ckm_weighted += cap * r.ckm_per_line;
    spend += cap * r.cost_per_line;
    installation_spend += cap * r.cost_per_line * r.installation_share;
    if (r.dels) {
      dels_sum += static_cast<double>(*r.dels);
      ++dels_count;
    }
  }
  if (!(row.total_area > 0.0)) throw DomainError("total served area is zero");
  if (!(row.total_population > 0.0)) throw DomainError("total served population is zero");
  if (!(row.total_capacity > 0.0)) throw DomainError("total equipped capacity is zero");

  row.equipped_capacity = row.total_capacity / n;
  row.served_area = row.total_area / n;
  row.served_population = row.total_population / n;
  row.villages_served = villages / n;
  row.max_distance = max_distance / n;
  if (dels_count) row.dels = dels_sum / static_cast<double>(dels_count);
  row.subscriber_density = row.total_capacity / row.total_area;
  row.teledensity = 100.0 * row.total_capacity / row.total_population;
  row.cost_per_line = cost_weighted / row.total_capacity;
  row.ckm_per_line = ckm_weighted / row.total_capacity;
  row.installation_share = spend > 0.0 ? installation_spend / spend : 0.0;
  return row;
}

std::vector<ProfileGroup> group_profiles(std::span<const SdcaProfile> profiles, const std::vector<std::string>& keys) {
  if (keys.empty()) throw DomainError("grouping needs at least one tag key");
  std::vector<ProfileGroup> groups;
  ProfileGroup untagged;
  untagged.untagged = true;
  for (const auto& p : profiles) {
    std::vector<std::string> key;
    bool complete = true;
    for (const auto& k : keys) {
      const auto it = p.tags.find(k);
      if (it == p.tags.end() || it->second.empty()) {
        complete = false;
        break;
      }
      key.push_back(it->second);
    }
    if (!complete) {
      untagged.profiles.push_back(p);
      continue;
    }
    auto g = std::find_if(groups.begin(), groups.end(), [&](const ProfileGroup& grp) { return grp.key == key; });
    if (g == groups.end()) {
      groups.push_back(ProfileGroup{key, false, {}});
      g = std::prev(groups.end());
    }
    g->profiles.push_back(p);
  }
  if (!untagged.profiles.empty()) groups.push_back(std::move(untagged));
  return groups;
}

void to_json(nlohmann::json& j, const SdcaProfile& p) {
  j = nlohmann::json{{"sdca_id", p.sdca_id}, {"ssa_id", p.ssa_id}, {"exchange_sizes", p.exchange_sizes},
                     {"tags", p.tags}};
  if (!p.records.empty()) j["records"] = p.records;
}

void from_json(const nlohmann::json& j, SdcaProfile& p) {
  if (!j.is_object()) throw ConfigError("SDCA profile must be a JSON object");
  j.at("sdca_id").get_to(p.sdca_id);
  p.ssa_id = j.value("ssa_id", std::string());
  p.exchange_sizes = j.value("exchange_sizes", std::vector<double>{});
  p.records = j.value("records", std::vector<ExchangeRecord>{});
  p.tags.clear();
  if (j.contains("tags")) {
    for (const auto& [k, v] : j.at("tags").items()) p.tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (p.exchange_sizes.empty() && p.records.empty())
    throw ConfigError("profile '" + p.sdca_id + "': exchange_sizes must be non-empty");
  for (double s : p.exchange_sizes)
    if (!(s > 0.0)) throw ConfigError("profile '" + p.sdca_id + "': exchange sizes must be positive");
}

void to_json(nlohmann::json& j, const SdcaCostEstimate& e) {
  nlohmann::json exchanges = nlohmann::json::array();
  for (const auto& x : e.exchanges) {
    exchanges.push_back({{"size", x.size},
                         {"density", x.density},
                         {"cost_per_line", x.cost_per_line},
                         {"observed_density", x.observed_density}});
  }
  j = nlohmann::json{{"sdca_id", e.sdca_id},
                     {"ssa_id", e.ssa_id},
                     {"exchanges", std::move(exchanges)},
                     {"weighted_cost_per_line", e.weighted_cost_per_line},
                     {"aggregate_density", e.aggregate_density},
                     {"used_observed_densities", e.used_observed_densities}};
}

void to_json(nlohmann::json& j, const AggregateRow& r) {
  j = nlohmann::json{{"count", r.count},
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
                     {"installation_share", r.installation_share},
                     {"total_capacity", r.total_capacity},
                     {"total_area", r.total_area},
                     {"total_population", r.total_population}};
}

void write_estimates_csv(std::ostream& out, std::span<const SdcaCostEstimate> estimates) {
  csv::write_row(out, {"sdca_id", "ssa_id", "size", "density", "observed_density", "cost_per_line",
                       "weighted_cost_per_line", "aggregate_density"});
  for (const auto& e : estimates) {
    for (const auto& x : e.exchanges) {
      csv::write_row(out, {e.sdca_id, e.ssa_id, csv::format_double(x.size), csv::format_double(x.density),
                           x.observed_density ? "1" : "0", csv::format_double(x.cost_per_line),
                           csv::format_double(e.weighted_cost_per_line), csv::format_double(e.aggregate_density)});
    }
  }
}

void write_aggregate_csv(std::ostream& out, const AggregateRow& r) {
  csv::write_row(out, {"count", "equipped_capacity", "teledensity", "served_area", "served_population",
                       "villages_served", "dels", "max_distance", "subscriber_density", "ckm_per_line",
                       "cost_per_line", "installation_share"});
  csv::write_row(out, {std::to_string(r.count), csv::format_double(r.equipped_capacity),
                       csv::format_double(r.teledensity), csv::format_double(r.served_area),
                       csv::format_double(r.served_population), csv::format_double(r.villages_served),
                       r.dels ? csv::format_double(*r.dels) : std::string(), csv::format_double(r.max_distance),
                       csv::format_double(r.subscriber_density), csv::format_double(r.ckm_per_line),
                       csv::format_double(r.cost_per_line), csv::format_double(r.installation_share)});
}

}  // namespace usocost
