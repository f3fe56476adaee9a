#pragma once

// Random and exhaustive instance generators shared by the unit and
// acceptance tests.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "usocost/error.hpp"
#include "usocost/trading.hpp"

namespace simgen {

using namespace usocost::trading;

// Drives a ledger through random valid operations: issuance, trades and
// settlements with random completion reports. Returns the live ledger.
inline Ledger random_ledger(std::mt19937_64& rng) {
  const std::size_t n_ops = 1 + rng() % 4;
  const std::size_t n_ms = rng() % 7;
  IssueConfig ic;
  for (std::size_t i = 0; i < n_ops; ++i) ic.operators.push_back("op" + std::to_string(i));
  for (std::size_t m = 0; m < n_ms; ++m) {
    Milestone ms{static_cast<MilestoneId>(m), "task", {}};
    for (const auto& op : ic.operators) {
      if (rng() % 4 != 0 || ms.costs.empty()) ms.costs[op] = static_cast<double>(1 + rng() % 9);
    }
    ic.milestones.push_back(std::move(ms));
  }
  ic.commitments = n_ms == 0 ? 0 : rng() % (n_ms + 1);
  ic.commitments_per_period = 1 + rng() % 2;
  ic.binding = BindingRule::in_order;
  Ledger ledger = issue_obligations(ic);

  const TradeRules rules{rng() % 2 == 0, 1 + rng() % 3};
  const int periods = static_cast<int>(rng() % 6);
  for (int p = 0; p < periods; ++p) {
    // Random trades of open commitments.
    const std::size_t n_trades = rng() % 3;
    for (std::size_t t = 0; t < n_trades && n_ops > 1; ++t) {
      std::vector<CommitmentId> open;
      for (const auto& [id, c] : ledger.state().commitments)
        if (c.is_open()) open.push_back(id);
      if (open.empty()) break;
      const CommitmentId id = open[rng() % open.size()];
      const auto& c = ledger.commitment(id);
      OperatorId to = ic.operators[rng() % n_ops];
      if (to == c.owner) continue;
      try {
        trade(ledger, id, c.owner, to, p + static_cast<int>(rng() % 3), static_cast<double>(rng() % 5), rules);
      } catch (const usocost::LedgerError&) {
        // Anti-speculation bars are part of the random walk.
      }
    }
    // Random completion reports that respect commitment bindings.
    std::vector<Completion> done;
    std::vector<MilestoneId> taken;
    for (const auto& [id, m] : ledger.state().milestones) {
      if (ledger.is_completed(id) || rng() % 2 == 0) continue;
      OperatorId op;
      if (const auto bound = ledger.open_commitment_for(id)) {
        op = ledger.commitment(*bound).owner;
      } else {
        op = ic.operators[rng() % n_ops];
      }
      if (!m.cost_for(op)) continue;
      done.push_back({id, op});
    }
    settle_period(ledger, p, done, static_cast<double>(rng() % 20), rng() % 2 ? PenaltyRouting::previous_owner
                                                                              : PenaltyRouting::current_owner);
  }
  return ledger;
}

// Single greedy operator, unit capacity, enough periods and budget to finish
// every milestone.
inline SimulationConfig single_greedy(const std::vector<double>& costs, std::size_t commitments) {
  SimulationConfig cfg;
  cfg.operators.push_back({"solo", 1e9, Strategy::greedy_least_cost, 1, {}});
  for (std::size_t i = 0; i < costs.size(); ++i)
    cfg.milestones.push_back({static_cast<MilestoneId>(i), "m" + std::to_string(i), {{"solo", costs[i]}}});
  cfg.commitments = commitments;
  cfg.periods = static_cast<int>(costs.size());
  cfg.penalty = 10;
  return cfg;
}

// Minimum achievable cost of completing k milestones in any order.
inline double brute_force_prefix_min(std::vector<double> costs, std::size_t k) {
  std::sort(costs.begin(), costs.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, std::accumulate(costs.begin(), costs.begin() + static_cast<std::ptrdiff_t>(k), 0.0));
  } while (std::next_permutation(costs.begin(), costs.end()));
  return best;
}

// Calls f(costs) for every vector over {1,2,3}^n, n = 1..max_n.
template <class F>
void for_each_cost_vector(std::size_t max_n, F&& f) {
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::vector<int> digits(n, 0);
    while (true) {
      std::vector<double> costs(n);
      for (std::size_t i = 0; i < n; ++i) costs[i] = 1.0 + digits[i];
      f(costs);
      std::size_t i = 0;
      while (i < n && ++digits[i] == 3) digits[i++] = 0;
      if (i == n) break;
    }
  }
}

}  // namespace simgen
