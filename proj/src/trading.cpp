#include "usocost/trading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>

#include "usocost/csv.hpp"
#include "usocost/error.hpp"

namespace usocost::trading {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void reject(const std::string& what) { throw LedgerError(what); }

std::string cid(CommitmentId id) { return "commitment " + std::to_string(id); }
std::string mid(MilestoneId id) { return "milestone " + std::to_string(id); }

bool is_issuance(const EventPayload& p) {
  return std::holds_alternative<OperatorRegistered>(p) || std::holds_alternative<MilestoneIssued>(p) ||
         std::holds_alternative<CommitmentIssued>(p);
}

}  // namespace

std::optional<double> Milestone::cost_for(const OperatorId& op) const {
  const auto it = costs.find(op);
  if (it == costs.end() || !std::isfinite(it->second)) return std::nullopt;
  return it->second;
}

std::string_view to_string(CommitmentStatus s) {
  switch (s) {
    case CommitmentStatus::open:
      return "open";
    case CommitmentStatus::traded:
      return "traded";
    case CommitmentStatus::completed:
      return "completed";
    case CommitmentStatus::defaulted:
      return "defaulted";
  }
  return "unknown";
}

std::string_view event_type(const EventPayload& payload) {
  return std::visit(overloaded{
                        [](const OperatorRegistered&) { return std::string_view("register"); },
                        [](const MilestoneIssued&) { return std::string_view("issue_milestone"); },
                        [](const CommitmentIssued&) { return std::string_view("issue_commitment"); },
                        [](const Traded&) { return std::string_view("trade"); },
                        [](const MilestoneCompleted&) { return std::string_view("complete"); },
                        [](const CommitmentFulfilled&) { return std::string_view("fulfil"); },
                        [](const CommitmentDefaulted&) { return std::string_view("default"); },
                        [](const PenaltyCharged&) { return std::string_view("penalty"); },
                        [](const PeriodClosed&) { return std::string_view("close_period"); },
                    },
                    payload);
}

// ---------------------------------------------------------------------------
// Ledger

Ledger Ledger::replay(std::span<const Event> events) {
  Ledger ledger;
  for (const auto& e : events) {
    if (e.sequence != ledger.events_.size()) reject("event sequence gap at " + std::to_string(e.sequence));
    ledger.apply(e);
    ledger.events_.push_back(e);
  }
  return ledger;
}

bool Ledger::has_operator(const OperatorId& op) const { return state_.records.contains(op); }

const Milestone& Ledger::milestone(MilestoneId id) const {
  const auto it = state_.milestones.find(id);
  if (it == state_.milestones.end()) reject("unknown " + mid(id));
  return it->second;
}

const Commitment& Ledger::commitment(CommitmentId id) const {
  const auto it = state_.commitments.find(id);
  if (it == state_.commitments.end()) reject("unknown " + cid(id));
  return it->second;
}

std::optional<CommitmentId> Ledger::open_commitment_for(MilestoneId id) const {
  for (const auto& [cid_, c] : state_.commitments) {
    if (c.milestone_id == id && c.is_open()) return cid_;
  }
  return std::nullopt;
}

const Event& Ledger::record(EventPayload payload) {
  Event e{events_.size(), state_.period, std::move(payload)};
  apply(e);
  events_.push_back(std::move(e));
  return events_.back();
}

// Every branch checks before it mutates, so a rejected event leaves the
// state untouched.
void Ledger::apply(const Event& event) {
  if (event.period != state_.period)
    reject("event period " + std::to_string(event.period) + " does not match ledger period " +
           std::to_string(state_.period));
  if (is_issuance(event.payload) && !events_.empty() && !is_issuance(events_.back().payload))
    reject("obligations can only be issued before trading starts");

  auto& s = state_;
  std::visit(
      overloaded{
          [&](const OperatorRegistered& e) {
            if (e.op.empty()) reject("operator id is empty");
            if (has_operator(e.op)) reject("operator '" + e.op + "' registered twice");
            s.operators.push_back(e.op);
            s.records[e.op] = {};
          },
          [&](const MilestoneIssued& e) {
            const auto& m = e.milestone;
            if (s.milestones.contains(m.id)) reject(mid(m.id) + " issued twice");
            bool any_finite = false;
            for (const auto& [op, cost] : m.costs) {
              if (!has_operator(op)) reject(mid(m.id) + ": unknown operator '" + op + "'");
              if (std::isnan(cost) || cost < 0.0) reject(mid(m.id) + ": costs must be non-negative");
              any_finite = any_finite || std::isfinite(cost);
            }
            if (!any_finite) reject(mid(m.id) + ": no operator can complete it");
            s.milestones.emplace(m.id, m);
          },
          [&](const CommitmentIssued& e) {
            if (s.commitments.contains(e.commitment)) reject(cid(e.commitment) + " issued twice");
            if (!s.milestones.contains(e.milestone)) reject(cid(e.commitment) + ": unknown " + mid(e.milestone));
            if (!has_operator(e.owner)) reject(cid(e.commitment) + ": unknown operator '" + e.owner + "'");
            if (e.due_period < s.period) reject(cid(e.commitment) + ": due period already passed");
            s.commitments.emplace(e.commitment, Commitment{e.commitment, e.milestone, e.due_period, e.owner,
                                                           std::nullopt, CommitmentStatus::open});
          },
          [&](const Traded& e) {
            auto it = s.commitments.find(e.commitment);
            if (it == s.commitments.end()) reject("unknown " + cid(e.commitment));
            auto& c = it->second;
            if (!c.is_open()) reject(cid(e.commitment) + " is closed (" + std::string(to_string(c.status)) + ")");
            if (c.owner != e.from) reject(cid(e.commitment) + " is not owned by '" + e.from + "'");
            if (e.to == e.from) reject(cid(e.commitment) + ": cannot trade to self");
            if (!has_operator(e.to)) reject("unknown operator '" + e.to + "'");
            if (e.old_due != c.due_period) reject(cid(e.commitment) + ": stale due period in trade");
            if (e.new_due < s.period) reject(cid(e.commitment) + ": new due period is in the past");
            if (!std::isfinite(e.price)) reject("trade price must be finite");
            c.owner = e.to;
            c.previous_owner = e.from;
            c.due_period = e.new_due;
            c.status = CommitmentStatus::traded;
            auto& seller = s.records[e.from];
            auto& buyer = s.records[e.to];
            ++seller.trades_sold;
            seller.trade_paid += e.price;
            ++buyer.trades_bought;
            buyer.trade_received += e.price;
          },
          [&](const MilestoneCompleted& e) {
            const auto mit = s.milestones.find(e.milestone);
            if (mit == s.milestones.end()) reject("unknown " + mid(e.milestone));
            if (s.completed_by.contains(e.milestone)) reject(mid(e.milestone) + " already completed");
            if (!has_operator(e.op)) reject("unknown operator '" + e.op + "'");
            const auto cost = mit->second.cost_for(e.op);
            if (!cost) reject("operator '" + e.op + "' cannot complete " + mid(e.milestone));
            if (*cost != e.cost) reject(mid(e.milestone) + ": completion cost does not match schedule");
            if (const auto bound = open_commitment_for(e.milestone)) {
              if (s.commitments.at(*bound).owner != e.op)
                reject(mid(e.milestone) + " is bound to " + cid(*bound) + " held by another operator");
            }
            s.completed_by.emplace(e.milestone, e.op);
            auto& r = s.records[e.op];
            ++r.completions;
            r.completion_cost += e.cost;
          },
          [&](const CommitmentFulfilled& e) {
            auto it = s.commitments.find(e.commitment);
            if (it == s.commitments.end()) reject("unknown " + cid(e.commitment));
            auto& c = it->second;
            if (!c.is_open()) reject(cid(e.commitment) + " is closed");
            if (c.due_period != s.period) reject(cid(e.commitment) + " is not due this period");
            if (!s.completed_by.contains(c.milestone_id)) reject(cid(e.commitment) + ": milestone not completed");
            c.status = CommitmentStatus::completed;
          },
          [&](const CommitmentDefaulted& e) {
            auto it = s.commitments.find(e.commitment);
            if (it == s.commitments.end()) reject("unknown " + cid(e.commitment));
            auto& c = it->second;
            if (!c.is_open()) reject(cid(e.commitment) + " is closed");
            if (c.due_period != s.period) reject(cid(e.commitment) + " is not due this period");
            if (s.completed_by.contains(c.milestone_id)) reject(cid(e.commitment) + ": milestone was completed");
            if (c.owner != e.owner) reject(cid(e.commitment) + ": default recorded against a non-owner");
            c.status = CommitmentStatus::defaulted;
          },
          [&](const PenaltyCharged& e) {
            const auto it = s.commitments.find(e.commitment);
            if (it == s.commitments.end()) reject("unknown " + cid(e.commitment));
            if (it->second.status != CommitmentStatus::defaulted) reject(cid(e.commitment) + " has not defaulted");
            if (!has_operator(e.op)) reject("unknown operator '" + e.op + "'");
            if (!(e.amount >= 0.0) || !std::isfinite(e.amount)) reject("penalty must be finite and non-negative");
            auto& r = s.records[e.op];
            ++r.penalties;
            r.penalty_amount += e.amount;
          },
          [&](const PeriodClosed& e) {
            if (e.period != s.period) reject("closing period " + std::to_string(e.period) + " out of order");
            for (const auto& [id, c] : s.commitments) {
              if (c.is_open() && c.due_period <= s.period) reject(cid(id) + " is due but unsettled");
            }
            ++s.period;
          },
      },
      event.payload);
}

// ---------------------------------------------------------------------------
// Operations

Ledger issue_obligations(const IssueConfig& config) {
  const std::size_t m = config.milestones.size();
  const std::size_t c = config.commitments;
  if (c > m)
    throw ConfigError("commitments (" + std::to_string(c) + ") exceed available milestones (" + std::to_string(m) +
                      ")");
  if (c > 0 && config.operators.empty()) throw ConfigError("commitments need at least one operator");
  if (config.commitments_per_period == 0) throw ConfigError("commitments_per_period must be at least 1");
  if (config.first_due_period < 0) throw ConfigError("first_due_period must be non-negative");

  std::set<OperatorId> known(config.operators.begin(), config.operators.end());
  if (known.size() != config.operators.size()) throw ConfigError("duplicate operator id");
  std::set<MilestoneId> ids;
  for (const auto& ms : config.milestones) {
    if (!ids.insert(ms.id).second) throw ConfigError("duplicate " + mid(ms.id));
    for (const auto& [op, cost] : ms.costs) {
      if (!known.contains(op)) throw ConfigError(mid(ms.id) + ": unknown operator '" + op + "'");
    }
  }

  Ledger ledger;
  try {
    for (const auto& op : config.operators) ledger.record(OperatorRegistered{op});
    for (const auto& ms : config.milestones) ledger.record(MilestoneIssued{ms});
  } catch (const LedgerError& e) {
    throw ConfigError(e.what());
  }

  std::vector<const Milestone*> by_id;
  for (const auto& [id, ms] : ledger.state().milestones) by_id.push_back(&ms);
  std::set<MilestoneId> bound;
  for (std::size_t k = 0; k < c; ++k) {
    const OperatorId& owner = config.operators[k % config.operators.size()];
    const Milestone* pick = nullptr;
    if (config.binding == BindingRule::in_order) {
      pick = by_id[k];
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (const Milestone* ms : by_id) {
        if (bound.contains(ms->id)) continue;
        const auto cost = ms->cost_for(owner);
        if (cost && (pick == nullptr || *cost < best)) {
          best = *cost;
          pick = ms;
        }
      }
      if (pick == nullptr)
        throw ConfigError("no unbound milestone can be completed by '" + owner + "' for commitment " +
                          std::to_string(k));
    }
    bound.insert(pick->id);
    const int due = config.first_due_period + static_cast<int>(k / config.commitments_per_period);
    ledger.record(CommitmentIssued{static_cast<CommitmentId>(k), pick->id, due, owner});
  }
  return ledger;
}

bool barred_from_buying(const Ledger& ledger, const OperatorId& op, const TradeRules& rules) {
  if (!rules.anti_speculation || rules.window == 0) return false;
  const auto it = ledger.state().records.find(op);
  if (it == ledger.state().records.end()) return false;
  return it->second.completions < it->second.trades() / rules.window;
}

void trade(Ledger& ledger, CommitmentId commitment, const OperatorId& from, const OperatorId& to, int new_due,
           double price, const TradeRules& rules) {
  const Commitment& c = ledger.commitment(commitment);
  if (!c.is_open()) reject(cid(commitment) + " is closed (" + std::string(to_string(c.status)) + ")");
  if (c.owner != from) reject(cid(commitment) + " is not owned by '" + from + "'");
  if (to == from) reject(cid(commitment) + ": cannot trade to self");
  if (!ledger.has_operator(to)) reject("unknown operator '" + to + "'");
  if (barred_from_buying(ledger, to, rules))
    reject("operator '" + to + "' is barred from buying: fewer than one completion per " +
           std::to_string(rules.window) + " trades");
  ledger.record(Traded{commitment, from, to, c.due_period, new_due, price});
}

std::string_view to_string(PenaltyRouting r) {
  return r == PenaltyRouting::previous_owner ? "previous_owner" : "current_owner";
}

const OperatorId& penalty_target(const Commitment& c, PenaltyRouting routing) {
  if (routing == PenaltyRouting::previous_owner && c.previous_owner) return *c.previous_owner;
  return c.owner;
}

SettlementReport settle_period(Ledger& ledger, int period, std::span<const Completion> completions, double penalty,
                               PenaltyRouting routing) {
  if (period != ledger.period())
    reject("cannot settle period " + std::to_string(period) + "; ledger is at period " +
           std::to_string(ledger.period()));
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw DomainError("penalty must be finite and non-negative");

  Ledger next = ledger;
  SettlementReport report;
  report.period = period;
  for (const auto& done : completions) {
    const auto cost = next.milestone(done.milestone).cost_for(done.op);
    if (!cost) reject("operator '" + done.op + "' cannot complete " + mid(done.milestone));
    next.record(MilestoneCompleted{done.milestone, done.op, *cost});
    report.completed.push_back(done.milestone);
  }

  std::vector<Commitment> due;
  for (const auto& [id, c] : next.state().commitments) {
    if (c.is_open() && c.due_period == period) due.push_back(c);
  }
  for (const auto& c : due) {
    if (next.is_completed(c.milestone_id)) {
      next.record(CommitmentFulfilled{c.id});
      report.fulfilled.push_back(c.id);
    } else {
      next.record(CommitmentDefaulted{c.id, c.owner});
      report.defaulted.push_back(c.id);
      PenaltyCharged charge{c.id, penalty_target(c, routing), penalty};
      next.record(charge);
      report.penalties.push_back(std::move(charge));
    }
  }
  next.record(PeriodClosed{period});
  ledger = std::move(next);
  return report;
}

// ---------------------------------------------------------------------------
// Simulation

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy_least_cost:
      return "greedy_least_cost";
    case Strategy::pass_through:
      return "pass_through";
    case Strategy::scripted:
      return "scripted";
  }
  return "unknown";
}

void validate(const SimulationConfig& config) {
  if (config.periods < 0) throw ConfigError("periods must be non-negative");
  if (!(config.penalty >= 0.0) || !std::isfinite(config.penalty))
    throw ConfigError("penalty must be finite and non-negative");
  if (config.trade_extension < 0) throw ConfigError("trade_extension must be non-negative");
  for (const auto& op : config.operators) {
    if (op.capacity < 0) throw ConfigError("operator '" + op.id + "': capacity must be non-negative");
    if (!std::isfinite(op.budget)) throw ConfigError("operator '" + op.id + "': budget must be finite");
  }
}

namespace {

IssueConfig issue_config_of(const SimulationConfig& config) {
  IssueConfig ic;
  ic.milestones = config.milestones;
  for (const auto& op : config.operators) ic.operators.push_back(op.id);
  ic.commitments = config.commitments;
  ic.commitments_per_period = config.commitments_per_period;
  ic.first_due_period = config.first_due_period;
  ic.binding = config.binding;
  return ic;
}

// Fisher-Yates on raw engine output; std::shuffle's draw sequence is not
// specified by the standard and would break cross-platform reproducibility.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

class Simulation {
 public:
  explicit Simulation(const SimulationConfig& config)
      : config_(config), ledger_(issue_obligations(issue_config_of(config))), rng_(config.seed) {
    for (const auto& op : config.operators) budget_[op.id] = op.budget;
  }

  SimulationOutcome run() {
    SimulationOutcome out;
    out.seed = config_.seed;
    out.initial_ledger = ledger_;
    std::vector<std::size_t> order(config_.operators.size());
    for (int p = 0; p < config_.periods; ++p) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order, rng_);

      planned_.clear();
      std::vector<Completion> completions;
      for (std::size_t i : order) plan_completions(config_.operators[i], p, completions);
      for (std::size_t i : order) trade_phase(config_.operators[i], p);

      auto report = settle_period(ledger_, p, completions, config_.penalty, config_.routing);
      for (const auto& charge : report.penalties) budget_[charge.op] -= charge.amount;
      for (const auto& done : completions) {
        out.completion_order.push_back({p, done.milestone, done.op, *ledger_.milestone(done.milestone).cost_for(done.op)});
      }
      out.settlements.push_back(std::move(report));
    }

    for (const auto& op : config_.operators) {
      const auto& r = ledger_.state().records.at(op.id);
      out.operators.push_back({op.id, r.completions, r.trades(), r.penalties, r.penalty_amount,
                               r.completion_cost + r.penalty_amount + r.trade_paid - r.trade_received,
                               budget_.at(op.id)});
    }
    out.ledger = std::move(ledger_);
    return out;
  }

 private:
  bool available_to(const Milestone& m, const OperatorId& op) const {
    if (ledger_.is_completed(m.id) || planned_.contains(m.id)) return false;
    const auto bound = ledger_.open_commitment_for(m.id);
    return !bound || ledger_.commitment(*bound).owner == op;
  }

  void plan_completions(const OperatorAgent& agent, int period, std::vector<Completion>& out) {
    if (agent.strategy == Strategy::scripted) {
      for (const auto& a : agent.script) {
        if (a.period != period || a.kind != ScriptedAction::Kind::complete) continue;
        const auto cost = ledger_.milestone(a.milestone).cost_for(agent.id);
        if (!cost) reject("scripted operator '" + agent.id + "' cannot complete " + mid(a.milestone));
        planned_.insert(a.milestone);
        budget_[agent.id] -= *cost;
        out.push_back({a.milestone, agent.id});
      }
      return;
    }
    if (agent.strategy != Strategy::greedy_least_cost) return;

    // Cheapest affordable first; ties go to the lowest milestone id.
    std::vector<std::pair<double, MilestoneId>> candidates;
    for (const auto& [id, m] : ledger_.state().milestones) {
      if (!available_to(m, agent.id)) continue;
      if (const auto cost = m.cost_for(agent.id)) candidates.emplace_back(*cost, id);
    }
    std::sort(candidates.begin(), candidates.end());
    int slots = agent.capacity;
    for (const auto& [cost, id] : candidates) {
      if (slots == 0) break;
      if (cost > budget_[agent.id]) continue;
      budget_[agent.id] -= cost;
      planned_.insert(id);
      out.push_back({id, agent.id});
      --slots;
    }
  }

  void trade_phase(const OperatorAgent& seller, int period) {
    if (seller.strategy == Strategy::scripted) {
      for (const auto& a : seller.script) {
        if (a.period != period || a.kind != ScriptedAction::Kind::trade) continue;
        trade(ledger_, a.commitment, seller.id, a.to, a.new_due, a.price, config_.trade_rules);
        budget_[seller.id] -= a.price;
        budget_[a.to] += a.price;
      }
      return;
    }

    std::vector<CommitmentId> to_sell;
    for (const auto& [id, c] : ledger_.state().commitments) {
      if (c.is_open() && c.owner == seller.id && c.due_period == period && !ledger_.is_completed(c.milestone_id) &&
          !planned_.contains(c.milestone_id))
        to_sell.push_back(id);
    }
    for (CommitmentId id : to_sell) {
      const MilestoneId milestone = ledger_.commitment(id).milestone_id;
      // The seller would pay up to the penalty it avoids.
      const double bid = config_.penalty;
      const OperatorAgent* best = nullptr;
      double best_ask = 0.0;
      for (const auto& buyer : config_.operators) {
        if (buyer.id == seller.id || barred_from_buying(ledger_, buyer.id, config_.trade_rules)) continue;
        double ask = 0.0;
        if (buyer.strategy == Strategy::greedy_least_cost) {
          const auto cost = ledger_.milestone(milestone).cost_for(buyer.id);
          if (!cost || buyer.capacity == 0 || *cost > budget_[buyer.id]) continue;
          ask = *cost;
        } else if (buyer.strategy != Strategy::pass_through) {
          continue;
        }
        if (ask > bid) continue;
        if (best == nullptr || ask < best_ask) {
          best = &buyer;
          best_ask = ask;
        }
      }
      if (best == nullptr) continue;
      const double price = 0.5 * (bid + best_ask);
      trade(ledger_, id, seller.id, best->id, period + config_.trade_extension, price, config_.trade_rules);
      budget_[seller.id] -= price;
      budget_[best->id] += price;
    }
  }

  const SimulationConfig& config_;
  Ledger ledger_;
  std::mt19937_64 rng_;
  std::map<OperatorId, double> budget_;
  std::set<MilestoneId> planned_;
};

}  // namespace

SimulationOutcome run_simulation(const SimulationConfig& config) {
  validate(config);
  return Simulation(config).run();
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const Milestone& m) {
  nlohmann::json costs = nlohmann::json::object();
  for (const auto& [op, cost] : m.costs) costs[op] = cost;
  j = nlohmann::json{{"id", m.id}, {"task", m.task}, {"costs", std::move(costs)}};
}

void from_json(const nlohmann::json& j, Milestone& m) {
  j.at("id").get_to(m.id);
  m.task = j.value("task", std::string());
  m.costs.clear();
  for (const auto& [op, cost] : j.at("costs").items()) {
    m.costs[op] = cost.is_null() ? std::numeric_limits<double>::infinity() : cost.get<double>();
  }
}

void to_json(nlohmann::json& j, const Event& e) {
  j = nlohmann::json{{"seq", e.sequence}, {"period", e.period}, {"type", event_type(e.payload)}};
  std::visit(overloaded{
                 [&](const OperatorRegistered& p) { j["operator"] = p.op; },
                 [&](const MilestoneIssued& p) { j["milestone"] = p.milestone; },
                 [&](const CommitmentIssued& p) {
                   j["commitment"] = p.commitment;
                   j["milestone"] = p.milestone;
                   j["due_period"] = p.due_period;
                   j["owner"] = p.owner;
                 },
                 [&](const Traded& p) {
                   j["commitment"] = p.commitment;
                   j["from"] = p.from;
                   j["to"] = p.to;
                   j["old_due"] = p.old_due;
                   j["new_due"] = p.new_due;
                   j["price"] = p.price;
                 },
                 [&](const MilestoneCompleted& p) {
                   j["milestone"] = p.milestone;
                   j["operator"] = p.op;
                   j["cost"] = p.cost;
                 },
                 [&](const CommitmentFulfilled& p) { j["commitment"] = p.commitment; },
                 [&](const CommitmentDefaulted& p) {
                   j["commitment"] = p.commitment;
                   j["owner"] = p.owner;
                 },
                 [&](const PenaltyCharged& p) {
                   j["commitment"] = p.commitment;
                   j["operator"] = p.op;
                   j["amount"] = p.amount;
                 },
                 [&](const PeriodClosed& p) { j["closed"] = p.period; },
             },
             e.payload);
}

void from_json(const nlohmann::json& j, Event& e) {
  j.at("seq").get_to(e.sequence);
  j.at("period").get_to(e.period);
  const auto type = j.at("type").get<std::string>();
  if (type == "register") {
    e.payload = OperatorRegistered{j.at("operator").get<OperatorId>()};
  } else if (type == "issue_milestone") {
    e.payload = MilestoneIssued{j.at("milestone").get<Milestone>()};
  } else if (type == "issue_commitment") {
    e.payload = CommitmentIssued{j.at("commitment").get<CommitmentId>(), j.at("milestone").get<MilestoneId>(),
                                 j.at("due_period").get<int>(), j.at("owner").get<OperatorId>()};
  } else if (type == "trade") {
    e.payload = Traded{j.at("commitment").get<CommitmentId>(), j.at("from").get<OperatorId>(),
                       j.at("to").get<OperatorId>(),            j.at("old_due").get<int>(),
                       j.at("new_due").get<int>(),              j.at("price").get<double>()};
  } else if (type == "complete") {
    e.payload = MilestoneCompleted{j.at("milestone").get<MilestoneId>(), j.at("operator").get<OperatorId>(),
                                   j.at("cost").get<double>()};
  } else if (type == "fulfil") {
    e.payload = CommitmentFulfilled{j.at("commitment").get<CommitmentId>()};
  } else if (type == "default") {
    e.payload = CommitmentDefaulted{j.at("commitment").get<CommitmentId>(), j.at("owner").get<OperatorId>()};
  } else if (type == "penalty") {
    e.payload = PenaltyCharged{j.at("commitment").get<CommitmentId>(), j.at("operator").get<OperatorId>(),
                               j.at("amount").get<double>()};
  } else if (type == "close_period") {
    e.payload = PeriodClosed{j.at("closed").get<int>()};
  } else {
    throw ConfigError("unknown ledger event type '" + type + "'");
  }
}

void to_json(nlohmann::json& j, const Commitment& c) {
  j = nlohmann::json{{"id", c.id},
                     {"milestone", c.milestone_id},
                     {"due_period", c.due_period},
                     {"owner", c.owner},
                     {"previous_owner", c.previous_owner ? nlohmann::json(*c.previous_owner) : nlohmann::json(nullptr)},
                     {"status", to_string(c.status)}};
}

void to_json(nlohmann::json& j, const Ledger& l) {
  nlohmann::json commitments = nlohmann::json::array();
  for (const auto& [id, c] : l.state().commitments) commitments.push_back(c);
  nlohmann::json completed = nlohmann::json::object();
  for (const auto& [id, op] : l.state().completed_by) completed[std::to_string(id)] = op;
  j = nlohmann::json{{"period", l.period()},
                     {"commitments", std::move(commitments)},
                     {"completed_by", std::move(completed)},
                     {"events", l.events()}};
}

void to_json(nlohmann::json& j, const SettlementReport& r) {
  nlohmann::json penalties = nlohmann::json::array();
  for (const auto& p : r.penalties)
    penalties.push_back({{"commitment", p.commitment}, {"operator", p.op}, {"amount", p.amount}});
  j = nlohmann::json{{"period", r.period},
                     {"completed", r.completed},
                     {"fulfilled", r.fulfilled},
                     {"defaulted", r.defaulted},
                     {"penalties", std::move(penalties)}};
}

void to_json(nlohmann::json& j, const SimulationOutcome& o) {
  nlohmann::json order = nlohmann::json::array();
  for (const auto& c : o.completion_order)
    order.push_back({{"period", c.period}, {"milestone", c.milestone}, {"operator", c.op}, {"cost", c.cost}});
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& s : o.operators) {
    ops.push_back({{"operator", s.id},
                   {"completions", s.completions},
                   {"trades", s.trades},
                   {"penalties", s.penalties},
                   {"penalty_amount", s.penalty_amount},
                   {"total_cost", s.total_cost},
                   {"final_budget", s.final_budget}});
  }
  j = nlohmann::json{{"seed", o.seed},
                     {"completion_order", std::move(order)},
                     {"operators", std::move(ops)},
                     {"settlements", o.settlements},
                     {"ledger", o.ledger}};
}

namespace {

Strategy strategy_from(const std::string& s) {
  if (s == "greedy_least_cost") return Strategy::greedy_least_cost;
  if (s == "pass_through") return Strategy::pass_through;
  if (s == "scripted") return Strategy::scripted;
  throw ConfigError("unknown strategy '" + s + "'");
}

}  // namespace

void from_json(const nlohmann::json& j, SimulationConfig& c) {
  if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
  c = SimulationConfig{};
  c.milestones = j.at("milestones").get<std::vector<Milestone>>();
  for (const auto& oj : j.at("operators")) {
    OperatorAgent a;
    oj.at("id").get_to(a.id);
    a.budget = oj.value("budget", 0.0);
    a.strategy = strategy_from(oj.value("strategy", std::string("greedy_least_cost")));
    a.capacity = oj.value("capacity", 1);
    if (oj.contains("script")) {
      for (const auto& sj : oj.at("script")) {
        ScriptedAction act;
        sj.at("period").get_to(act.period);
        const auto kind = sj.at("action").get<std::string>();
        if (kind == "complete") {
          act.kind = ScriptedAction::Kind::complete;
          sj.at("milestone").get_to(act.milestone);
        } else if (kind == "trade") {
          act.kind = ScriptedAction::Kind::trade;
          sj.at("commitment").get_to(act.commitment);
          sj.at("to").get_to(act.to);
          sj.at("new_due").get_to(act.new_due);
          act.price = sj.value("price", 0.0);
        } else {
          throw ConfigError("unknown scripted action '" + kind + "'");
        }
        a.script.push_back(std::move(act));
      }
    }
    c.operators.push_back(std::move(a));
  }
  c.commitments = j.value("commitments", std::size_t{0});
  c.commitments_per_period = j.value("commitments_per_period", std::size_t{1});
  c.first_due_period = j.value("first_due_period", 0);
  const auto binding = j.value("binding", std::string("cheapest_for_owner"));
  if (binding == "cheapest_for_owner") {
    c.binding = BindingRule::cheapest_for_owner;
  } else if (binding == "in_order") {
    c.binding = BindingRule::in_order;
  } else {
    throw ConfigError("unknown binding rule '" + binding + "'");
  }
  c.periods = j.value("periods", 0);
  c.penalty = j.value("penalty", 0.0);
  const auto routing = j.value("penalty_routing", std::string("previous_owner"));
  if (routing == "previous_owner") {
    c.routing = PenaltyRouting::previous_owner;
  } else if (routing == "current_owner") {
    c.routing = PenaltyRouting::current_owner;
  } else {
    throw ConfigError("unknown penalty routing '" + routing + "'");
  }
  c.trade_extension = j.value("trade_extension", 1);
  if (j.contains("anti_speculation")) {
    const auto& a = j.at("anti_speculation");
    c.trade_rules.anti_speculation = a.value("enabled", true);
    c.trade_rules.window = a.value("window", std::size_t{3});
  }
  c.seed = j.value("seed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const SimulationConfig& c) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& a : c.operators) {
    nlohmann::json oj{{"id", a.id}, {"budget", a.budget}, {"strategy", to_string(a.strategy)}, {"capacity", a.capacity}};
    if (!a.script.empty()) {
      auto& script = oj["script"] = nlohmann::json::array();
      for (const auto& act : a.script) {
        if (act.kind == ScriptedAction::Kind::complete) {
          script.push_back({{"period", act.period}, {"action", "complete"}, {"milestone", act.milestone}});
        } else {
          script.push_back({{"period", act.period},
                            {"action", "trade"},
                            {"commitment", act.commitment},
                            {"to", act.to},
                            {"new_due", act.new_due},
                            {"price", act.price}});
        }
      }
    }
    ops.push_back(std::move(oj));
  }
  j = nlohmann::json{{"milestones", c.milestones},
                     {"operators", std::move(ops)},
                     {"commitments", c.commitments},
                     {"commitments_per_period", c.commitments_per_period},
                     {"first_due_period", c.first_due_period},
                     {"binding", c.binding == BindingRule::in_order ? "in_order" : "cheapest_for_owner"},
                     {"periods", c.periods},
                     {"penalty", c.penalty},
                     {"penalty_routing", to_string(c.routing)},
                     {"trade_extension", c.trade_extension},
                     {"anti_speculation", {{"enabled", c.trade_rules.anti_speculation}, {"window", c.trade_rules.window}}},
                     {"seed", c.seed}};
}

void write_summary_csv(std::ostream& out, const SimulationOutcome& outcome) {
  csv::write_row(out, {"operator", "completions", "trades", "penalties", "total_cost"});
  for (const auto& s : outcome.operators) {
    csv::write_row(out, {s.id, std::to_string(s.completions), std::to_string(s.trades), std::to_string(s.penalties),
                         csv::format_double(s.total_cost)});
  }
}

}  // namespace usocost::trading
