#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

// Tradable universal service obligations: a regulator issues milestones
// (tasks) and commitments (a deadline to complete one milestone) to
// operators. Commitments change hands through trades; on the due period the
// holder either shows the milestone completed or defaults, and the penalty is
// routed along the ownership chain. Every state change is an event on a
// public, append-only ledger.
namespace usocost::trading {

using OperatorId = std::string;
using MilestoneId = std::uint32_t;
using CommitmentId = std::uint32_t;

struct Milestone {
  MilestoneId id = 0;
  std::string task;
  std::map<OperatorId, double> costs;  // operators absent from the map cannot complete it

  std::optional<double> cost_for(const OperatorId& op) const;
  bool operator==(const Milestone&) const = default;
};

enum class CommitmentStatus { open, traded, completed, defaulted };
std::string_view to_string(CommitmentStatus s);

struct Commitment {
  CommitmentId id = 0;
  MilestoneId milestone_id = 0;
  int due_period = 0;
  OperatorId owner;
  std::optional<OperatorId> previous_owner;  // seller of the most recent trade
  CommitmentStatus status = CommitmentStatus::open;

  // `traded` commitments are still outstanding.
  bool is_open() const { return status == CommitmentStatus::open || status == CommitmentStatus::traded; }
  bool operator==(const Commitment&) const = default;
};

// ---------------------------------------------------------------------------
// Events

struct OperatorRegistered {
  OperatorId op;
  bool operator==(const OperatorRegistered&) const = default;
};
struct MilestoneIssued {
  Milestone milestone;
  bool operator==(const MilestoneIssued&) const = default;
};
struct CommitmentIssued {
  CommitmentId commitment = 0;
  MilestoneId milestone = 0;
  int due_period = 0;
  OperatorId owner;
  bool operator==(const CommitmentIssued&) const = default;
};
struct Traded {
  CommitmentId commitment = 0;
  OperatorId from;
  OperatorId to;
  int old_due = 0;
  int new_due = 0;
  double price = 0.0;  // paid by `from` to `to`
  bool operator==(const Traded&) const = default;
};
struct MilestoneCompleted {
  MilestoneId milestone = 0;
  OperatorId op;
  double cost = 0.0;
  bool operator==(const MilestoneCompleted&) const = default;
};
struct CommitmentFulfilled {
  CommitmentId commitment = 0;
  bool operator==(const CommitmentFulfilled&) const = default;
};
struct CommitmentDefaulted {
  CommitmentId commitment = 0;
  OperatorId owner;
  bool operator==(const CommitmentDefaulted&) const = default;
};
struct PenaltyCharged {
  CommitmentId commitment = 0;
  OperatorId op;
  double amount = 0.0;
  bool operator==(const PenaltyCharged&) const = default;
};
struct PeriodClosed {
  int period = 0;
  bool operator==(const PeriodClosed&) const = default;
};

using EventPayload = std::variant<OperatorRegistered, MilestoneIssued, CommitmentIssued, Traded, MilestoneCompleted,
                                  CommitmentFulfilled, CommitmentDefaulted, PenaltyCharged, PeriodClosed>;

struct Event {
  std::uint64_t sequence = 0;
  int period = 0;
  EventPayload payload;
  bool operator==(const Event&) const = default;
};

std::string_view event_type(const EventPayload& payload);

// Per-operator totals, all derivable from the event log.
struct OperatorRecord {
  std::size_t completions = 0;
  double completion_cost = 0.0;
  std::size_t trades_bought = 0;
  std::size_t trades_sold = 0;
  double trade_paid = 0.0;
  double trade_received = 0.0;
  std::size_t penalties = 0;
  double penalty_amount = 0.0;

  std::size_t trades() const { return trades_bought + trades_sold; }
  bool operator==(const OperatorRecord&) const = default;
};

struct LedgerState {
  int period = 0;
  std::vector<OperatorId> operators;  // registration order
  std::map<MilestoneId, Milestone> milestones;
  std::map<CommitmentId, Commitment> commitments;
  std::map<MilestoneId, OperatorId> completed_by;
  std::map<OperatorId, OperatorRecord> records;

  bool operator==(const LedgerState&) const = default;
};

/// Append-only public record. All state is produced by folding events, so
/// replay(events()) reproduces state() exactly.
class Ledger {
 public:
  Ledger() = default;

  static Ledger replay(std::span<const Event> events);

  const std::vector<Event>& events() const noexcept { return events_; }
  const LedgerState& state() const noexcept { return state_; }
  int period() const noexcept { return state_.period; }

  bool has_operator(const OperatorId& op) const;
  const Milestone& milestone(MilestoneId id) const;
  const Commitment& commitment(CommitmentId id) const;
  bool is_completed(MilestoneId id) const { return state_.completed_by.contains(id); }
  // The open commitment bound to a milestone, if any.
  std::optional<CommitmentId> open_commitment_for(MilestoneId id) const;

  // Validates the payload against the current state, applies it and
  // appends it. Throws LedgerError on an inconsistent event.
  const Event& record(EventPayload payload);

  bool operator==(const Ledger&) const = default;

 private:
  void apply(const Event& event);

  LedgerState state_;
  std::vector<Event> events_;
};

// ---------------------------------------------------------------------------
// Operations

enum class BindingRule {
  cheapest_for_owner,  // each commitment binds the owner's cheapest unbound milestone
  in_order,            // commitment k binds milestone k (by id order)
};

struct IssueConfig {
  std::vector<Milestone> milestones;
  std::vector<OperatorId> operators;
  std::size_t commitments = 0;
  std::size_t commitments_per_period = 1;  // commitment k is due at first_due_period + k / per_period
  int first_due_period = 0;
  BindingRule binding = BindingRule::cheapest_for_owner;
};

// Owners are assigned round-robin in operator order. Requires
// commitments <= milestones, so that spare milestones exist to be met early.
Ledger issue_obligations(const IssueConfig& config);

struct TradeRules {
  bool anti_speculation = true;
  std::size_t window = 3;  // at least one completion per `window` trades to keep buying
};

bool barred_from_buying(const Ledger& ledger, const OperatorId& op, const TradeRules& rules);

void trade(Ledger& ledger, CommitmentId commitment, const OperatorId& from, const OperatorId& to, int new_due,
           double price, const TradeRules& rules = {});

enum class PenaltyRouting { previous_owner, current_owner };
std::string_view to_string(PenaltyRouting r);

// Operator liable for a default on `c` under `routing`.
const OperatorId& penalty_target(const Commitment& c, PenaltyRouting routing);

struct Completion {
  MilestoneId milestone = 0;
  OperatorId op;
};

struct SettlementReport {
  int period = 0;
  std::vector<MilestoneId> completed;
  std::vector<CommitmentId> fulfilled;
  std::vector<CommitmentId> defaulted;
  std::vector<PenaltyCharged> penalties;
};

SettlementReport settle_period(Ledger& ledger, int period, std::span<const Completion> completions, double penalty,
                               PenaltyRouting routing = PenaltyRouting::previous_owner);

// ---------------------------------------------------------------------------
// Agent simulation

enum class Strategy { greedy_least_cost, pass_through, scripted };
std::string_view to_string(Strategy s);

struct ScriptedAction {
  enum class Kind { complete, trade };
  int period = 0;
  Kind kind = Kind::complete;
  MilestoneId milestone = 0;
  CommitmentId commitment = 0;
  OperatorId to;
  int new_due = 0;
  double price = 0.0;
};

struct OperatorAgent {
  OperatorId id;
  double budget = 0.0;
  Strategy strategy = Strategy::greedy_least_cost;
  int capacity = 1;  // completions per period
  std::vector<ScriptedAction> script;
};

struct SimulationConfig {
  std::vector<Milestone> milestones;
  std::vector<OperatorAgent> operators;
  std::size_t commitments = 0;
  std::size_t commitments_per_period = 1;
  int first_due_period = 0;
  BindingRule binding = BindingRule::cheapest_for_owner;
  int periods = 0;
  double penalty = 0.0;
  PenaltyRouting routing = PenaltyRouting::previous_owner;
  int trade_extension = 1;  // periods added to the due date when a commitment is sold
  TradeRules trade_rules;
  std::uint64_t seed = 0;
};

struct CompletionRecord {
  int period = 0;
  MilestoneId milestone = 0;
  OperatorId op;
  double cost = 0.0;
};

struct OperatorSummary {
  OperatorId id;
  std::size_t completions = 0;
  std::size_t trades = 0;
  std::size_t penalties = 0;
  double penalty_amount = 0.0;
  double total_cost = 0.0;  // completions + penalties + trade payments - trade receipts
  double final_budget = 0.0;
};

struct SimulationOutcome {
  std::uint64_t seed = 0;
  std::vector<CompletionRecord> completion_order;
  std::vector<OperatorSummary> operators;
  std::vector<SettlementReport> settlements;
  Ledger initial_ledger;
  Ledger ledger;
};

void validate(const SimulationConfig& config);
SimulationOutcome run_simulation(const SimulationConfig& config);

void to_json(nlohmann::json& j, const Milestone& m);
void from_json(const nlohmann::json& j, Milestone& m);
void to_json(nlohmann::json& j, const Event& e);
void from_json(const nlohmann::json& j, Event& e);
void to_json(nlohmann::json& j, const Commitment& c);
void to_json(nlohmann::json& j, const Ledger& l);
void to_json(nlohmann::json& j, const SettlementReport& r);
void to_json(nlohmann::json& j, const SimulationOutcome& o);
void from_json(const nlohmann::json& j, SimulationConfig& c);
void to_json(nlohmann::json& j, const SimulationConfig& c);

// Columns: operator, completions, trades, penalties, total_cost.
void write_summary_csv(std::ostream& out, const SimulationOutcome& outcome);

}  // namespace usocost::trading
