#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "sim_gen.hpp"
#include "usocost/error.hpp"
#include "usocost/exchange.hpp"
#include "usocost/trading.hpp"

using namespace usocost;
using namespace usocost::trading;

namespace {

Milestone ms(MilestoneId id, std::map<OperatorId, double> costs) { return {id, "task " + std::to_string(id), costs}; }

IssueConfig two_ops(std::size_t m, std::size_t c) {
  IssueConfig ic;
  ic.operators = {"A", "B"};
  for (std::size_t i = 0; i < m; ++i) ic.milestones.push_back(ms(static_cast<MilestoneId>(i), {{"A", 1.0 + i}, {"B", 2.0 + i}}));
  ic.commitments = c;
  return ic;
}

// One commitment owned by A, due at period 4, with operators A, B, C.
Ledger chain_ledger() {
  IssueConfig ic;
  ic.operators = {"A", "B", "C"};
  ic.milestones = {ms(0, {{"A", 5}, {"B", 5}, {"C", 5}})};
  ic.commitments = 1;
  ic.first_due_period = 4;
  return issue_obligations(ic);
}

SimulationConfig load_sim(const std::string& name) {
  std::ifstream in(fixture_dir() / name);
  REQUIRE(in);
  return nlohmann::json::parse(in).get<SimulationConfig>();
}

}  // namespace

TEST_SUITE("uso_trading_sim") {
  TEST_CASE("issue obligations") {
    const auto l = issue_obligations(two_ops(5, 3));
    CHECK(l.state().milestones.size() == 5);
    CHECK(l.state().commitments.size() == 3);
    CHECK(l.commitment(0).owner == "A");
    CHECK(l.commitment(1).owner == "B");
    CHECK(l.commitment(2).owner == "A");
    for (const auto& [id, c] : l.state().commitments) {
      CHECK(c.status == CommitmentStatus::open);
      CHECK_FALSE(c.previous_owner);
    }
    // Cheapest-for-owner binding: A gets milestone 0, B the next cheapest (1), A then 2.
    CHECK(l.commitment(0).milestone_id == 0);
    CHECK(l.commitment(1).milestone_id == 1);
    CHECK(l.commitment(2).milestone_id == 2);

    const auto empty = issue_obligations(two_ops(0, 0));
    CHECK(empty.state().milestones.empty());
    CHECK(empty.state().commitments.empty());

    CHECK_THROWS_AS(issue_obligations(two_ops(2, 3)), ConfigError);
    auto unknown = two_ops(2, 1);
    unknown.milestones[0].costs["Z"] = 1;
    CHECK_THROWS_AS(issue_obligations(unknown), ConfigError);
  }

  TEST_CASE("due periods follow commitments per period") {
    auto ic = two_ops(6, 5);
    ic.commitments_per_period = 2;
    ic.first_due_period = 1;
    const auto l = issue_obligations(ic);
    const std::vector<int> due = {1, 1, 2, 2, 3};
    for (CommitmentId k = 0; k < 5; ++k) CHECK(l.commitment(k).due_period == due[k]);
  }

  TEST_CASE("trade semantics") {
    auto l = chain_ledger();
    trade(l, 0, "A", "B", 2, 1.5);
    CHECK(l.commitment(0).owner == "B");
    CHECK(l.commitment(0).previous_owner == std::optional<OperatorId>("A"));
    CHECK(l.commitment(0).due_period == 2);
    CHECK(l.commitment(0).status == CommitmentStatus::traded);
    CHECK(l.commitment(0).is_open());
    CHECK(l.state().records.at("A").trade_paid == 1.5);
    CHECK(l.state().records.at("B").trade_received == 1.5);

    trade(l, 0, "B", "C", 3, 0.0);
    CHECK(l.commitment(0).previous_owner == std::optional<OperatorId>("B"));

    CHECK_THROWS_AS(trade(l, 0, "C", "C", 3, 0), LedgerError);
    CHECK_THROWS_AS(trade(l, 0, "A", "B", 3, 0), LedgerError);
    CHECK_THROWS_AS(trade(l, 0, "C", "nobody", 3, 0), LedgerError);
    CHECK_THROWS_AS(trade(l, 9, "C", "A", 3, 0), LedgerError);
  }

  TEST_CASE("closed commitments cannot trade") {
    IssueConfig ic = two_ops(1, 1);
    auto l = issue_obligations(ic);
    const std::vector<Completion> done = {{0, "A"}};
    settle_period(l, 0, done, 5);
    CHECK(l.commitment(0).status == CommitmentStatus::completed);
    CHECK_THROWS_AS(trade(l, 0, "A", "B", 2, 0), LedgerError);
  }

  TEST_CASE("settlement") {
    SUBCASE("completion reported") {
      auto l = issue_obligations(two_ops(1, 1));
      const std::vector<Completion> done = {{0, "A"}};
      const auto r = settle_period(l, 0, done, 7);
      CHECK(r.fulfilled == std::vector<CommitmentId>{0});
      CHECK(r.penalties.empty());
      CHECK(l.period() == 1);
    }
    SUBCASE("never traded default charges the owner") {
      auto l = issue_obligations(two_ops(1, 1));
      const auto r = settle_period(l, 0, {}, 7);
      CHECK(l.commitment(0).status == CommitmentStatus::defaulted);
      REQUIRE(r.penalties.size() == 1);
      CHECK(r.penalties[0].op == "A");
      CHECK(r.penalties[0].amount == 7);
    }
    SUBCASE("past or future period") {
      auto l = issue_obligations(two_ops(1, 1));
      CHECK_THROWS_AS(settle_period(l, 1, {}, 7), LedgerError);
      settle_period(l, 0, {}, 7);
      CHECK_THROWS_AS(settle_period(l, 0, {}, 7), LedgerError);
    }
    SUBCASE("failed settlement leaves the ledger untouched") {
      auto l = issue_obligations(two_ops(2, 1));
      const auto before = l;
      const std::vector<Completion> bad = {{1, "A"}, {1, "B"}};
      CHECK_THROWS_AS(settle_period(l, 0, bad, 7), LedgerError);
      CHECK(l == before);
    }
    SUBCASE("bound milestones belong to the commitment holder") {
      auto l = issue_obligations(two_ops(2, 1));
      const std::vector<Completion> poach = {{0, "B"}};
      CHECK_THROWS_AS(settle_period(l, 0, poach, 7), LedgerError);
    }
  }

  TEST_CASE("penalty routing on two-trade chains") {
    for (const auto routing : {PenaltyRouting::previous_owner, PenaltyRouting::current_owner}) {
      auto l = chain_ledger();
      trade(l, 0, "A", "B", 0, 1);
      trade(l, 0, "B", "C", 0, 1);
      const auto r = settle_period(l, 0, {}, 11, routing);
      REQUIRE(r.penalties.size() == 1);
      CHECK(r.penalties[0].op == (routing == PenaltyRouting::previous_owner ? "B" : "C"));
      CHECK(l.state().records.at(r.penalties[0].op).penalty_amount == 11);
      CHECK(l.state().records.at("A").penalties == 0);
    }
  }

  TEST_CASE("property: previous owner is always the latest seller") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
      const auto l = simgen::random_ledger(rng);
      std::map<CommitmentId, OperatorId> last_seller;
      for (const auto& e : l.events())
        if (const auto* tr = std::get_if<Traded>(&e.payload)) last_seller[tr->commitment] = tr->from;
      for (const auto& [id, c] : l.state().commitments) {
        const auto it = last_seller.find(id);
        REQUIRE(c.previous_owner.has_value() == (it != last_seller.end()));
        if (c.previous_owner) REQUIRE(*c.previous_owner == it->second);
      }
    }
  }

  TEST_CASE("property: replay reproduces state") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
      const auto l = simgen::random_ledger(rng);
      const auto replayed = Ledger::replay(l.events());
      REQUIRE(replayed.state() == l.state());
      // Through JSON as well.
      const nlohmann::json j = l.events();
      const auto events = j.get<std::vector<Event>>();
      REQUIRE(events == l.events());
      REQUIRE(Ledger::replay(events) == l);
    }
  }

  TEST_CASE("property: conservation") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
      const auto l = simgen::random_ledger(rng);
      std::size_t issued = 0;
      std::multiset<MilestoneId> completed;
      for (const auto& e : l.events()) {
        if (std::holds_alternative<MilestoneIssued>(e.payload)) {
          REQUIRE(e.sequence < l.events().size());
          ++issued;
        }
        if (const auto* c = std::get_if<MilestoneCompleted>(&e.payload)) completed.insert(c->milestone);
      }
      REQUIRE(issued == l.state().milestones.size());
      for (auto id : completed) REQUIRE(completed.count(id) == 1);
    }
  }

  TEST_CASE("replay rejects tampered logs") {
    auto l = chain_ledger();
    trade(l, 0, "A", "B", 2, 1);
    auto events = l.events();
    std::get<Traded>(events.back().payload).from = "C";
    CHECK_THROWS_AS(Ledger::replay(events), LedgerError);
    events = l.events();
    events.erase(events.begin() + 1);
    CHECK_THROWS_AS(Ledger::replay(events), LedgerError);
    // Issuance after trading started.
    auto later = l;
    CHECK_THROWS_AS(later.record(MilestoneIssued{ms(9, {{"A", 1}})}), LedgerError);
  }

  TEST_CASE("anti-speculation") {
    auto l = chain_ledger();
    const TradeRules rules{true, 3};
    // B buys and resells three times without completing anything.
    trade(l, 0, "A", "B", 4, 0, rules);
    trade(l, 0, "B", "C", 4, 0, rules);
    trade(l, 0, "C", "B", 4, 0, rules);
    CHECK(l.state().records.at("B").trades() == 3);
    CHECK(barred_from_buying(l, "B", rules));
    trade(l, 0, "B", "A", 4, 0, rules);
    CHECK_THROWS_AS(trade(l, 0, "A", "B", 4, 0, rules), LedgerError);
    CHECK_FALSE(barred_from_buying(l, "B", TradeRules{false, 3}));
    trade(l, 0, "A", "B", 4, 0, TradeRules{false, 3});
  }

  TEST_CASE("greedy single operator orders by cost") {
    const auto out = run_simulation(simgen::single_greedy({3, 1, 2}, 3));
    REQUIRE(out.completion_order.size() == 3);
    CHECK(out.completion_order[0].cost == 1);
    CHECK(out.completion_order[1].cost == 2);
    CHECK(out.completion_order[2].cost == 3);
    CHECK(out.operators[0].penalties == 0);

    const auto fixture = run_simulation(load_sim("sim_greedy_single.json"));
    std::vector<double> costs;
    for (const auto& c : fixture.completion_order) costs.push_back(c.cost);
    CHECK(costs == std::vector<double>{1, 2, 3});
  }

  TEST_CASE("zero periods") {
    auto cfg = simgen::single_greedy({3, 1, 2}, 2);
    cfg.periods = 0;
    const auto out = run_simulation(cfg);
    CHECK(out.completion_order.empty());
    CHECK(out.ledger == out.initial_ledger);
  }

  TEST_CASE("M=6, C=3 with two greedy operators") {
    SimulationConfig cfg;
    cfg.operators = {{"A", 100, Strategy::greedy_least_cost, 2, {}}, {"B", 100, Strategy::greedy_least_cost, 2, {}}};
    const std::vector<std::pair<double, double>> costs = {{4, 2}, {1, 6}, {5, 3}, {2, 5}, {6, 1}, {3, 4}};
    for (MilestoneId i = 0; i < costs.size(); ++i) cfg.milestones.push_back(ms(i, {{"A", costs[i].first}, {"B", costs[i].second}}));
    cfg.commitments = 3;
    cfg.commitments_per_period = 3;
    cfg.periods = 1;
    cfg.penalty = 50;
    const auto out = run_simulation(cfg);
    CHECK(out.settlements.at(0).defaulted.empty());

    // Exhaustive check: each committed milestone costs its owner no more than
    // any milestone that was free when it was bound.
    const auto& init = out.initial_ledger.state();
    std::set<MilestoneId> bound_before;
    for (const auto& [id, c] : init.commitments) {
      const double got = *init.milestones.at(c.milestone_id).cost_for(c.owner);
      for (const auto& [mid, m] : init.milestones) {
        if (bound_before.contains(mid)) continue;
        CHECK(got <= *m.cost_for(c.owner));
      }
      bound_before.insert(c.milestone_id);
      CHECK(out.ledger.commitment(id).status == CommitmentStatus::completed);
    }
  }

  TEST_CASE("demo fixture runs and is deterministic") {
    const auto cfg = load_sim("sim_demo.json");
    const auto a = run_simulation(cfg);
    const auto b = run_simulation(cfg);
    CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
    CHECK(Ledger::replay(a.ledger.events()) == a.ledger);
    CHECK(a.ledger.period() == cfg.periods);

    // Totals per operator match the ledger's records.
    for (const auto& s : a.operators) {
      const auto& r = a.ledger.state().records.at(s.id);
      CHECK(s.total_cost == doctest::Approx(r.completion_cost + r.penalty_amount + r.trade_paid - r.trade_received));
    }

    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
      auto c = cfg;
      c.seed = rng();
      REQUIRE(nlohmann::json(run_simulation(c)).dump() == nlohmann::json(run_simulation(c)).dump());
    }
  }

  TEST_CASE("config json round trip and errors") {
    const auto cfg = load_sim("sim_demo.json");
    const nlohmann::json j = cfg;
    const auto back = j.get<SimulationConfig>();
    CHECK(nlohmann::json(back) == j);

    CHECK_THROWS_AS(run_simulation(load_sim("sim_overcommitted.json")), ConfigError);
    auto bad = cfg;
    bad.penalty = -1;
    CHECK_THROWS_AS(run_simulation(bad), ConfigError);
    bad = cfg;
    bad.operators[0].capacity = -1;
    CHECK_THROWS_AS(run_simulation(bad), ConfigError);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"milestones":[],"operators":[{"id":"a","strategy":"lazy"}]})")
                        .get<SimulationConfig>(),
                    ConfigError);
  }

  TEST_CASE("scripted agents") {
    SimulationConfig cfg;
    ScriptedAction sell;
    sell.period = 0;
    sell.kind = ScriptedAction::Kind::trade;
    sell.commitment = 0;
    sell.to = "B";
    sell.new_due = 1;
    sell.price = 2;
    cfg.operators = {{"A", 10, Strategy::scripted, 1, {sell}}, {"B", 10, Strategy::scripted, 1, {}}};
    cfg.milestones = {ms(0, {{"A", 3}, {"B", 4}})};
    cfg.commitments = 1;
    cfg.periods = 2;
    cfg.penalty = 9;
    const auto out = run_simulation(cfg);
    // B never completes, defaults at period 1 and A, the seller, pays.
    CHECK(out.ledger.commitment(0).status == CommitmentStatus::defaulted);
    REQUIRE(out.settlements.at(1).penalties.size() == 1);
    CHECK(out.settlements[1].penalties[0].op == "A");
    CHECK(out.operators[0].total_cost == doctest::Approx(9 + 2));
    CHECK(out.operators[1].total_cost == doctest::Approx(-2));
  }

  TEST_CASE("summary csv") {
    const auto out = run_simulation(simgen::single_greedy({3, 1, 2}, 0));
    std::ostringstream s;
    write_summary_csv(s, out);
    CHECK(s.str() == "operator,completions,trades,penalties,total_cost\nsolo,3,0,0,6\n");
  }
}
