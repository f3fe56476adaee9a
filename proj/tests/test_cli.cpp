#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "usocost/cli.hpp"
#include "usocost/exchange.hpp"

namespace fs = std::filesystem;
using usocost::fixture_dir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "usocost");
  std::ostringstream out, err;
  const int code = usocost::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const char* name) { return (fixture_dir() / name).string(); }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "usocost_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("fit on the bundled table") {
    const auto json = scratch("fit.json");
    const auto r = run({"fit", fixture("table3.csv"), "--json", json.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("3.465") != std::string::npos);
    CHECK(r.out.find("-0.4402") != std::string::npos);
    const auto j = read_json(json);
    CHECK(j.at("intercept").get<double>() == doctest::Approx(3.4647119331886653).epsilon(1e-15));
    CHECK(j.at("n") == 10);
  }

  TEST_CASE("fit bare fixture name resolves through the fixture directory") {
    CHECK(run({"fit", "table3.csv"}).code == 0);
  }

  TEST_CASE("fit with too few rows") {
    const auto csv = scratch("two_rows.csv");
    {
      std::ifstream in(fixture("table3.csv"));
      std::ofstream out(csv);
      std::string line;
      for (int i = 0; i < 3 && std::getline(in, line); ++i) out << line << '\n';
    }
    const auto r = run({"fit", csv.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("need \xE2\x89\xA5" "3 rows") != std::string::npos);
  }

  TEST_CASE("fit csv residuals and plot data") {
    const auto csv = scratch("fit.csv");
    const auto plot = scratch("plot.csv");
    REQUIRE(run({"fit", fixture("table3.csv"), "--csv", csv.string(), "--plot-data", plot.string()}).code == 0);
    CHECK(slurp(csv).rfind("name,density,observed_cost,fitted_cost,relative_residual\n", 0) == 0);
    CHECK(slurp(plot).rfind("series,name,x,y\n", 0) == 0);
  }

  TEST_CASE("predict") {
    auto r = run({"predict", "--density", "2.8"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("20.34") != std::string::npos);
    r = run({"predict", "--size", "100"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("1.807") != std::string::npos);
    CHECK(r.out.find("24.68") != std::string::npos);

    const auto json = scratch("pred.json");
    REQUIRE(run({"predict", "--density", "80", "--json", json.string()}).code == 0);
    CHECK(read_json(json).at("cost_per_line").get<double>() == doctest::Approx(5.705363243160652).epsilon(1e-12));
    REQUIRE(run({"predict", "--density", "80", "--cap", "1000", "--json", json.string()}).code == 0);
    CHECK(read_json(json).at("cost_per_line").get<double>() < 5.7);

    CHECK(run({"predict"}).code == 2);
    CHECK(run({"predict", "--density", "1", "--size", "2"}).code == 2);
    CHECK(run({"predict", "--density", "0"}).code == 2);
  }

  TEST_CASE("predict with a fitted model file") {
    const auto model = scratch("model.json");
    REQUIRE(run({"fit", fixture("table3.csv"), "--json", model.string()}).code == 0);
    const auto json = scratch("pred2.json");
    REQUIRE(run({"predict", "--model", model.string(), "--density", "2.8", "--json", json.string()}).code == 0);
    const double refit = std::exp(3.4647119331886653 - 0.44019073507157924 * std::log(2.8));
    CHECK(read_json(json).at("cost_per_line").get<double>() == doctest::Approx(refit).epsilon(1e-12));
  }

  TEST_CASE("aggregate csv") {
    const auto json = scratch("agg.json");
    const auto r = run({"aggregate", fixture("table3.csv"), "--json", json.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("9.573") != std::string::npos);
    const auto j = read_json(json);
    CHECK(j.at("cost_per_line").get<double>() == doctest::Approx(9.57255460588794).epsilon(1e-12));
  }

  TEST_CASE("aggregate profiles with grouping") {
    const auto json = scratch("sdca.json");
    const auto r = run({"aggregate", fixture("sdca_example.json"), "--group-by", "terrain", "--json", json.string()});
    REQUIRE(r.code == 0);
    const auto j = read_json(json);
    CHECK(j.at("estimates").size() == 3);
    CHECK(j.contains("groups"));
  }

  TEST_CASE("nusc") {
    const auto json = scratch("nusc.json");
    const auto csv = scratch("nusc.csv");
    auto r = run({"nusc", fixture("scenario_default.json"), "--json", json.string(), "--csv", csv.string()});
    REQUIRE(r.code == 0);
    const auto j = read_json(json);
    REQUIRE(j.at("results").size() == 3);
    CHECK(j.at("results")[1].at("nusc").get<double>() == 7.5);
    CHECK(slurp(csv).rfind("capex,annualized_capex,opex,revenue,nusc\n", 0) == 0);

    REQUIRE(run({"nusc", fixture("scenario_default.json"), "--capex", "60", "--json", json.string()}).code == 0);
    CHECK(read_json(json).at("results").size() == 1);
    CHECK(run({"nusc", fixture("scenario_table2.json")}).code == 0);
  }

  TEST_CASE("simulate") {
    const auto a = scratch("sim_a.json");
    const auto b = scratch("sim_b.json");
    REQUIRE(run({"simulate", fixture("sim_demo.json"), "--json", a.string()}).code == 0);
    REQUIRE(run({"simulate", fixture("sim_demo.json"), "--json", b.string()}).code == 0);
    CHECK(slurp(a) == slurp(b));
    REQUIRE(run({"simulate", fixture("sim_demo.json"), "--seed", "99", "--json", b.string()}).code == 0);
    CHECK(read_json(b).at("seed") == 99);

    const auto r = run({"simulate", fixture("sim_greedy_single.json")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("[p0 m1 op 1] [p1 m2 op 2] [p2 m0 op 3]") != std::string::npos);

    CHECK(run({"simulate", fixture("sim_overcommitted.json")}).code == 2);
  }

  TEST_CASE("validate") {
    auto r = run({"validate", fixture("table3.csv")});
    CHECK(r.code == 0);
    r = run({"validate", fixture("table3.csv"), "--density-tol", "0.001"});
    CHECK(r.code == 2);
  }

  TEST_CASE("input errors exit 2") {
    CHECK(run({"fit", "/nonexistent/table.csv"}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({}).code == 2);
    const auto bad = scratch("bad.csv");
    {
      std::ofstream out(bad);
      out << "name,equipped_capacity\nx,abc\n";
    }
    CHECK(run({"fit", bad.string()}).code == 2);
  }

  TEST_CASE("help and version exit 0") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"--version"}).code == 0);
  }

  TEST_CASE("manifest reproducibility") {
    const auto m1 = scratch("m1.json");
    const auto m2 = scratch("m2.json");
    const auto out = scratch("m_out.json");
    REQUIRE(run({"fit", fixture("table3.csv"), "--json", out.string(), "--manifest", m1.string()}).code == 0);
    REQUIRE(run({"fit", fixture("table3.csv"), "--json", out.string(), "--manifest", m2.string()}).code == 0);
    CHECK(slurp(m1) == slurp(m2));
    const auto j = read_json(m1);
    CHECK(j.at("command") == "fit");
    CHECK(j.at("inputs")[0].at("sha256").get<std::string>().size() == 64);
    CHECK(j.at("outputs")[0].at("sha256") == usocost::cli::sha256_hex(slurp(out)));
  }

  TEST_CASE("sha256") {
    CHECK(usocost::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
