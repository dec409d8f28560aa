#include <cmath>
#include <string>

#include "doctest.h"
#include "evoglm/error.hpp"
#include "evoglm/serialization.hpp"
#include "support.hpp"

using namespace evoglm;

TEST_SUITE("serialization") {
  TEST_CASE("model parameters round-trip exactly") {
    ModelParams p = SimConfig::paper_default().params;
    p.lines[0].phi = 0.1 + 0.2;
    const ModelParams q = model_params_from_json(to_json(p));
    REQUIRE(q.line_count() == 2);
    CHECK(q.lines[0].phi == p.lines[0].phi);
    CHECK(q.lines[1].lambda == p.lines[1].lambda);
    CHECK(q.sigma2_h_tilde == p.sigma2_h_tilde);
    CHECK(to_json(q) == to_json(p));
  }

  TEST_CASE("parameter errors name the field") {
    Json j = to_json(SimConfig::paper_default().params);
    j["lines"][1]["phi"] = -1.0;
    try {
      (void)model_params_from_json(j);
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("lines[1].phi") != std::string::npos);
    }
  }

  TEST_CASE("simulation config round-trips") {
    SimConfig c = SimConfig::paper_default();
    c.missing_fraction = 0.1;
    c.family = ObservationFamily::gaussian;
    const SimConfig d = sim_config_from_json(to_json(c));
    CHECK(to_json(d) == to_json(c));
    CHECK(d.gamma1[1] == c.gamma1[1]);
    CHECK(d.seed == c.seed);
  }

  TEST_CASE("panel and truth round-trip") {
    SimConfig c = SimConfig::paper_default();
    c.dim = 5;
    c.missing_fraction = 0.2;
    const SimResult sim = simulate_panel(c);
    const TrianglePanel p = panel_from_json(to_json(sim.panel));
    REQUIRE(p.lines() == 2);
    for (int n = 0; n < 2; ++n) {
      for (int i = 1; i <= 5; ++i) {
        for (int j = 1; j <= 6 - i; ++j) {
          CHECK(p.observed(n, i, j) == sim.panel.observed(n, i, j));
          if (p.observed(n, i, j)) CHECK(p.value(n, i, j) == sim.panel.value(n, i, j));
        }
      }
    }
    const TruthRecord t = truth_from_json(to_json(sim.truth));
    CHECK(t.h[1] == sim.truth.h[1]);
    CHECK(t.gamma[0][3] == sim.truth.gamma[0][3]);
    CHECK(t.common_shocks == sim.truth.common_shocks);
  }

  TEST_CASE("json files round-trip through disk") {
    const auto dir = test::scratch("json_file");
    const Json j = to_json(SimConfig::paper_default());
    write_json_file(dir / "c.json", j);
    CHECK(read_json_file(dir / "c.json") == j);
    test::write_text(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(read_json_file(dir / "bad.json"), InputError);
    CHECK_THROWS_AS(read_json_file(dir / "absent.json"), std::runtime_error);
  }

  TEST_CASE("numbers use the shortest round-trip form") {
    CHECK(num(0.1) == "0.1");
    CHECK(num(1.0 / 3.0) == "0.3333333333333333");
    CHECK(std::stod(num(0.1 + 0.2)) == 0.1 + 0.2);
    CHECK(num(std::nan("")) == "NA");
    CHECK(num(7) == "7");
  }

  TEST_CASE("csv tables round-trip") {
    const auto dir = test::scratch("csv_table");
    CsvTable t({"a", "b"});
    t.add({num(1.5), num(std::nan(""))}).add({num(-2), num(1e-300)});
    t.write(dir / "t.csv");
    const CsvTable r = read_csv_table(dir / "t.csv");
    CHECK(r.header() == t.header());
    CHECK(r.rows() == t.rows());
    CHECK(r.str() == t.str());
    CHECK_THROWS(t.add({"only-one"}));
  }
}
