#include <doctest.h>

#include <random>

#include "brute.hpp"
#include "mixrec/json_io.hpp"

using namespace mixrec;

TEST_CASE("occ and stat tables survive a round trip") {
  std::mt19937_64 g(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = brute::random_instance(g);
    const int ell = static_cast<int>(in.supports.size());
    const auto st = oracle_stats(SupportSet{in.n, in.supports}, std::min(ell, 3));
    const auto occ = occ_from_json(json::parse(occ_to_json(st.occ).dump()));
    CHECK(occ.rows() == st.occ.rows());
    CHECK(occ.ell() == st.occ.ell());
    for (const auto* t : {&st.intersections, &st.unions}) {
      const auto back = stats_from_json(json::parse(stats_to_json(*t).dump()));
      CHECK(back.kind() == t->kind());
      CHECK(back.entries() == t->entries());
    }
  }
  json bad = {{"ell", 2}, {"rows", json::array({{{"subset", {1, 2}}, {"counts", {{"1", 1}}}}})}};
  CHECK_THROWS(occ_from_json(bad));
}

TEST_CASE("supports and plant configs round trip") {
  const SupportSet s{6, {{1, 2}, {2, 5}, {1, 2}}};
  CHECK(supports_from_json(supports_to_json(s)) == s);

  PlantConfig pc;
  pc.model = Model::MLC;
  pc.n = 9;
  pc.k = 3;
  pc.ell = 3;
  pc.delta = 0.25;
  pc.sigma = 0.7;
  pc.sign = SignRegime::Nonpos;
  pc.norm_gap = 0.4;
  pc.seed = 123456789012345ull;
  pc.vectors = {{{1, -0.5}, {4, -1.0}}, {{2, -2.0}}};
  const auto back = plant_config_from_json(json::parse(plant_config_to_json(pc).dump()));
  CHECK(back.model == pc.model);
  CHECK(back.n == 9);
  CHECK(back.sign == SignRegime::Nonpos);
  CHECK(back.norm_gap == pc.norm_gap);
  CHECK_FALSE(back.variance_ratio.has_value());
  CHECK(back.seed == pc.seed);
  CHECK(back.vectors == pc.vectors);
  CHECK(plant_config_to_json(back).dump() == plant_config_to_json(pc).dump());
}

TEST_CASE("run config: defaults, overrides and nesting") {
  RunConfig c;
  c.mode = Mode::Maximal;
  c.plant.model = Model::MLR;
  c.m = 1234;
  c.batches = 7;
  c.mlr_alpha = 0.5;
  c.mlr_repeats = 3;
  c.union_strategy = UnionStrategy::Cluster;
  const auto j = run_config_to_json(c);
  const auto back = run_config_from_json(j);
  CHECK(run_config_to_json(back).dump() == j.dump());

  // flat keys are accepted as well as the nested plant block
  const auto flat = run_config_from_json(json::parse(R"({"model": "mlc", "n": 5, "m": 10, "batches": null})"), c);
  CHECK(flat.plant.model == Model::MLC);
  CHECK(flat.plant.n == 5);
  CHECK(flat.m == 10);
  CHECK_FALSE(flat.batches.has_value());  // null resets
  CHECK(flat.mlr_alpha == 0.5);           // untouched keys keep the base
  CHECK_THROWS(run_config_from_json(json::parse(R"({"mode": "sideways"})")));
}

TEST_CASE("report json shape") {
  RunConfig c;
  c.plant.model = Model::MD;
  c.plant.n = 6;
  c.plant.ell = 2;
  c.oracle = true;
  auto r = run(c);
  auto j = report_to_json(r);
  for (const char* key : {"model", "mode", "seed", "recovered", "truth", "exact_match", "diagnostics", "error"})
    CHECK_MESSAGE(j.contains(key), key);
  CHECK(j["error"].is_null());
  CHECK(j["exact_match"] == true);
  CHECK_FALSE(j.contains("wall_seconds"));
  r.include_timing = true;
  CHECK(report_to_json(r).contains("wall_seconds"));

  const auto b = bench_to_json(c, {{1000, 4, 3}});
  CHECK(b["rows"][0]["rate"] == 0.75);
  CHECK(b["config"]["seed"] == 1);
}

TEST_CASE("coefficient table") {
  const auto j = coefficients_to_json(MomentFamily::gaussian(1.0), 4);
  CHECK(j["rows"].size() == 5);
  // E (mu + Z)^2 = mu^2 + 1: beta_{2,0} = 1
  CHECK(j["rows"][2]["beta"][0].get<double>() == doctest::Approx(1.0));
  CHECK(j["family"] == "gaussian");
}
