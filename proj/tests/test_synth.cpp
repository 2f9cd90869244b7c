#include <doctest.h>

#include <set>

#include "mixrec/synth.hpp"

using namespace mixrec;

TEST_CASE("Philox4x32-10 known answers") {
  using B = std::array<std::uint32_t, 4>;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("Philox streams are reproducible and distinct") {
  Philox4x32 a(7, 1, 2), b(7, 1, 2), c(7, 1, 3), d(8, 1, 2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
    seen.insert(x);
  }
  CHECK(seen.size() == 100);
}

TEST_CASE("plant examples") {
  PlantConfig pc;
  pc.n = 4;
  pc.k = 4;
  pc.ell = 1;
  pc.delta = 1.0;
  pc.R = 1.0;
  pc.binary = true;
  const auto one = plant(pc);
  CHECK(one.v[0] == Eigen::VectorXd::Ones(4));

  PlantConfig nn;
  nn.n = 10;
  nn.k = 3;
  nn.ell = 3;
  nn.delta = 0.5;
  nn.R = 3.0;
  nn.sign = SignRegime::Nonneg;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    nn.seed = s;
    for (const auto& x : plant(nn).v)
      for (int i = 0; i < x.size(); ++i) CHECK((x[i] == 0.0 || x[i] >= nn.delta));
  }
}

TEST_CASE("generator and validator closure") {
  PlantConfig pc;
  pc.n = 12;
  pc.k = 3;
  pc.ell = 3;
  pc.delta = 0.5;
  pc.R = 2.0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    pc.seed = s;
    const auto inst = plant(pc);
    CHECK(assumption_violations(inst).empty());
    for (const auto& x : inst.v) {
      CHECK((x.array() != 0.0).count() == 3);
      CHECK(x.norm() <= pc.R + 1e-12);
    }
  }
  // each rejection names the assumption that failed
  PlantConfig bad = pc;
  bad.vectors = {{{1, 0.1}}, {{2, 5.0}, {3, 1.0}}};
  const auto inst = plant(bad);
  const auto v = assumption_violations(inst);
  bool magnitude = false, norm = false;
  for (const auto& m : v) {
    magnitude = magnitude || m.find("min magnitude") != std::string::npos;
    norm = norm || m.find("norm <= R") != std::string::npos;
  }
  CHECK(magnitude);
  CHECK(norm);
  PlantConfig sign = pc;
  sign.sign = SignRegime::Nonneg;
  sign.vectors = {{{1, -1.0}}};
  CHECK(assumption_violations(plant(sign)).front().find("Assumption 2") != std::string::npos);
  PlantConfig gap = pc;
  gap.norm_gap = 0.5;
  gap.vectors = {{{1, 1.0}}, {{2, 1.2}}};
  CHECK(assumption_violations(plant(gap)).front().find("Assumption 3") != std::string::npos);
  PlantConfig sparse = pc;
  sparse.k = 1;
  sparse.vectors = {{{1, 1.0}, {2, 1.0}}};
  CHECK(assumption_violations(plant(sparse)).front().find("sparsity") != std::string::npos);
}

TEST_CASE("infeasible configurations are rejected") {
  PlantConfig pc;
  pc.n = 5;
  pc.k = 4;
  pc.delta = 1.5;
  pc.R = 2.0;  // R / sqrt(k) = 1 < delta
  CHECK_THROWS_AS(plant(pc), Error);
  pc.delta = 3.0;
  CHECK_THROWS_AS(plant(pc), std::invalid_argument);
  PlantConfig forced;
  forced.n = 4;
  forced.k = 2;
  forced.ell = 2;
  forced.binary = true;
  forced.R = 2.0;
  forced.norm_gap = 0.5;  // binary, same sparsity: all norms equal, gap is vacuous
  CHECK_NOTHROW(plant(forced));
  forced.exact_sparsity = true;
  forced.variance_ratio = 4.0;
  forced.supports = {{1, 2}, {3}};
  forced.max_attempts = 5;
  // norms sqrt2 and 1 with sigma 1: variances 3 and 2, ratio 1.5 < 4 on every draw
  CHECK_THROWS_AS(plant(forced), Error);
}

TEST_CASE("sampling examples") {
  PlantConfig pc;
  pc.model = Model::MLR;
  pc.n = 3;
  pc.sigma = 0.0;
  pc.vectors = {{{1, 2.0}, {3, -1.0}}};
  const auto inst = plant(pc);
  const auto s = sample_mlr(inst, 1000, 5);
  for (long r = 0; r < 1000; ++r) CHECK(s.y[r] == doctest::Approx(2.0 * s.x(r, 0) - s.x(r, 2)));

  PlantConfig md;
  md.model = Model::MD;
  md.n = 3;
  md.sigma = 1.0;
  md.vectors = {{{1, 1.5}, {2, -0.5}}};
  const auto sm = sample_md(plant(md), 100000, 6);
  const Eigen::RowVectorXd mean = sm.x.colwise().mean();
  CHECK(mean[0] == doctest::Approx(1.5).epsilon(0.02));
  CHECK(mean[1] == doctest::Approx(-0.5).epsilon(0.04));
  CHECK(std::fabs(mean[2]) < 0.02);

  PlantConfig mlc;
  mlc.model = Model::MLC;
  mlc.n = 2;
  mlc.sigma = 1.0;
  mlc.vectors = {{}};
  const auto sc = sample_mlc(plant(mlc), 100000, 7);
  const double pos = (sc.y.array() > 0).cast<double>().mean();
  CHECK(std::fabs(pos - 0.5) < 0.01);
  for (long r = 0; r < 100; ++r) CHECK(std::fabs(sc.y[r]) == 1.0);
  CHECK_THROWS(sample_mlr(plant(md), 10, 1));
}

TEST_CASE("sample streams are element-addressable and deterministic") {
  PlantConfig pc;
  pc.model = Model::MLR;
  pc.n = 6;
  pc.k = 2;
  pc.ell = 2;
  pc.seed = 3;
  const auto inst = plant(pc);
  const auto a = sample(inst, 500, 9), b = sample(inst, 500, 9), c = sample(inst, 500, 10);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.x != c.x);
  SampleStream st(inst, 9);
  SampleMatrix part;
  Eigen::VectorXd y;
  st.fill(100, 120, {2, 5}, part, &y, nullptr);
  for (long r = 0; r < 20; ++r) {
    CHECK(part(r, 0) == a.x(100 + r, 1));
    CHECK(part(r, 1) == a.x(100 + r, 4));
    CHECK(y[r] == a.y(100 + r));
    CHECK(st.covariate(100 + r, 5) == a.x(100 + r, 4));
  }
}

TEST_CASE("side channel: per-component moments match the planted parameters") {
  PlantConfig pc;
  pc.model = Model::MLR;
  pc.n = 4;
  pc.sigma = 0.5;
  pc.vectors = {{{1, 1.0}, {2, 1.0}}, {{3, 2.0}}};
  const auto inst = plant(pc);
  const auto s = sample_mlr(inst, 200000, 21);
  for (int j = 0; j < 2; ++j) {
    double sum = 0, sq = 0, cross = 0;
    int cnt = 0;
    for (long r = 0; r < s.x.rows(); ++r) {
      if (s.component[static_cast<std::size_t>(r)] != j) continue;
      ++cnt;
      sum += s.y[r];
      sq += s.y[r] * s.y[r];
      cross += s.y[r] * s.x(r, j == 0 ? 0 : 2);
    }
    const double var = sq / cnt - (sum / cnt) * (sum / cnt);
    const double want = inst.v[static_cast<std::size_t>(j)].squaredNorm() + 0.25;
    CHECK(cnt == doctest::Approx(100000).epsilon(0.02));
    CHECK(var == doctest::Approx(want).epsilon(0.03));
    CHECK(cross / cnt == doctest::Approx(j == 0 ? 1.0 : 2.0).epsilon(0.03));
  }
}

TEST_CASE("oracle_stats examples") {
  const auto a = oracle_stats(SupportSet{3, {{1, 2}}}, 2);
  CHECK(a.occ.get({1, 2}, "11") == 1);
  CHECK(a.occ.get({1, 2}, "10") == 0);
  CHECK(a.occ.get({1, 2}, "01") == 0);
  CHECK(a.occ.get({1, 2}, "00") == 0);
  const auto b = oracle_stats(SupportSet{3, {{1, 2}, {2, 3}}}, 2);
  CHECK(b.unions.get({1, 3}) == 2);
  CHECK(b.intersections.get({1, 3}) == 0);
  CHECK_FALSE(b.occ.consistency_error().has_value());
  const auto c = oracle_stats(SupportSet{3, {{1, 2}, {1, 2, 3}}}, 3);
  CHECK(c.maximal == std::vector<IndexSet>{{1, 2, 3}});
  CHECK_THROWS_AS(oracle_stats(SupportSet{30, {range_set(1, 30)}}, 10, 1000), BudgetExceeded);
}
