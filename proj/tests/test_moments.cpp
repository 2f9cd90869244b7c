#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <random>

#include "brute.hpp"
#include "mixrec/moments.hpp"
#include "mixrec/synth.hpp"

using namespace mixrec;

namespace {

// E x^t for x ~ P(theta), computed without the library's coefficient tables
double numeric_moment(const MomentFamily& f, int t, double theta) {
  switch (f.kind()) {
    case FamilyKind::Gaussian: {
      const double s = f.param();
      if (s == 0.0) return std::pow(theta, t);
      auto dens = [&](double x) {
        const double u = (x - theta) / s;
        return std::pow(x, t) * std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * M_PI));
      };
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(dens, theta - 14 * s, theta + 14 * s, 15,
                                                                             1e-15);
    }
    case FamilyKind::Poisson: {
      if (theta == 0.0) return t == 0 ? 1.0 : 0.0;
      double sum = 0.0;
      for (int k = 0; k < 400; ++k) sum += std::pow(k, t) * std::exp(k * std::log(theta) - theta - std::lgamma(k + 1.0));
      return sum;
    }
    case FamilyKind::Uniform: {
      const double b = f.param();
      if (b == theta) return std::pow(theta, t);
      return (std::pow(b, t + 1) - std::pow(theta, t + 1)) / ((t + 1) * (b - theta));
    }
  }
  return 0.0;
}

using Vecs = std::vector<std::vector<double>>;  // vectors restricted to C

// l * E prod x_i^{z_i} averaged over components, from the numeric oracle
MomentMap analytic_moments(const MomentFamily& f, const Vecs& v, const MultiIndex& zmax) {
  MomentMap out;
  for (const auto& z : multi_indices_upto(zmax)) {
    double s = 0.0;
    for (const auto& vj : v) {
      double p = 1.0;
      for (std::size_t i = 0; i < z.size(); ++i) p *= numeric_moment(f, z[i], vj[i]);
      s += p;
    }
    out[z] = s / static_cast<double>(v.size());
  }
  return out;
}

double power_sum(const Vecs& v, const MultiIndex& z) {
  double s = 0.0;
  for (const auto& vj : v) {
    double p = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) p *= std::pow(vj[i], z[i]);
    s += p;
  }
  return s;
}

bool rel_close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

std::vector<MomentFamily> families() {
  return {MomentFamily::gaussian(1.0), MomentFamily::gaussian(0.7), MomentFamily::poisson(),
          MomentFamily::uniform(3.0)};
}

// random parameters valid for the family; zeros mark off-support entries
Vecs random_vectors(const MomentFamily& f, int ell, int c, std::mt19937_64& g) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution on(0.6), neg(0.5);
  Vecs v(static_cast<std::size_t>(ell), std::vector<double>(static_cast<std::size_t>(c), 0.0));
  for (auto& vj : v)
    for (auto& x : vj) {
      if (!on(g)) continue;
      x = mag(g);
      if (f.kind() == FamilyKind::Gaussian && neg(g)) x = -x;
    }
  return v;
}

}  // namespace

TEST_CASE("coefficient examples") {
  CHECK(MomentFamily::gaussian(1.0).coefficients(1) == std::vector<double>{0.0, 1.0});
  CHECK(MomentFamily::poisson().coefficients(1) == std::vector<double>{0.0, 1.0});
  CHECK(MomentFamily::gaussian(1.0).coefficients(2) == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(MomentFamily::poisson().coefficients(2) == std::vector<double>{0.0, 1.0, 1.0});
  CHECK(MomentFamily::gaussian(2.0).coefficients(0) == std::vector<double>{1.0});
  CHECK_THROWS(MomentFamily::from_name("laplace", 1.0, 1.0));
  CHECK_THROWS(MomentFamily::gaussian(1.0).coefficients(-1));
}

TEST_CASE("coefficients match numerical integration and summation") {
  for (const auto& f : families()) {
    for (int t = 0; t <= 8; ++t) {
      const auto c = f.coefficients(t);
      REQUIRE(c.size() == static_cast<std::size_t>(t) + 1);
      CHECK(c.back() != 0.0);  // degree exactly t
      // t+1 distinct points pin a degree-t polynomial
      for (int q = 0; q <= t; ++q) {
        const double theta = 0.3 + 0.37 * q;
        double poly = 0.0;
        for (int i = t; i >= 0; --i) poly = poly * theta + c[static_cast<std::size_t>(i)];
        CAPTURE(f.name());
        CAPTURE(t);
        CHECK(rel_close(poly, numeric_moment(f, t, theta), 1e-6));
        CHECK(rel_close(f.moment(t, theta), poly, 1e-12));
      }
    }
  }
}

TEST_CASE("multi-index order and zeta") {
  const auto all = multi_indices_upto({2, 1});
  CHECK(all.size() == 6);
  CHECK(all.front() == MultiIndex{0, 0});
  CHECK(all.back() == MultiIndex{2, 1});
  for (std::size_t q = 1; q < all.size(); ++q) {
    const int a = all[q - 1][0] + all[q - 1][1], b = all[q][0] + all[q][1];
    CHECK(a <= b);
  }
  const CoefficientTable beta(MomentFamily::gaussian(1.0), 4);
  // zeta_{(2,2),(0,2)} = beta_{2,0} beta_{2,2} = 1 * 1
  CHECK(zeta(beta, {2, 2}, {0, 2}) == doctest::Approx(1.0));
  CHECK(zeta(beta, {2, 2}, {1, 2}) == doctest::Approx(0.0));
}

TEST_CASE("moment identity with analytic moments") {
  std::mt19937_64 g(31);
  for (const auto& f : families())
    for (int ell = 1; ell <= 3; ++ell)
      for (int c = 1; c <= 3; ++c)
        for (int rep = 0; rep < 3; ++rep) {
          const Vecs v = random_vectors(f, ell, c, g);
          const MultiIndex zmax = uniform_index(static_cast<std::size_t>(c), 2 * ell);
          const auto u = analytic_moments(f, v, zmax);
          const CoefficientTable beta(f, 2 * ell);
          for (const auto& z : multi_indices_upto(zmax)) {
            double rhs = 0.0;
            for (const auto& w : multi_indices_upto(z)) rhs += zeta(beta, z, w) * power_sum(v, w);
            CHECK(rel_close(ell * u.at(z), rhs, 1e-9));
          }
          // the recursion inverts the identity; cancellation costs digits relative to the moment scale
          const auto ps = power_sums_from_moments(u, f, ell, zmax);
          for (const auto& z : multi_indices_upto(zmax))
            CHECK(std::fabs(ps.at(z) - power_sum(v, z)) <= 1e-9 * std::max(1.0, ell * u.at(z)) / zeta(beta, z, z));
        }
}

TEST_CASE("power sum examples") {
  const auto f = MomentFamily::gaussian(1.0);
  MomentMap u = {{{0}, 1.0}, {{1}, 1.5}, {{2}, 3.5}};
  const auto v = power_sums_from_moments(u, f, 2, {2});
  CHECK(v.at({0}) == 2.0);
  CHECK(v.at({1}) == doctest::Approx(3.0));
  CHECK(v.at({2}) == doctest::Approx(5.0));
  CHECK(v.ill_conditioned.empty());

  // one vector: V^z is the monomial itself
  const Vecs one = {{1.3, -0.4}};
  for (const auto& fam : families()) {
    if (fam.kind() != FamilyKind::Gaussian) continue;
    const auto ps = power_sums_from_moments(analytic_moments(fam, one, {2, 2}), fam, 1, {2, 2});
    for (const auto& z : multi_indices_upto({2, 2})) CHECK(rel_close(ps.at(z), power_sum(one, z), 1e-8));
  }
  // all-zero vectors
  const Vecs zero = {{0.0, 0.0}, {0.0, 0.0}};
  const auto pz = power_sums_from_moments(analytic_moments(f, zero, {4, 4}), f, 2, {4, 4});
  for (const auto& z : multi_indices_upto({4, 4}))
    if (z != MultiIndex{0, 0}) CHECK(std::fabs(pz.at(z)) < 1e-8);

  MomentMap missing = {{{0}, 1.0}};
  CHECK_THROWS(power_sums_from_moments(missing, f, 2, {2}));
}

TEST_CASE("Newton identities") {
  CHECK(elementary_symmetric({7.0}) == std::vector<double>{7.0});
  const auto a = elementary_symmetric({13.0, 97.0});
  CHECK(a[0] == doctest::Approx(13.0));
  CHECK(a[1] == doctest::Approx(36.0));
  for (double x : elementary_symmetric({0.0, 0.0, 0.0})) CHECK(x == 0.0);

  // round trip: values -> power sums -> elementary -> power sums via the inverse recursion
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int L = 1; L <= 6; ++L)
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x(static_cast<std::size_t>(L));
      for (auto& v : x) v = u(g);
      std::vector<double> p(static_cast<std::size_t>(L));
      for (int q = 1; q <= L; ++q)
        for (double v : x) p[static_cast<std::size_t>(q - 1)] += std::pow(v, q);
      const auto e = elementary_symmetric(p);
      // direct elementary symmetric polynomials by subset enumeration
      for (int t = 1; t <= L; ++t) {
        double direct = 0.0;
        for (unsigned m = 0; m < (1u << L); ++m) {
          if (__builtin_popcount(m) != t) continue;
          double prod = 1.0;
          for (int b = 0; b < L; ++b)
            if (m >> b & 1u) prod *= x[static_cast<std::size_t>(b)];
          direct += prod;
        }
        CHECK(rel_close(e[static_cast<std::size_t>(t - 1)], direct, 1e-9));
      }
      // P_t = (-1)^{t-1} t e_t + sum_{i=1}^{t-1} (-1)^{i-1} e_i P_{t-i}
      for (int t = 1; t <= L; ++t) {
        double pt = (t % 2 ? 1.0 : -1.0) * t * e[static_cast<std::size_t>(t - 1)];
        for (int i = 1; i < t; ++i)
          pt += (i % 2 ? 1.0 : -1.0) * e[static_cast<std::size_t>(i - 1)] * p[static_cast<std::size_t>(t - i - 1)];
        CHECK(rel_close(pt, p[static_cast<std::size_t>(t - 1)], 1e-9));
      }
    }
}

TEST_CASE("count decisions on exact power sums") {
  const auto f = MomentFamily::gaussian(1.0);
  // mu1 = (2,2,0), mu2 = (2,0,2)
  const Vecs full = {{2, 2, 0}, {2, 0, 2}};
  auto decide = [&](const IndexSet& c) {
    Vecs v;
    for (const auto& vj : full) {
      std::vector<double> r;
      for (int i : c) r.push_back(vj[static_cast<std::size_t>(i - 1)]);
      v.push_back(r);
    }
    const auto zmax = uniform_index(c.size(), 4);
    return decide_intersection_count(power_sums_from_moments(analytic_moments(f, v, zmax), f, 2, zmax), c.size(), 2,
                                     1.0);
  };
  CHECK(decide({1}).count == 2);
  CHECK(decide({2, 3}).count == 0);
  CHECK(decide({1, 2}).count == 1);
}

TEST_CASE("corpus: max-t decoding and threshold separation with exact power sums") {
  std::mt19937_64 g(404);
  const double delta = 0.5;  // random_vectors draws magnitudes >= 0.5
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = brute::random_instance(g);
    const int ell = static_cast<int>(in.supports.size());
    std::uniform_real_distribution<double> mag(delta, 1.5);
    std::vector<std::vector<double>> vals(in.supports.size(), std::vector<double>(static_cast<std::size_t>(in.n), 0.0));
    for (std::size_t j = 0; j < in.supports.size(); ++j)
      for (int i : in.supports[j]) vals[j][static_cast<std::size_t>(i - 1)] = mag(g) * (g() % 2 ? 1 : -1);
    IndexSet u;
    for (const auto& s : in.supports) u = set_union(u, s);
    for (const auto& c : subsets_between(u, 1, std::min<int>(2, static_cast<int>(u.size())))) {
      Vecs v;
      for (const auto& vj : vals) {
        std::vector<double> r;
        for (int i : c) r.push_back(vj[static_cast<std::size_t>(i - 1)]);
        v.push_back(r);
      }
      PowerSumTable exact;
      const auto zmax = uniform_index(c.size(), 2 * ell);
      for (const auto& z : multi_indices_upto(zmax)) exact.values[z] = power_sum(v, z);
      const auto d = decide_intersection_count(exact, c.size(), ell, delta);
      const int truth = brute::inter(in.supports, c);
      CHECK(d.count == truth);
      if (truth > 0) CHECK(d.a[static_cast<std::size_t>(truth - 1)] >= std::pow(delta, 2.0 * truth * c.size()) * (1 - 1e-12));
      for (int t = truth + 1; t <= ell; ++t) CHECK(std::fabs(d.a[static_cast<std::size_t>(t - 1)]) < 1e-9);
      CHECK(decide_membership(exact, c.size(), delta) == (truth > 0));
    }
  }
}

TEST_CASE("Monte Carlo moments and decisions") {
  PlantConfig pc;
  pc.model = Model::MD;
  pc.n = 3;
  pc.sigma = 1.0;
  pc.vectors = {{{1, 1.0}}, {{1, 2.0}}};
  const auto inst = plant(pc);
  const auto s = sample_md(inst, 200000, 11);
  EstimatorConfig cfg;
  const auto u = raw_moment_estimates(s.x, {1}, {2}, cfg);
  CHECK(u.at({0}) == 1.0);
  CHECK(u.at({1}) == doctest::Approx(1.5).epsilon(0.05 / 1.5));
  CHECK(u.at({2}) == doctest::Approx(3.5).epsilon(0.1 / 3.5));
  cfg.batches = 20;
  const auto um = raw_moment_estimates(s.x, {1}, {2}, cfg);
  CHECK(std::fabs(um.at({1}) - 1.5) < 0.05);

  // membership: mu1 = (1,1,0), mu2 = (0,0,1)
  PlantConfig pm = pc;
  pm.vectors = {{{1, 1.0}, {2, 1.0}}, {{3, 1.0}}};
  const auto im = plant(pm);
  const auto sm = sample_md(im, 400000, 12);
  const auto fam = MomentFamily::gaussian(1.0);
  EstimatorConfig e5;
  e5.batches = 5;
  CHECK(intersection_nonempty_md(sm.x, {1, 2}, fam, 2, 1.0, e5));
  CHECK_FALSE(intersection_nonempty_md(sm.x, {2, 3}, fam, 2, 1.0, e5));
  CHECK(intersection_nonempty_md(sm.x, {}, fam, 2, 1.0, e5));
  CHECK(intersection_count_md(sm.x, {3}, fam, 2, 1.0, e5) == 1);
  CHECK(intersection_count_md(sm.x, {}, fam, 2, 1.0, e5) == 2);
}

TEST_CASE("per-batch recursion equals plain recursion with one batch") {
  PlantConfig pc;
  pc.model = Model::MD;
  pc.n = 2;
  pc.vectors = {{{1, 1.0}, {2, 1.5}}, {{2, 1.0}}};
  const auto inst = plant(pc);
  const auto s = sample_md(inst, 5000, 3);
  const auto fam = MomentFamily::gaussian(1.0);
  MomentAccumulator acc({1, 2}, {4, 4}, 5000, 1);
  for (std::size_t r = 0; r < 5000; ++r) acc.add_row(r, &s.x(static_cast<long>(r), 0));
  const auto a = power_sums_median_of_batches(acc, fam, 2);
  const auto b = power_sums_from_moments(acc.estimates(), fam, 2, {4, 4});
  for (const auto& [z, v] : b.values) CHECK(a.at(z) == doctest::Approx(v).epsilon(1e-12));
}
