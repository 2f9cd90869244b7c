#include "mixrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace mixrec {

namespace {

constexpr std::uint64_t kTagComponent = 0xFFFFFF01u;
constexpr std::uint64_t kTagNoise = 0xFFFFFF02u;
constexpr std::uint64_t kTagPlant = 0xFFFFFF03u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, c[0], hi0, lo0);
    mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream_hi, std::uint64_t stream_lo)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      ctr_{0u, static_cast<std::uint32_t>(stream_lo), static_cast<std::uint32_t>(stream_lo >> 32),
           static_cast<std::uint32_t>(stream_hi) ^ static_cast<std::uint32_t>(stream_hi >> 32)} {}

Philox4x32::result_type Philox4x32::operator()() {
  if (pos_ >= 4) {
    buf_ = block(ctr_, key_);
    ++ctr_[0];
    pos_ = 0;
  }
  const result_type r = (static_cast<result_type>(buf_[pos_]) << 32) | buf_[pos_ + 1];
  pos_ += 2;
  return r;
}

std::string to_string(Model m) {
  switch (m) {
    case Model::MD: return "md";
    case Model::MLR: return "mlr";
    case Model::MLC: return "mlc";
  }
  return "?";
}

Model model_from_string(const std::string& s) {
  if (s == "md") return Model::MD;
  if (s == "mlr") return Model::MLR;
  if (s == "mlc") return Model::MLC;
  throw std::invalid_argument("unknown model: " + s);
}

std::string to_string(SignRegime s) {
  switch (s) {
    case SignRegime::Any: return "any";
    case SignRegime::Nonneg: return "nonneg";
    case SignRegime::Nonpos: return "nonpos";
  }
  return "?";
}

SignRegime sign_regime_from_string(const std::string& s) {
  if (s == "any") return SignRegime::Any;
  if (s == "nonneg") return SignRegime::Nonneg;
  if (s == "nonpos") return SignRegime::Nonpos;
  throw std::invalid_argument("unknown sign regime: " + s);
}

MomentFamily PlantConfig::moment_family() const { return MomentFamily::from_name(family, sigma, upper); }

SupportSet PlantedInstance::supports() const {
  SupportSet s;
  s.n = config.n;
  for (const auto& x : v) {
    IndexSet sup;
    for (int i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) sup.push_back(i + 1);
    s.members.push_back(std::move(sup));
  }
  s.canonicalize();
  return s;
}

double PlantedInstance::norm_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b) {
      const double d = std::fabs(v[a].norm() - v[b].norm());
      if (d > 1e-12) gap = std::min(gap, d);
    }
  return gap;
}

std::vector<SparseVector> PlantedInstance::sparse() const {
  std::vector<SparseVector> out;
  for (const auto& x : v) {
    SparseVector sv;
    for (int i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) sv.emplace_back(i + 1, x[i]);
    out.push_back(std::move(sv));
  }
  return out;
}

namespace {

bool separation_ok(const std::vector<Eigen::VectorXd>& v, const PlantConfig& cfg) {
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b) {
      const double na = v[a].norm(), nb = v[b].norm();
      if (std::fabs(na - nb) <= 1e-12) continue;
      if (cfg.norm_gap && std::fabs(na - nb) < *cfg.norm_gap) return false;
      if (cfg.variance_ratio) {
        const double sa = na * na + cfg.sigma * cfg.sigma, sb = nb * nb + cfg.sigma * cfg.sigma;
        if (std::max(sa, sb) < *cfg.variance_ratio * std::min(sa, sb)) return false;
      }
    }
  return true;
}

}  // namespace

PlantedInstance plant(const PlantConfig& cfg) {
  PlantedInstance inst;
  inst.config = cfg;
  if (cfg.n < 1) throw std::invalid_argument("n must be >= 1");

  if (!cfg.vectors.empty()) {
    for (const auto& sv : cfg.vectors) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.n);
      for (auto [i, val] : sv) {
        if (i < 1 || i > cfg.n) throw std::invalid_argument("vector index outside [1..n]");
        x[i - 1] = val;
      }
      inst.v.push_back(std::move(x));
    }
    inst.config.ell = static_cast<int>(inst.v.size());
    return inst;
  }

  if (cfg.k < 0 || cfg.k > cfg.n) throw std::invalid_argument("need 0 <= k <= n");
  if (cfg.ell < 1) throw std::invalid_argument("ell must be >= 1");
  if (cfg.delta > cfg.R) throw std::invalid_argument("need delta <= R");
  if (!cfg.supports.empty() && static_cast<int>(cfg.supports.size()) != cfg.ell)
    throw std::invalid_argument("explicit supports must list ell sets");
  const double hi = cfg.k > 0 ? cfg.R / std::sqrt(static_cast<double>(cfg.k)) : cfg.R;
  if (!cfg.binary && !cfg.gaussian_entries && cfg.delta > hi)
    throw Error("infeasible configuration: delta exceeds R/sqrt(k), no magnitude satisfies both bounds");

  Philox4x32 rng(cfg.seed, kTagPlant, 0);
  boost::random::uniform_real_distribution<double> mag(cfg.delta, hi);
  boost::random::normal_distribution<double> gauss(0.0, cfg.nu);
  boost::random::uniform_01<double> coin;

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    std::vector<Eigen::VectorXd> v;
    for (int j = 0; j < cfg.ell; ++j) {
      IndexSet sup;
      if (!cfg.supports.empty()) {
        sup = canonical(cfg.supports[static_cast<std::size_t>(j)]);
      } else {
        int size = cfg.k;
        if (!cfg.exact_sparsity && cfg.k > 0) size = boost::random::uniform_int_distribution<int>(1, cfg.k)(rng);
        std::vector<int> pool = range_set(1, cfg.n);
        for (int s = 0; s < size; ++s) {
          const int pick = boost::random::uniform_int_distribution<int>(s, cfg.n - 1)(rng);
          std::swap(pool[static_cast<std::size_t>(s)], pool[static_cast<std::size_t>(pick)]);
          sup.push_back(pool[static_cast<std::size_t>(s)]);
        }
        sup = canonical(std::move(sup));
      }
      Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.n);
      for (int i : sup) {
        if (i < 1 || i > cfg.n) throw std::invalid_argument("support index outside [1..n]");
        double val;
        if (cfg.binary) {
          val = 1.0;
        } else if (cfg.gaussian_entries) {
          do val = gauss(rng);
          while (val == 0.0);
        } else {
          val = mag(rng);
          const bool negative = cfg.sign == SignRegime::Nonpos || (cfg.sign == SignRegime::Any && coin(rng) < 0.5);
          if (negative) val = -val;
        }
        x[i - 1] = val;
      }
      v.push_back(std::move(x));
    }
    if (separation_ok(v, cfg)) {
      inst.v = std::move(v);
      return inst;
    }
  }
  throw Error("infeasible configuration: no draw met the norm-gap / variance-ratio constraints after " +
              std::to_string(cfg.max_attempts) + " attempts");
}

std::vector<std::string> assumption_violations(const PlantedInstance& inst) {
  std::vector<std::string> out;
  const auto& cfg = inst.config;
  for (std::size_t j = 0; j < inst.v.size(); ++j) {
    const auto& x = inst.v[j];
    const std::string who = "vector " + std::to_string(j) + ": ";
    if (x.size() != cfg.n) {
      out.push_back(who + "dimension differs from n");
      continue;
    }
    int nnz = 0;
    for (int i = 0; i < x.size(); ++i) {
      const double a = x[i];
      if (a == 0.0) continue;
      ++nnz;
      if (!cfg.gaussian_entries && std::fabs(a) < cfg.delta - 1e-12)
        out.push_back(who + "Assumption 1 (min magnitude >= delta) fails at index " + std::to_string(i + 1));
      if (cfg.sign == SignRegime::Nonneg && a < 0) out.push_back(who + "Assumption 2 (non-negative regime) fails");
      if (cfg.sign == SignRegime::Nonpos && a > 0) out.push_back(who + "Assumption 2 (non-positive regime) fails");
      if (cfg.binary && a != 1.0) out.push_back(who + "binary entries required");
      if (cfg.model == Model::MD && cfg.family == "poisson" && a < 0)
        out.push_back(who + "poisson family needs non-negative parameters");
      if (cfg.model == Model::MD && cfg.family == "uniform" && a > cfg.upper)
        out.push_back(who + "uniform family needs parameters <= upper");
    }
    if (nnz > cfg.k) out.push_back(who + "sparsity (||v||_0 <= k) fails");
    if (!cfg.binary && !cfg.gaussian_entries && x.norm() > cfg.R + 1e-12)
      out.push_back(who + "Assumption 1 (norm <= R) fails");
  }
  if (cfg.norm_gap || cfg.variance_ratio) {
    if (!separation_ok(inst.v, cfg)) {
      if (cfg.norm_gap && inst.norm_gap() < *cfg.norm_gap)
        out.push_back("Assumption 3 (norm gap >= Delta) fails");
      else
        out.push_back("variance ratio between distinct norms fails");
    }
  }
  return out;
}

// ------------------------------------------------------------ sampling

SampleStream::SampleStream(const PlantedInstance& inst, std::uint64_t seed)
    : inst_(&inst), seed_(seed), family_(MomentFamily::gaussian(1.0)) {
  if (inst.config.model == Model::MD) family_ = inst.config.moment_family();
  for (const auto& x : inst.v) {
    IndexSet s;
    for (int i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) s.push_back(i + 1);
    supp_.push_back(std::move(s));
  }
}

int SampleStream::component(std::size_t row) const {
  Philox4x32 e(seed_, kTagComponent, row);
  return boost::random::uniform_int_distribution<int>(0, inst_->ell() - 1)(e);
}

namespace {

double draw_md(const MomentFamily& f, double theta, Philox4x32& e) {
  switch (f.kind()) {
    case FamilyKind::Gaussian:
      return theta + f.param() * boost::random::normal_distribution<double>(0.0, 1.0)(e);
    case FamilyKind::Poisson:
      if (theta <= 0.0) return 0.0;
      return boost::random::poisson_distribution<int, double>(theta)(e);
    case FamilyKind::Uniform:
      return theta + (f.param() - theta) * boost::random::uniform_01<double>()(e);
  }
  return 0.0;
}

}  // namespace

double SampleStream::covariate(std::size_t row, int col) const {
  Philox4x32 e(seed_, static_cast<std::uint64_t>(col), row);
  if (inst_->config.model == Model::MD) return draw_md(family_, inst_->v[component(row)][col - 1], e);
  return boost::random::normal_distribution<double>(0.0, 1.0)(e);
}

double SampleStream::response(std::size_t row) const {
  const auto model = inst_->config.model;
  if (model == Model::MD) throw std::invalid_argument("MD samples carry no response");
  const int z = component(row);
  double dot = 0.0;
  for (int i : supp_[static_cast<std::size_t>(z)]) {
    Philox4x32 e(seed_, static_cast<std::uint64_t>(i), row);
    dot += inst_->v[z][i - 1] * boost::random::normal_distribution<double>(0.0, 1.0)(e);
  }
  Philox4x32 en(seed_, kTagNoise, row);
  const double noise = inst_->config.sigma * boost::random::normal_distribution<double>(0.0, 1.0)(en);
  if (model == Model::MLR) return dot + noise;
  return dot + noise >= 0.0 ? 1.0 : -1.0;
}

void SampleStream::fill(std::size_t r0, std::size_t r1, const IndexSet& cols, SampleMatrix& x, Eigen::VectorXd* y,
                        std::vector<int>* comp) const {
  const auto rows = static_cast<long>(r1 - r0);
  x.resize(rows, static_cast<long>(cols.size()));
  if (y) y->resize(rows);
  if (comp) comp->resize(static_cast<std::size_t>(rows));
  const bool md = inst_->config.model == Model::MD;
  for (std::size_t r = r0; r < r1; ++r) {
    const auto lr = static_cast<long>(r - r0);
    const int z = component(r);
    if (comp) (*comp)[static_cast<std::size_t>(lr)] = z;
    const auto& vz = inst_->v[static_cast<std::size_t>(z)];
    for (std::size_t c = 0; c < cols.size(); ++c) {
      Philox4x32 e(seed_, static_cast<std::uint64_t>(cols[c]), r);
      x(lr, static_cast<long>(c)) =
          md ? draw_md(family_, vz[cols[c] - 1], e) : boost::random::normal_distribution<double>(0.0, 1.0)(e);
    }
    if (y && !md) (*y)[lr] = response(r);
  }
}

namespace {

Samples sample_checked(const PlantedInstance& inst, std::size_t m, std::uint64_t seed, Model want) {
  if (inst.config.model != want)
    throw std::invalid_argument("instance model is " + to_string(inst.config.model) + ", asked for " +
                                to_string(want));
  SampleStream s(inst, seed);
  Samples out;
  out.seed = seed;
  s.fill(0, m, range_set(1, inst.n()), out.x, want == Model::MD ? nullptr : &out.y, &out.component);
  return out;
}

}  // namespace

Samples sample_md(const PlantedInstance& inst, std::size_t m, std::uint64_t seed) {
  return sample_checked(inst, m, seed, Model::MD);
}
Samples sample_mlr(const PlantedInstance& inst, std::size_t m, std::uint64_t seed) {
  return sample_checked(inst, m, seed, Model::MLR);
}
Samples sample_mlc(const PlantedInstance& inst, std::size_t m, std::uint64_t seed) {
  return sample_checked(inst, m, seed, Model::MLC);
}
Samples sample(const PlantedInstance& inst, std::size_t m, std::uint64_t seed) {
  return sample_checked(inst, m, seed, inst.config.model);
}

// ------------------------------------------------------------ oracles

OracleStats oracle_stats(const SupportSet& s, int max_size, std::size_t budget) {
  OracleStats o;
  o.universe = s.union_of_supports();
  const int ell = s.ell();
  std::size_t total = 0;
  for (int q = 0; q <= max_size; ++q) total += binomial(static_cast<int>(o.universe.size()), q);
  if (total > budget)
    throw BudgetExceeded("oracle enumeration needs " + std::to_string(total) + " subsets, budget " +
                         std::to_string(budget));
  o.occ = OccTable(ell);
  o.intersections = SubsetStatTable(StatKind::Intersection, ell);
  o.unions = SubsetStatTable(StatKind::Union, ell);
  o.membership = SubsetStatTable(StatKind::Membership, ell);
  for (const auto& c : subsets_between(o.universe, 0, max_size)) {
    std::vector<int> row(std::size_t{1} << c.size(), 0);
    for (const auto& sup : s.members) ++row[restrict_mask(sup, c)];
    o.occ.set_row(c, std::move(row));
    if (c.empty()) continue;
    const int inter = oracle_intersection(s, c);
    o.intersections.set(c, inter);
    o.unions.set(c, oracle_union(s, c));
    o.membership.set(c, inter > 0 ? 1 : 0);
  }
  o.maximal = maximal_elements(s);
  return o;
}

OracleStats oracle_stats(const PlantedInstance& inst, int max_size, std::size_t budget) {
  return oracle_stats(inst.supports(), max_size, budget);
}

}  // namespace mixrec
