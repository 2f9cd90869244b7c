#include "mixrec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "mixrec/classifier.hpp"
#include "mixrec/moments.hpp"

namespace mixrec {

std::string to_string(Mode m) { return m == Mode::Exact ? "exact" : "maximal"; }

Mode mode_from_string(const std::string& s) {
  if (s == "exact") return Mode::Exact;
  if (s == "maximal") return Mode::Maximal;
  throw std::invalid_argument("unknown mode: " + s);
}

std::string to_string(UnionStrategy u) {
  switch (u) {
    case UnionStrategy::Default: return "default";
    case UnionStrategy::Singleton: return "singleton";
    case UnionStrategy::Cluster: return "cluster";
  }
  return "?";
}

UnionStrategy union_strategy_from_string(const std::string& s) {
  if (s == "default") return UnionStrategy::Default;
  if (s == "singleton") return UnionStrategy::Singleton;
  if (s == "cluster") return UnionStrategy::Cluster;
  throw std::invalid_argument("unknown union strategy: " + s);
}

std::uint64_t RunConfig::plant_seed() const { return hash_combine(seed, 0x504C414E54ULL); }
std::uint64_t RunConfig::sample_seed() const { return hash_combine(seed, 0x53414D504CULL); }

IndexSet StatisticSource::union_of_support(int n) {
  IndexSet all = range_set(1, n);
  std::vector<IndexSet> singles;
  for (int i : all) singles.push_back({i});
  const auto v = evaluate(singles);
  IndexSet t;
  for (std::size_t q = 0; q < all.size(); ++q)
    if (v[q] > 0) t.push_back(all[q]);
  return t;
}

namespace {

// Index-ordered parallel map over subsets; output order never depends on scheduling.
// The lowest failing index wins so error reports stay deterministic too.
template <class F>
void parallel_for(const std::vector<IndexSet>& subsets, F&& f) {
  const std::size_t count = subsets.size();
  std::size_t bad = count;
  std::exception_ptr failure;
  std::mutex mu;
  auto guarded = [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (i < bad) {
        bad = i;
        failure = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw == 1 || count < 2) {
    for (std::size_t i = 0; i < count && bad == count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(hw, count); ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) guarded(i);
      });
    for (auto& th : pool) th.join();
  }
  if (!failure) return;
  try {
    std::rethrow_exception(failure);
  } catch (const EmptyConditioning&) {
    throw;
  } catch (const std::exception& e) {
    throw SubsetFailure(subsets[bad], e.what());
  }
}

class OracleSource : public StatisticSource {
 public:
  OracleSource(SupportSet s, StatKind k) : s_(std::move(s)), k_(k) {}
  StatKind kind() const override { return k_; }
  std::vector<int> evaluate(const std::vector<IndexSet>& subsets) override {
    std::vector<int> out;
    for (const auto& c : subsets) {
      switch (k_) {
        case StatKind::Intersection: out.push_back(oracle_intersection(s_, c)); break;
        case StatKind::Union: out.push_back(oracle_union(s_, c)); break;
        case StatKind::Membership: out.push_back(oracle_intersection(s_, c) > 0 ? 1 : 0); break;
      }
    }
    return out;
  }

 private:
  SupportSet s_;
  StatKind k_;
};

class MdSource : public StatisticSource {
 public:
  MdSource(const PlantedInstance& inst, std::uint64_t seed, std::size_t m, int batches, double frac, StatKind k)
      : stream_(inst, seed), family_(inst.config.moment_family()), ell_(inst.ell()), delta_(inst.config.delta),
        m_(m), batches_(batches), frac_(frac), k_(k) {}
  StatKind kind() const override { return k_; }
  std::size_t samples_used() const override { return m_; }

  std::vector<int> evaluate(const std::vector<IndexSet>& subsets) override {
    const int zcap = k_ == StatKind::Membership ? 2 : 2 * ell_;
    IndexSet cols;
    for (const auto& c : subsets) cols = set_union(cols, c);
    std::vector<std::vector<int>> pos(subsets.size());
    std::vector<MomentAccumulator> acc;
    for (std::size_t q = 0; q < subsets.size(); ++q) {
      for (int i : subsets[q]) pos[q].push_back(static_cast<int>(std::lower_bound(cols.begin(), cols.end(), i) - cols.begin()));
      acc.emplace_back(subsets[q], uniform_index(subsets[q].size(), zcap), m_, batches_);
    }
    const std::size_t chunk = 8192;
    SampleMatrix x;
    std::vector<double> xc;
    for (std::size_t r0 = 0; r0 < m_; r0 += chunk) {
      const std::size_t r1 = std::min(m_, r0 + chunk);
      stream_.fill(r0, r1, cols, x, nullptr, nullptr);
      for (std::size_t q = 0; q < subsets.size(); ++q) {
        xc.resize(pos[q].size());
        for (std::size_t r = r0; r < r1; ++r) {
          const auto lr = static_cast<long>(r - r0);
          for (std::size_t k = 0; k < pos[q].size(); ++k) xc[k] = x(lr, pos[q][k]);
          acc[q].add_row(r, xc.data());
        }
      }
    }
    std::vector<int> out;
    for (std::size_t q = 0; q < subsets.size(); ++q) {
      const auto v = power_sums_median_of_batches(acc[q], family_, ell_);
      if (k_ == StatKind::Membership)
        out.push_back(decide_membership(v, subsets[q].size(), delta_, frac_) ? 1 : 0);
      else
        out.push_back(decide_intersection_count(v, subsets[q].size(), ell_, delta_, frac_).count);
    }
    return out;
  }

 private:
  SampleStream stream_;
  MomentFamily family_;
  int ell_;
  double delta_;
  std::size_t m_;
  int batches_;
  double frac_;
  StatKind k_;
};

// Shared materialized regression samples plus the union-of-support strategy.
class MlrSourceBase : public StatisticSource {
 public:
  MlrSourceBase(const PlantedInstance& inst, std::uint64_t seed, std::size_t m, int batches, bool cluster)
      : samples_(sample_mlr(inst, m, seed)), ell_(inst.ell()), delta_(inst.config.delta), batches_(batches),
        cluster_(cluster) {
    est_.batches = batches;
  }
  std::size_t samples_used() const override { return static_cast<std::size_t>(samples_.x.rows()); }

  IndexSet union_of_support(int n) override {
    if (!cluster_) return StatisticSource::union_of_support(n);
    auto probe = [this](int i) { return evaluate({{i}}).front() > 0; };
    return union_of_support_mlr(samples_.x, samples_.y, ell_, delta_, probe, est_).support;
  }

 protected:
  Samples samples_;
  int ell_;
  double delta_;
  int batches_;
  bool cluster_;
  EstimatorConfig est_;
};

class MlrBinarySource : public MlrSourceBase {
 public:
  using MlrSourceBase::MlrSourceBase;
  StatKind kind() const override { return StatKind::Intersection; }
  std::vector<int> evaluate(const std::vector<IndexSet>& subsets) override {
    std::vector<int> out(subsets.size());
    parallel_for(subsets, [&](std::size_t q) {
      out[q] = intersection_count_mlr_binary(samples_.x, samples_.y, subsets[q], ell_, est_);
    });
    return out;
  }
};

class MlrMembershipSource : public MlrSourceBase {
 public:
  MlrMembershipSource(const PlantedInstance& inst, std::uint64_t seed, std::size_t m, int batches, bool cluster,
                      AlphaSchedule alpha)
      : MlrSourceBase(inst, seed, m, batches, cluster), alpha_(std::move(alpha)) {}
  StatKind kind() const override { return StatKind::Membership; }
  std::vector<int> evaluate(const std::vector<IndexSet>& subsets) override {
    std::vector<int> out(subsets.size());
    parallel_for(subsets, [&](std::size_t q) {
      const auto& c = subsets[q];
      out[q] = intersection_nonempty_mlr(samples_.x, samples_.y, c, ell_, alpha_(static_cast<int>(c.size())), est_)
                   ? 1
                   : 0;
    });
    return out;
  }

 private:
  AlphaSchedule alpha_;
};

class MlrGeneralSource : public MlrSourceBase {
 public:
  MlrGeneralSource(const PlantedInstance& inst, std::uint64_t seed, std::size_t m, int batches, bool cluster,
                   MlrGeneralConfig g)
      : MlrSourceBase(inst, seed, m, batches, cluster), g_(std::move(g)) {}
  StatKind kind() const override { return StatKind::Union; }
  std::vector<int> evaluate(const std::vector<IndexSet>& subsets) override {
    if (!base_) base_ = fit_base_mixture(samples_.y, ell_, g_);
    std::vector<int> out(subsets.size());
    parallel_for(subsets, [&](std::size_t q) {
      out[q] = union_count_mlr_general(samples_.x, samples_.y, subsets[q], ell_, g_, &*base_).count;
    });
    return out;
  }

 private:
  MlrGeneralConfig g_;
  std::optional<ScaleMixture> base_;
};

class MlcSource : public StatisticSource {
 public:
  MlcSource(const PlantedInstance& inst, std::uint64_t seed, double a, std::size_t m0, std::size_t cap)
      : stream_(inst, seed), ell_(inst.ell()), a_(a), m0_(m0), cap_(cap), regime_(inst.config.sign) {}
  StatKind kind() const override { return StatKind::Union; }
  std::size_t samples_used() const override { return used_; }
  std::vector<int> evaluate(const std::vector<IndexSet>& subsets) override {
    std::vector<int> out(subsets.size());
    std::vector<std::size_t> drawn(subsets.size());
    parallel_for(subsets, [&](std::size_t q) {
      // disjoint row ranges per subset: the high 24 bits come from the subset hash
      const std::size_t first = (hash_subset(0x4D4C43, subsets[q]) & 0xFFFFFFull) << 40;
      auto batch = collect_conditioned(stream_, first, subsets[q], a_, m0_, cap_, regime_);
      drawn[q] = batch.drawn;
      out[q] = union_count_mlc(batch.x, batch.y, subsets[q], a_, ell_).count;
    });
    for (auto d : drawn) used_ += d;
    return out;
  }

 private:
  SampleStream stream_;
  int ell_;
  double a_;
  std::size_t m0_, cap_;
  SignRegime regime_;
  std::size_t used_ = 0;
};

double subset_failure_budget(const RunConfig& cfg, int n, int ell) {
  const int k = std::max(cfg.plant.k, 1);
  const int bound = cfg.mode == Mode::Exact ? floor_log2(ell) + 1 : ell;
  return cfg.gamma / (n + std::pow(static_cast<double>(ell) * k, bound));
}

}  // namespace

int batches_for(const RunConfig& cfg, int n, int ell) {
  if (cfg.batches) return *cfg.batches;
  const int b = batches_for_failure_prob(subset_failure_budget(cfg, n, ell));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(b), std::max<std::size_t>(cfg.m, 1)));
}

StatKind statistic_for(const RunConfig& cfg) {
  const bool exact = cfg.mode == Mode::Exact;
  switch (cfg.model()) {
    case Model::MD: return exact ? StatKind::Intersection : StatKind::Membership;
    case Model::MLR:
      if (!exact) return StatKind::Membership;
      return cfg.plant.binary ? StatKind::Intersection : StatKind::Union;
    case Model::MLC: return StatKind::Union;
  }
  return StatKind::Intersection;
}

std::unique_ptr<StatisticSource> make_source(const RunConfig& cfg, const PlantedInstance& inst) {
  const StatKind kind = statistic_for(cfg);
  if (cfg.oracle) return std::make_unique<OracleSource>(inst.supports(), kind);
  const int n = inst.n(), ell = inst.ell();
  const int batches = batches_for(cfg, n, ell);
  const std::uint64_t seed = cfg.sample_seed();
  const auto& p = inst.config;
  switch (cfg.model()) {
    case Model::MD: return std::make_unique<MdSource>(inst, seed, cfg.m, batches, cfg.threshold_fraction, kind);
    case Model::MLR: {
      const bool cluster = cfg.union_strategy != UnionStrategy::Singleton;
      if (kind == StatKind::Membership)
        return std::make_unique<MlrMembershipSource>(
            inst, seed, cfg.m, batches, cluster,
            AlphaSchedule::parse(cfg.alpha_schedule, p.delta, p.nu, p.eta, ell, p.k));
      if (kind == StatKind::Intersection)
        return std::make_unique<MlrBinarySource>(inst, seed, cfg.m, batches, cluster);
      MlrGeneralConfig g;
      g.delta = p.delta;
      g.R = p.R;
      g.Delta = p.norm_gap.value_or(0.5);
      g.sigma = p.sigma;
      g.gamma = subset_failure_budget(cfg, n, ell);
      g.alpha = cfg.mlr_alpha;
      g.epsilon = cfg.mlr_epsilon;
      g.repeats = cfg.mlr_repeats;
      g.seed = hash_combine(seed, 0x9E);
      g.em.seed = hash_combine(seed, 0xE3);
      return std::make_unique<MlrGeneralSource>(inst, seed, cfg.m, batches, cluster, g);
    }
    case Model::MLC: {
      const double a = cfg.a_override ? *cfg.a_override : conditioning_threshold(p.R, p.sigma, p.delta, ell);
      std::size_t m0 = cfg.mlc_conditioned;
      if (m0 == 0)
        m0 = static_cast<std::size_t>(
            std::ceil(10.0 * ell * ell * std::log(1.0 / subset_failure_budget(cfg, n, ell))));
      return std::make_unique<MlcSource>(inst, seed, a, m0, cfg.mlc_cap);
    }
  }
  throw std::invalid_argument("unknown model");
}

namespace {

RecoveryReport start_report(const RunConfig& cfg, const PlantedInstance& inst) {
  RecoveryReport r;
  r.model = cfg.model();
  r.mode = cfg.mode;
  r.oracle = cfg.oracle;
  r.seed = cfg.seed;
  r.plant_seed = inst.config.seed;
  r.sample_seed = cfg.sample_seed();
  r.n = inst.n();
  r.ell = inst.ell();
  r.statistic = statistic_for(cfg);
  r.include_timing = cfg.timing;
  const auto truth = inst.supports();
  r.union_truth = truth.union_of_supports();
  if (cfg.mode == Mode::Exact)
    r.truth = truth.members;
  else
    r.truth = maximal_elements(truth);
  return r;
}

int oracle_value(const SupportSet& s, StatKind k, const IndexSet& c) {
  switch (k) {
    case StatKind::Intersection: return oracle_intersection(s, c);
    case StatKind::Union: return oracle_union(s, c);
    case StatKind::Membership: return oracle_intersection(s, c) > 0 ? 1 : 0;
  }
  return 0;
}

void record_error(RecoveryReport& r, const std::string& stage, const std::exception& e) {
  StageError err{stage, {}, false, e.what()};
  if (auto* inc = dynamic_cast<const IncompleteStatistics*>(&e)) {
    err.subset = inc->subset;
    err.has_subset = true;
  } else if (auto* bad = dynamic_cast<const InconsistentStatistics*>(&e)) {
    err.subset = bad->subset;
    err.has_subset = true;
  } else if (auto* sub = dynamic_cast<const SubsetFailure*>(&e)) {
    err.subset = sub->subset;
    err.has_subset = true;
  } else if (auto* empty = dynamic_cast<const EmptyConditioning*>(&e)) {
    err.subset = empty->subset;
    err.has_subset = true;
  }
  r.error = err;
}

// Runs stages 1 and 2; returns the statistic table, or records the error.
std::optional<SubsetStatTable> collect(RecoveryReport& r, StatisticSource& src, int max_size, int ell,
                                       const SupportSet& truth) {
  std::string stage = "union";
  try {
    r.union_estimate = src.union_of_support(r.n);
    stage = "subsets";
    const auto subsets = subsets_between(r.union_estimate, 1, max_size);
    r.subsets_queried = subsets.size();
    const auto vals = src.evaluate(subsets);
    SubsetStatTable table(src.kind(), ell);
    for (std::size_t q = 0; q < subsets.size(); ++q) {
      table.set(subsets[q], vals[q]);
      r.diagnostics.push_back({subsets[q], vals[q], oracle_value(truth, src.kind(), subsets[q])});
    }
    return table;
  } catch (const std::exception& e) {
    record_error(r, stage, e);
  }
  return std::nullopt;
}

}  // namespace

RecoveryReport exact_recovery(const RunConfig& cfg, const PlantedInstance& inst) {
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryReport r = start_report(cfg, inst);
  const auto truth = inst.supports();
  const int ell = inst.ell();
  auto src = make_source(cfg, inst);
  const int bound = floor_log2(ell) + 1;
  auto table = collect(r, *src, bound, ell, truth);
  r.samples_used = src->samples_used();
  if (table) {
    std::string stage = "occ";
    try {
      SubsetStatTable inter = table->kind() == StatKind::Union ? intersection_table_from_unions(*table) : *table;
      const auto sizes = decoding_sizes(ell, static_cast<int>(r.union_estimate.size()));
      const OccTable occ = build_occ_table(inter, r.union_estimate, sizes);
      stage = "decode";
      const SupportSet rec = recover_supports(occ, r.union_estimate, inst.n());
      r.recovered = rec.members;
      r.exact_match = rec.members == r.truth;
    } catch (const std::exception& e) {
      record_error(r, stage, e);
    }
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RecoveryReport maximal_recovery(const RunConfig& cfg, const PlantedInstance& inst) {
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryReport r = start_report(cfg, inst);
  const auto truth = inst.supports();
  const int ell = inst.ell();
  auto src = make_source(cfg, inst);
  auto table = collect(r, *src, ell, ell, truth);
  r.samples_used = src->samples_used();
  if (table) {
    std::string stage = "membership";
    try {
      SubsetStatTable mem = *table;
      if (table->kind() == StatKind::Union) mem = membership_from_intersections(intersection_table_from_unions(*table));
      stage = "decode";
      r.recovered = recover_maximal(mem, r.union_estimate);
      r.exact_match = r.recovered == r.truth;
    } catch (const std::exception& e) {
      record_error(r, stage, e);
    }
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RecoveryReport run(const RunConfig& cfg) {
  PlantConfig pc = cfg.plant;
  if (pc.vectors.empty()) pc.seed = cfg.plant_seed();
  const PlantedInstance inst = plant(pc);
  return cfg.mode == Mode::Exact ? exact_recovery(cfg, inst) : maximal_recovery(cfg, inst);
}

std::vector<BenchRow> bench(const RunConfig& base, const std::vector<std::size_t>& ms,
                            const std::vector<std::uint64_t>& seeds) {
  std::vector<BenchRow> rows;
  for (std::size_t m : ms) {
    BenchRow row;
    row.m = m;
    for (std::uint64_t s : seeds) {
      RunConfig c = base;
      c.m = m;
      c.seed = s;
      ++row.trials;
      if (run(c).exact_match) ++row.successes;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "m,trials,successes,rate\n";
  for (const auto& r : rows) os << r.m << ',' << r.trials << ',' << r.successes << ',' << r.rate() << '\n';
  return os.str();
}

}  // namespace mixrec
