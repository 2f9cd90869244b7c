#include "mixrec/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "mixrec/synth.hpp"

namespace mixrec {

ProductStatistic mlr_product_statistic(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c,
                                       int batches) {
  const auto m = static_cast<std::size_t>(x.rows());
  if (m == 0) throw std::invalid_argument("mlr statistic: empty samples");
  if (static_cast<std::size_t>(y.size()) != m) throw std::invalid_argument("mlr statistic: x and y lengths differ");
  std::vector<double> vals(m);
  const int s = static_cast<int>(c.size());
  // the surviving monomial carries a multinomial factor |C|!; divide it out so the mean is sum_v prod v_i / ell
  const double fact = std::tgamma(s + 1.0);
  for (std::size_t r = 0; r < m; ++r) {
    const auto lr = static_cast<long>(r);
    double v = std::pow(y[lr], s) / fact;
    for (int i : c) v *= x(lr, i - 1);
    vals[r] = v;
  }
  ProductStatistic out;
  out.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double v : vals) ss += (v - out.mean) * (v - out.mean);
  out.std_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
  // heavy-tail guard for products of two or more covariates
  out.estimate = (s >= 2 && batches > 1) ? median_of_means(vals, batches) : out.mean;
  return out;
}

int intersection_count_mlr_binary(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                                  const EstimatorConfig& cfg) {
  if (c.empty()) return ell;
  const auto st = mlr_product_statistic(x, y, c, cfg.batches);
  const double scaled = std::clamp(ell * st.estimate, 0.0, static_cast<double>(ell));
  return static_cast<int>(std::lround(scaled));
}

double AlphaSchedule::operator()(int s) const {
  if (s < 1) throw std::invalid_argument("alpha schedule needs |C| >= 1");
  switch (kind) {
    case AlphaKind::Nonneg: return std::pow(delta, s);
    case AlphaKind::Gaussian: {
      const double ds = std::sqrt(M_PI / 8.0) * nu * eta / (ell * s * std::pow(static_cast<double>(ell) * k, s));
      return std::pow(ds, s);
    }
    case AlphaKind::Explicit:
      if (static_cast<std::size_t>(s) > values.size())
        throw std::invalid_argument("explicit alpha schedule has no value for |C|=" + std::to_string(s));
      return values[static_cast<std::size_t>(s) - 1];
  }
  return 0.0;
}

AlphaSchedule AlphaSchedule::parse(const std::string& spec, double delta, double nu, double eta, int ell, int k) {
  AlphaSchedule a;
  a.delta = delta;
  a.nu = nu;
  a.eta = eta;
  a.ell = ell;
  a.k = k;
  if (spec == "nonneg") {
    a.kind = AlphaKind::Nonneg;
  } else if (spec == "gaussian") {
    a.kind = AlphaKind::Gaussian;
  } else if (spec.rfind("explicit:", 0) == 0) {
    a.kind = AlphaKind::Explicit;
    std::stringstream ss(spec.substr(9));
    std::string tok;
    while (std::getline(ss, tok, ',')) a.values.push_back(std::stod(tok));
    if (a.values.empty()) throw std::invalid_argument("explicit alpha schedule needs values");
  } else {
    throw std::invalid_argument("unknown alpha schedule: " + spec);
  }
  return a;
}

std::string AlphaSchedule::describe() const {
  switch (kind) {
    case AlphaKind::Nonneg: return "nonneg";
    case AlphaKind::Gaussian: return "gaussian";
    case AlphaKind::Explicit: {
      std::string s = "explicit:";
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ",";
        std::ostringstream os;
        os << values[i];
        s += os.str();
      }
      return s;
    }
  }
  return "?";
}

bool intersection_nonempty_mlr(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                               double alpha, const EstimatorConfig& cfg) {
  if (!(alpha > 0.0)) throw std::invalid_argument("intersection_nonempty_mlr: alpha must be positive");
  if (c.empty()) return true;
  const auto st = mlr_product_statistic(x, y, c, cfg.batches);
  // the sum over vectors may be negative outside the non-negative regime, so test its magnitude
  return std::fabs(2.0 * ell * st.estimate) >= alpha;
}

UnionOfSupport union_of_support_mlr(const SampleMatrix& x, const Eigen::VectorXd& y, int ell, double delta,
                                    const MembershipProbe& probe, const EstimatorConfig& cfg) {
  const int n = static_cast<int>(x.cols());
  const auto m = static_cast<std::size_t>(x.rows());
  if (m == 0) throw std::invalid_argument("union_of_support_mlr: empty samples");
  UnionOfSupport out;
  std::vector<double> vals(m);
  for (int i = 1; i <= n; ++i) {
    for (std::size_t r = 0; r < m; ++r) {
      const double t = y[static_cast<long>(r)] * x(static_cast<long>(r), i - 1);
      vals[r] = t * t;
    }
    out.estimates.push_back(median_of_means(vals, cfg.batches));
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return out.estimates[a - 1] < out.estimates[b - 1]; });
  const double link = delta * delta / ell;
  IndexSet cur;
  for (std::size_t q = 0; q < order.size(); ++q) {
    if (q > 0 && out.estimates[order[q] - 1] - out.estimates[order[q - 1] - 1] > link) {
      out.clusters.push_back(canonical(cur));
      cur.clear();
    }
    cur.push_back(order[q]);
  }
  if (!cur.empty()) out.clusters.push_back(canonical(cur));

  std::size_t largest = 0;
  for (const auto& cl : out.clusters) largest = std::max(largest, cl.size());
  std::vector<IndexSet> tied;
  for (const auto& cl : out.clusters)
    if (cl.size() == largest) tied.push_back(cl);
  if (tied.size() > 1) throw AmbiguousCluster(tied);

  IndexSet off = tied.front();
  if (2 * off.size() > static_cast<std::size_t>(n) && probe) {
    ++out.probes;
    if (probe(off.front())) {
      // the big cluster is inside the union; the off-support candidates sit at the lowest estimates
      const IndexSet& lowest = out.clusters.front();
      off.clear();
      if (lowest != tied.front()) {
        ++out.probes;
        if (!probe(lowest.front())) off = lowest;
      }
    }
  }
  out.off_cluster = off;
  out.support = set_minus(range_set(1, n), off);
  return out;
}

// ------------------------------------------------------------ scale mixtures

NonConvergence::NonConvergence(ScaleMixture b)
    : Error("scale-mixture EM did not converge within the iteration budget"), best(std::move(b)) {}

namespace {

struct Binned {
  std::vector<double> s;  // representative squared value
  std::vector<double> w;  // count
  double total = 0.0;
};

Binned bin_squares(std::span<const double> values, std::size_t max_bins) {
  Binned b;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = values[i] * values[i];
  b.total = static_cast<double>(sq.size());
  if (sq.size() <= max_bins) {
    b.s = sq;
    b.w.assign(sq.size(), 1.0);
    return b;
  }
  // log-spaced bins; the per-bin mean of s keeps the M-step sufficient statistic exact
  const double tiny = 1e-300;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double s : sq) {
    const double l = std::log(std::max(s, tiny));
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  const double width = std::max((hi - lo) / static_cast<double>(max_bins), 1e-12);
  std::vector<double> sum(max_bins + 1, 0.0), cnt(max_bins + 1, 0.0);
  for (double s : sq) {
    auto k = static_cast<std::size_t>((std::log(std::max(s, tiny)) - lo) / width);
    k = std::min(k, max_bins);
    sum[k] += s;
    cnt[k] += 1.0;
  }
  for (std::size_t k = 0; k <= max_bins; ++k)
    if (cnt[k] > 0) {
      b.s.push_back(sum[k] / cnt[k]);
      b.w.push_back(cnt[k]);
    }
  return b;
}

ScaleMixture run_em(const Binned& d, std::vector<double> w, std::vector<double> v, const ScaleMixtureConfig& cfg,
                    double floor) {
  const std::size_t K = w.size();
  const double log2pi = std::log(2.0 * M_PI);
  std::vector<double> lp(K), W(K), S(K);
  double prev = -std::numeric_limits<double>::infinity();
  ScaleMixture out;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    std::fill(W.begin(), W.end(), 0.0);
    std::fill(S.begin(), S.end(), 0.0);
    double ll = 0.0;
    for (std::size_t b = 0; b < d.s.size(); ++b) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        lp[k] = std::log(w[k]) - 0.5 * (log2pi + std::log(v[k])) - d.s[b] / (2.0 * v[k]);
        mx = std::max(mx, lp[k]);
      }
      double z = 0.0;
      for (std::size_t k = 0; k < K; ++k) z += std::exp(lp[k] - mx);
      const double lb = mx + std::log(z);
      ll += d.w[b] * lb;
      for (std::size_t k = 0; k < K; ++k) {
        const double r = d.w[b] * std::exp(lp[k] - lb);
        W[k] += r;
        S[k] += r * d.s[b];
      }
    }
    out.iterations = it;
    out.log_likelihood = ll;
    for (std::size_t k = 0; k < K; ++k) {
      w[k] = std::max(W[k] / d.total, 1e-300);
      if (W[k] > 1e-12) v[k] = std::max(S[k] / W[k], floor);
    }
    if (std::fabs(ll - prev) <= cfg.tolerance * std::fabs(ll)) {
      out.converged = true;
      break;
    }
    prev = ll;
  }
  for (std::size_t k = 0; k < K; ++k) out.components.push_back({w[k], v[k]});
  std::sort(out.components.begin(), out.components.end(),
            [](const ScaleComponent& a, const ScaleComponent& b) { return a.variance < b.variance; });
  const double params = 2.0 * static_cast<double>(K) - 1.0;
  out.bic = -2.0 * out.log_likelihood + params * std::log(d.total);
  return out;
}

}  // namespace

ScaleMixture learn_scale_mixture(std::span<const double> values, const ScaleMixtureConfig& cfg) {
  if (values.empty()) throw std::invalid_argument("learn_scale_mixture: empty input");
  if (cfg.max_components < 1) throw std::invalid_argument("learn_scale_mixture: max_components must be >= 1");
  const Binned d = bin_squares(values, cfg.max_bins);
  double mean_s = 0.0;
  for (std::size_t b = 0; b < d.s.size(); ++b) mean_s += d.w[b] * d.s[b];
  mean_s /= d.total;
  const double floor = std::max(mean_s * 1e-10, 1e-300);

  // cumulative weights for quantile-slice initialisation (bins are ordered by s when binned; sort otherwise)
  std::vector<std::size_t> idx(d.s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d.s[a] < d.s[b]; });

  ScaleMixture best_overall;
  bool have = false;
  for (int K = 1; K <= cfg.max_components; ++K) {
    std::vector<double> base_v(static_cast<std::size_t>(K), 0.0), base_cnt(static_cast<std::size_t>(K), 0.0);
    double acc = 0.0;
    for (std::size_t q : idx) {
      auto k = static_cast<std::size_t>(acc / d.total * K);
      k = std::min(k, static_cast<std::size_t>(K - 1));
      base_v[k] += d.w[q] * d.s[q];
      base_cnt[k] += d.w[q];
      acc += d.w[q];
    }
    for (int k = 0; k < K; ++k)
      base_v[k] = base_cnt[k] > 0 ? std::max(base_v[k] / base_cnt[k], floor) : mean_s;

    ScaleMixture best_k;
    bool have_k = false;
    for (int r = 0; r < cfg.restarts; ++r) {
      std::vector<double> w(static_cast<std::size_t>(K), 1.0 / K), v = base_v;
      if (r > 0) {
        Philox4x32 rng(cfg.seed, static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(r));
        boost::random::normal_distribution<double> g(0.0, 0.7);
        boost::random::uniform_real_distribution<double> u(0.5, 1.5);
        double tw = 0.0;
        for (int k = 0; k < K; ++k) {
          v[k] = std::max(v[k] * std::exp(g(rng)), floor);
          w[k] = u(rng);
          tw += w[k];
        }
        for (auto& x : w) x /= tw;
      }
      auto fit = run_em(d, w, v, cfg, floor);
      if (!have_k || fit.log_likelihood > best_k.log_likelihood) {
        best_k = std::move(fit);
        have_k = true;
      }
      if (K == 1) break;  // single component has a closed form; restarts add nothing
    }
    if (!have || best_k.bic < best_overall.bic) {
      best_overall = std::move(best_k);
      have = true;
    }
  }
  if (!best_overall.converged) throw NonConvergence(best_overall);
  return best_overall;
}

double mlr_general_alpha(double delta, double R, double Delta, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
  return 0.5 * (delta / (2.0 * R * std::sqrt(std::log(1.0 / gamma)))) * std::min(Delta, 0.5);
}

ScaleMixture fit_base_mixture(const Eigen::VectorXd& y, int ell, const MlrGeneralConfig& cfg) {
  const auto half = static_cast<std::size_t>(y.size()) / 2;
  if (half == 0) throw std::invalid_argument("union_count_mlr_general: need at least two samples");
  auto em = cfg.em;
  em.max_components = ell;
  return learn_scale_mixture(std::span<const double>(y.data(), half), em);
}

namespace {

// One perturbation draw: fit the shifted half and match it against the base fit.
MlrGeneralEstimate one_draw(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                            const MlrGeneralConfig& cfg, const ScaleMixture& base, std::uint64_t draw) {
  const auto m = static_cast<std::size_t>(y.size());
  const std::size_t half = m / 2;
  MlrGeneralEstimate e;
  e.alpha = cfg.alpha ? *cfg.alpha : mlr_general_alpha(cfg.delta, cfg.R, cfg.Delta, cfg.gamma);
  e.epsilon = cfg.epsilon ? *cfg.epsilon : 0.5 / std::pow(static_cast<double>(ell), 3);
  e.base = base;

  Philox4x32 rng(hash_subset(cfg.seed, c), 0xA11CEu, draw);
  boost::random::normal_distribution<double> g(0.0, e.alpha);
  std::vector<double> a(c.size());
  for (auto& ai : a) {
    ai = g(rng);
    e.a_norm2 += ai * ai;
  }
  std::vector<double> shifted(m - half);
  for (std::size_t r = half; r < m; ++r) {
    const auto lr = static_cast<long>(r);
    double v = y[lr];
    for (std::size_t q = 0; q < c.size(); ++q) v += a[q] * x(lr, c[q] - 1);
    shifted[r - half] = v;
  }
  auto em = cfg.em;
  em.max_components = ell;
  em.seed = hash_combine(cfg.em.seed, 1 + draw);
  e.shifted = learn_scale_mixture(shifted, em);
  if (e.base.components.empty() || e.shifted.components.empty())
    throw NoConsistentMatching("no consistent matching: a fitted mixture has no components");

  struct Edge {
    double gap;
    std::size_t left, right;
  };
  std::vector<Edge> edges;
  for (std::size_t l = 0; l < e.base.components.size(); ++l)
    for (std::size_t r = 0; r < e.shifted.components.size(); ++r) {
      const double gap =
          std::fabs(e.shifted.components[r].variance - e.a_norm2 - e.base.components[l].variance);
      if (gap <= e.epsilon) edges.push_back({gap, l, r});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& p, const Edge& q) { return p.gap < q.gap; });
  std::vector<char> left_used(e.base.components.size(), 0), right_used(e.shifted.components.size(), 0);
  for (const auto& ed : edges) {
    if (left_used[ed.left] || right_used[ed.right]) continue;
    left_used[ed.left] = right_used[ed.right] = 1;
    e.matched_weight += e.shifted.components[ed.right].weight;
  }
  const double raw = std::clamp(ell * (1.0 - e.matched_weight), 0.0, static_cast<double>(ell));
  e.count = static_cast<int>(std::lround(raw));
  e.margin = 0.5 - std::fabs(raw - e.count);
  return e;
}

}  // namespace

MlrGeneralEstimate union_count_mlr_general(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                                           const MlrGeneralConfig& cfg, const ScaleMixture* base) {
  if (static_cast<std::size_t>(x.rows()) != static_cast<std::size_t>(y.size()))
    throw std::invalid_argument("x and y lengths differ");
  if (cfg.repeats < 1) throw std::invalid_argument("union_count_mlr_general: repeats must be >= 1");
  const ScaleMixture b = base ? *base : fit_base_mixture(y, ell, cfg);
  std::vector<MlrGeneralEstimate> runs;
  std::vector<int> votes;
  for (int r = 0; r < cfg.repeats; ++r) {
    runs.push_back(one_draw(x, y, c, ell, cfg, b, static_cast<std::uint64_t>(r)));
    votes.push_back(runs.back().count);
  }
  auto sorted = votes;
  std::sort(sorted.begin(), sorted.end());
  const int med = sorted[(sorted.size() - 1) / 2];
  // report the first draw that produced the median
  auto pick = std::find_if(runs.begin(), runs.end(), [&](const MlrGeneralEstimate& e) { return e.count == med; });
  MlrGeneralEstimate out = *pick;
  out.votes = votes;
  return out;
}

}  // namespace mixrec
