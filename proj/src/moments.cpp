#include "mixrec/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mixrec {

MomentFamily MomentFamily::gaussian(double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian family needs sigma >= 0");
  return {FamilyKind::Gaussian, sigma};
}

MomentFamily MomentFamily::poisson() { return {FamilyKind::Poisson, 0.0}; }

MomentFamily MomentFamily::uniform(double upper) { return {FamilyKind::Uniform, upper}; }

MomentFamily MomentFamily::from_name(const std::string& name, double sigma, double upper) {
  if (name == "gaussian") return gaussian(sigma);
  if (name == "poisson") return poisson();
  if (name == "uniform") return uniform(upper);
  throw std::invalid_argument("unsupported family: " + name);
}

std::string MomentFamily::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Uniform: return "uniform";
  }
  return "?";
}

std::vector<double> MomentFamily::coefficients(int t) const {
  if (t < 0) throw std::invalid_argument("moment order must be >= 0");
  std::vector<double> c(static_cast<std::size_t>(t) + 1, 0.0);
  switch (kind_) {
    case FamilyKind::Gaussian: {
      // E(theta + sigma Z)^t = sum_j C(t,j) theta^{t-j} sigma^j E Z^j,  E Z^j = (j-1)!! for even j
      double dfact = 1.0;  // (j-1)!!
      for (int j = 0; j <= t; j += 2) {
        if (j >= 2) dfact *= static_cast<double>(j - 1);
        c[static_cast<std::size_t>(t - j)] = static_cast<double>(binomial(t, j)) * std::pow(param_, j) * dfact;
      }
      break;
    }
    case FamilyKind::Poisson: {
      // Touchard polynomial: Stirling numbers of the second kind
      std::vector<std::vector<double>> s(static_cast<std::size_t>(t) + 1);
      s[0] = {1.0};
      for (int r = 1; r <= t; ++r) {
        s[r].assign(static_cast<std::size_t>(r) + 1, 0.0);
        for (int i = 1; i <= r; ++i) {
          const double prev_i = i < r ? s[r - 1][i] : 0.0;
          s[r][i] = i * prev_i + s[r - 1][i - 1];
        }
      }
      c = s[t];
      break;
    }
    case FamilyKind::Uniform: {
      // (b^{t+1} - theta^{t+1}) / ((t+1)(b - theta)) = sum_i theta^i b^{t-i} / (t+1)
      for (int i = 0; i <= t; ++i) c[i] = std::pow(param_, t - i) / (t + 1.0);
      break;
    }
  }
  return c;
}

double MomentFamily::moment(int t, double theta) const {
  const auto c = coefficients(t);
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * theta + c[i];
  return r;
}

CoefficientTable::CoefficientTable(const MomentFamily& f, int tmax) {
  for (int t = 0; t <= tmax; ++t) rows_.push_back(f.coefficients(t));
}

MultiIndex uniform_index(std::size_t c, int value) { return MultiIndex(c, value); }

std::vector<MultiIndex> multi_indices_upto(const MultiIndex& zmax) {
  std::vector<MultiIndex> all;
  MultiIndex u(zmax.size(), 0);
  bool more = true;
  while (more) {
    all.push_back(u);
    more = false;
    for (std::size_t k = u.size(); k-- > 0;) {
      if (u[k] < zmax[k]) {
        ++u[k];
        more = true;
        break;
      }
      u[k] = 0;
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const int sa = std::accumulate(a.begin(), a.end(), 0), sb = std::accumulate(b.begin(), b.end(), 0);
    if (sa != sb) return sa < sb;
    return a < b;
  });
  return all;
}

double zeta(const CoefficientTable& beta, const MultiIndex& z, const MultiIndex& u) {
  double r = 1.0;
  for (std::size_t k = 0; k < z.size(); ++k) r *= beta.beta(z[k], u[k]);
  return r;
}

// ------------------------------------------------------------ estimation

MomentAccumulator::MomentAccumulator(IndexSet c, MultiIndex zmax, std::size_t m, int batches)
    : c_(std::move(c)), zmax_(std::move(zmax)), acc_(0, 1, 1) {
  if (zmax_.size() != c_.size()) throw std::invalid_argument("zmax length must equal |C|");
  order_ = multi_indices_upto(zmax_);
  acc_ = BatchMeans(order_.size(), m, batches);
  stride_ = zmax_.empty() ? 1 : *std::max_element(zmax_.begin(), zmax_.end()) + 1;
  for (const auto& z : order_)
    for (std::size_t k = 0; k < z.size(); ++k) flat_.push_back(static_cast<int>(k) * stride_ + z[k]);
  pw_.assign(c_.size() * static_cast<std::size_t>(stride_), 1.0);
}

void MomentAccumulator::add_row(std::size_t row, const double* xc) {
  const std::size_t c = c_.size();
  for (std::size_t k = 0; k < c; ++k) {
    double* p = &pw_[k * static_cast<std::size_t>(stride_)];
    for (int e = 1; e <= zmax_[k]; ++e) p[e] = p[e - 1] * xc[k];
  }
  double* sums = acc_.sums_for(acc_.batch(row));
  const int* f = flat_.data();
  for (std::size_t q = 0; q < order_.size(); ++q) {
    double v = 1.0;
    for (std::size_t k = 0; k < c; ++k) v *= pw_[static_cast<std::size_t>(*f++)];
    sums[q] += v;
  }
}

MomentMap MomentAccumulator::estimates() const {
  MomentMap out;
  for (std::size_t q = 0; q < order_.size(); ++q) out[order_[q]] = acc_.median_of_means(q);
  // the empty product is exactly one
  out[MultiIndex(c_.size(), 0)] = 1.0;
  return out;
}

std::vector<MomentMap> MomentAccumulator::batch_estimates() const {
  std::vector<MomentMap> out(static_cast<std::size_t>(acc_.batches()));
  for (std::size_t b = 0; b < out.size(); ++b) {
    for (std::size_t q = 0; q < order_.size(); ++q) out[b][order_[q]] = acc_.mean(b, q);
    out[b][MultiIndex(c_.size(), 0)] = 1.0;
  }
  return out;
}

namespace {

MomentAccumulator accumulate(const SampleMatrix& x, const IndexSet& c, const MultiIndex& zmax,
                             const EstimatorConfig& cfg) {
  const auto m = static_cast<std::size_t>(x.rows());
  MomentAccumulator acc(c, zmax, m, cfg.batches);
  std::vector<double> xc(c.size());
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < c.size(); ++k) xc[k] = x(static_cast<long>(r), c[k] - 1);
    acc.add_row(r, xc.data());
  }
  return acc;
}

}  // namespace

MomentMap raw_moment_estimates(const SampleMatrix& x, const IndexSet& c, const MultiIndex& zmax,
                               const EstimatorConfig& cfg) {
  return accumulate(x, c, zmax, cfg).estimates();
}

double PowerSumTable::at(const MultiIndex& z) const {
  auto it = values.find(z);
  if (it == values.end()) throw std::out_of_range("power sum not computed");
  return it->second;
}

PowerSumTable power_sums_from_moments(const MomentMap& u, const MomentFamily& family, int ell,
                                      const MultiIndex& zmax) {
  const int tmax = zmax.empty() ? 0 : *std::max_element(zmax.begin(), zmax.end());
  const CoefficientTable beta(family, tmax);
  PowerSumTable out;
  for (const auto& z : multi_indices_upto(zmax)) {
    const bool zero = std::all_of(z.begin(), z.end(), [](int v) { return v == 0; });
    if (zero) {
      out.values[z] = ell;
      continue;
    }
    auto it = u.find(z);
    if (it == u.end()) throw std::invalid_argument("moment map lacks a required multi-index");
    double s = ell * it->second;
    for (const auto& w : multi_indices_upto(z)) {
      if (w == z) continue;
      s -= zeta(beta, z, w) * out.values.at(w);
    }
    const double lead = zeta(beta, z, z);
    if (lead == 0.0) throw DegenerateFamily("leading moment coefficient vanishes for family " + family.name());
    if (std::fabs(lead) < 1e-8) out.ill_conditioned.push_back(z);
    out.values[z] = s / lead;
  }
  return out;
}

PowerSumTable power_sums_median_of_batches(const MomentAccumulator& acc, const MomentFamily& family, int ell) {
  const auto batches = acc.batch_estimates();
  const MultiIndex zmax = acc.zmax();
  if (batches.size() == 1) return power_sums_from_moments(batches.front(), family, ell, zmax);
  std::vector<PowerSumTable> per;
  per.reserve(batches.size());
  for (const auto& u : batches) per.push_back(power_sums_from_moments(u, family, ell, zmax));
  PowerSumTable out = per.front();
  std::vector<double> vals(per.size());
  for (auto& [z, v] : out.values) {
    for (std::size_t b = 0; b < per.size(); ++b) vals[b] = per[b].values.at(z);
    v = lower_median(vals);
  }
  return out;
}

std::vector<double> elementary_symmetric(const std::vector<double>& p) {
  const std::size_t L = p.size();
  std::vector<double> a(L + 1, 0.0);
  a[0] = 1.0;
  for (std::size_t t = 1; t <= L; ++t) {
    double s = 0.0;
    for (std::size_t i = 1; i <= t; ++i) s += (i % 2 ? 1.0 : -1.0) * a[t - i] * p[i - 1];
    a[t] = s / static_cast<double>(t);
  }
  return {a.begin() + 1, a.end()};
}

MdCountDecision decide_intersection_count(const PowerSumTable& v, std::size_t c, int ell, double delta,
                                          double threshold_fraction) {
  MdCountDecision d;
  if (c == 0) {
    d.count = ell;
    return d;
  }
  std::vector<double> p;
  for (int q = 1; q <= ell; ++q) p.push_back(v.at(uniform_index(c, 2 * q)));
  d.a = elementary_symmetric(p);
  for (int t = 1; t <= ell; ++t) {
    const double tau = threshold_fraction * std::pow(delta, 2.0 * t * static_cast<double>(c));
    d.threshold.push_back(tau);
    if (d.a[t - 1] > tau) d.count = t;
  }
  return d;
}

bool decide_membership(const PowerSumTable& v, std::size_t c, double delta, double threshold_fraction) {
  if (c == 0) return true;
  return v.at(uniform_index(c, 2)) >= threshold_fraction * std::pow(delta, 2.0 * static_cast<double>(c));
}

int intersection_count_md(const SampleMatrix& x, const IndexSet& c, const MomentFamily& family, int ell, double delta,
                          const EstimatorConfig& cfg, double threshold_fraction) {
  if (c.empty()) return ell;
  const auto zmax = uniform_index(c.size(), 2 * ell);
  const auto v = power_sums_median_of_batches(accumulate(x, c, zmax, cfg), family, ell);
  return decide_intersection_count(v, c.size(), ell, delta, threshold_fraction).count;
}

bool intersection_nonempty_md(const SampleMatrix& x, const IndexSet& c, const MomentFamily& family, int ell,
                              double delta, const EstimatorConfig& cfg, double threshold_fraction) {
  if (c.empty()) return true;
  const auto zmax = uniform_index(c.size(), 2);
  const auto v = power_sums_median_of_batches(accumulate(x, c, zmax, cfg), family, ell);
  return decide_membership(v, c.size(), delta, threshold_fraction);
}

}  // namespace mixrec
