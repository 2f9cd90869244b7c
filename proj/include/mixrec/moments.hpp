#pragma once

#include <map>
#include <string>
#include <vector>

#include "mixrec/common.hpp"
#include "mixrec/estimators.hpp"

namespace mixrec {

enum class FamilyKind { Gaussian, Poisson, Uniform };

// One-parameter family P(theta) whose t-th raw moment is a degree-t polynomial in theta.
class MomentFamily {
 public:
  static MomentFamily gaussian(double sigma);  // N(theta, sigma^2)
  static MomentFamily poisson();               // Poisson(theta), theta >= 0
  static MomentFamily uniform(double upper);   // U[theta, upper], theta <= upper
  static MomentFamily from_name(const std::string& name, double sigma, double upper);

  FamilyKind kind() const { return kind_; }
  double param() const { return param_; }
  std::string name() const;

  // c[i] is the coefficient of theta^i in E x^t, i = 0..t
  std::vector<double> coefficients(int t) const;
  double moment(int t, double theta) const;

 private:
  MomentFamily(FamilyKind k, double p) : kind_(k), param_(p) {}
  FamilyKind kind_;
  double param_;
};

// Coefficients for t = 0..tmax, cached.
class CoefficientTable {
 public:
  CoefficientTable(const MomentFamily& f, int tmax);
  int tmax() const { return static_cast<int>(rows_.size()) - 1; }
  double beta(int t, int i) const { return rows_[t][i]; }
  const std::vector<double>& row(int t) const { return rows_[t]; }

 private:
  std::vector<std::vector<double>> rows_;
};

using MultiIndex = std::vector<int>;

MultiIndex uniform_index(std::size_t c, int value);
// All u <= zmax componentwise, ordered by total degree then lexicographically.
std::vector<MultiIndex> multi_indices_upto(const MultiIndex& zmax);
double zeta(const CoefficientTable& beta, const MultiIndex& z, const MultiIndex& u);

using MomentMap = std::map<MultiIndex, double>;

// Accumulates the products prod_i x_i^{z_i} for every z <= zmax over coordinates C, in batches.
class MomentAccumulator {
 public:
  MomentAccumulator(IndexSet c, MultiIndex zmax, std::size_t m, int batches);
  const IndexSet& subset() const { return c_; }
  const MultiIndex& zmax() const { return zmax_; }
  // xc holds the row's values at the coordinates of C, in order.
  void add_row(std::size_t row, const double* xc);
  MomentMap estimates() const;
  // Plain batch means of every moment, one map per batch.
  std::vector<MomentMap> batch_estimates() const;

 private:
  IndexSet c_;
  MultiIndex zmax_;
  std::vector<MultiIndex> order_;
  std::vector<int> flat_;  // order_ flattened for the inner loop
  BatchMeans acc_;
  std::vector<double> pw_;
  int stride_;
};

MomentMap raw_moment_estimates(const SampleMatrix& x, const IndexSet& c, const MultiIndex& zmax,
                               const EstimatorConfig& cfg);

struct PowerSumTable {
  std::map<MultiIndex, double> values;
  std::vector<MultiIndex> ill_conditioned;  // |zeta_{z,z}| < 1e-8
  double at(const MultiIndex& z) const;
};

PowerSumTable power_sums_from_moments(const MomentMap& u, const MomentFamily& family, int ell, const MultiIndex& zmax);

// The recursion is linear in U, so running it inside each batch and taking the per-entry median is
// median-of-means on the power-sum statistic itself. A median per raw moment would destroy the
// cancellation between correlated moments that the recursion depends on.
PowerSumTable power_sums_median_of_batches(const MomentAccumulator& acc, const MomentFamily& family, int ell);

// Newton's identities. Returns A_1..A_L for power sums P_1..P_L.
std::vector<double> elementary_symmetric(const std::vector<double>& p);

struct MdCountDecision {
  int count = 0;
  std::vector<double> a;          // A_1..A_ell
  std::vector<double> threshold;  // tau_1..tau_ell
};

// Largest t with A_t above tau_t = fraction * delta^{2 t |C|}.
MdCountDecision decide_intersection_count(const PowerSumTable& v, std::size_t c, int ell, double delta,
                                          double threshold_fraction = 0.5);
bool decide_membership(const PowerSumTable& v, std::size_t c, double delta, double threshold_fraction = 0.5);

int intersection_count_md(const SampleMatrix& x, const IndexSet& c, const MomentFamily& family, int ell, double delta,
                          const EstimatorConfig& cfg, double threshold_fraction = 0.5);
bool intersection_nonempty_md(const SampleMatrix& x, const IndexSet& c, const MomentFamily& family, int ell,
                              double delta, const EstimatorConfig& cfg, double threshold_fraction = 0.5);

}  // namespace mixrec
