#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixrec/common.hpp"
#include "mixrec/estimators.hpp"

namespace mixrec {

struct ProductStatistic {
  double estimate = 0.0;   // median of means (plain mean for |C| <= 1)
  double mean = 0.0;
  double std_error = 0.0;  // of the plain mean
};

// Statistic y^{|C|} prod_{i in C} x_i / |C|!.
ProductStatistic mlr_product_statistic(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c,
                                       int batches);

int intersection_count_mlr_binary(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                                  const EstimatorConfig& cfg = {});

enum class AlphaKind { Nonneg, Gaussian, Explicit };

struct AlphaSchedule {
  AlphaKind kind = AlphaKind::Nonneg;
  double delta = 1.0;  // nonneg: alpha_s = delta^s
  double nu = 1.0;     // gaussian regime
  double eta = 0.05;
  int ell = 1;
  int k = 1;
  std::vector<double> values;  // explicit: alpha_1, alpha_2, ...

  double operator()(int s) const;
  static AlphaSchedule parse(const std::string& spec, double delta, double nu, double eta, int ell, int k);
  std::string describe() const;
};

// |2 ell * statistic| >= alpha
bool intersection_nonempty_mlr(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                               double alpha, const EstimatorConfig& cfg = {});

// Returns true when the probed index lies in the union of supports.
using MembershipProbe = std::function<bool(int)>;

struct UnionOfSupport {
  IndexSet support;
  std::vector<double> estimates;  // E y^2 x_i^2, index i-1
  std::vector<IndexSet> clusters;
  IndexSet off_cluster;
  int probes = 0;
};

UnionOfSupport union_of_support_mlr(const SampleMatrix& x, const Eigen::VectorXd& y, int ell, double delta,
                                    const MembershipProbe& probe, const EstimatorConfig& cfg = {});

struct ScaleComponent {
  double weight = 0.0;
  double variance = 0.0;
};

struct ScaleMixture {
  std::vector<ScaleComponent> components;  // ascending variance
  double log_likelihood = 0.0;
  double bic = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct ScaleMixtureConfig {
  int max_components = 3;
  int restarts = 4;
  int max_iterations = 20000;
  double tolerance = 1e-10;  // relative log-likelihood change
  std::size_t max_bins = 500;
  std::uint64_t seed = 0;
};

struct NonConvergence : Error {
  ScaleMixture best;
  explicit NonConvergence(ScaleMixture b);
};

ScaleMixture learn_scale_mixture(std::span<const double> values, const ScaleMixtureConfig& cfg);

double mlr_general_alpha(double delta, double R, double Delta, double gamma);

struct MlrGeneralConfig {
  double delta = 1.0;
  double R = 1.0;
  double Delta = 0.5;
  double sigma = 0.0;
  double gamma = 0.05;
  std::optional<double> alpha;    // default: mlr_general_alpha(...)
  std::optional<double> epsilon;  // default: ell^-3 / 2
  int repeats = 1;                // independent perturbations; the median count wins
  std::uint64_t seed = 0;
  ScaleMixtureConfig em;
};

struct MlrGeneralEstimate {
  int count = 0;
  double matched_weight = 0.0;
  double margin = 0.0;  // distance of ell(1-w) from the rounding boundary
  double a_norm2 = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  std::vector<int> votes;  // one count per perturbation
  ScaleMixture base;
  ScaleMixture shifted;
};

// Fits the mixture of y on the first half of the rows. Reusable across subsets.
ScaleMixture fit_base_mixture(const Eigen::VectorXd& y, int ell, const MlrGeneralConfig& cfg);

MlrGeneralEstimate union_count_mlr_general(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, int ell,
                                           const MlrGeneralConfig& cfg, const ScaleMixture* base = nullptr);

}  // namespace mixrec
