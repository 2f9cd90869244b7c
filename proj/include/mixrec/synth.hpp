#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixrec/common.hpp"
#include "mixrec/moments.hpp"
#include "mixrec/supports.hpp"

namespace mixrec {

// Philox4x32-10 (Salmon et al. 2011), emitting 64-bit words. The counter is (block, stream_lo, stream_hi),
// so every (stream_hi, stream_lo) pair is an independent random-access stream under the same key.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  Philox4x32(std::uint64_t key, std::uint64_t stream_hi = 0, std::uint64_t stream_lo = 0);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

enum class Model { MD, MLR, MLC };
enum class SignRegime { Any, Nonneg, Nonpos };

std::string to_string(Model m);
Model model_from_string(const std::string& s);
std::string to_string(SignRegime s);
SignRegime sign_regime_from_string(const std::string& s);

using SparseVector = std::vector<std::pair<int, double>>;  // (1-based index, value)

struct PlantConfig {
  Model model = Model::MD;
  int n = 10;
  int k = 2;
  int ell = 2;
  double delta = 1.0;
  double R = 2.0;
  double sigma = 1.0;
  std::string family = "gaussian";  // MD only
  double upper = 0.0;               // uniform family upper end
  bool binary = false;
  SignRegime sign = SignRegime::Any;
  std::optional<double> norm_gap;        // Assumption 3
  std::optional<double> variance_ratio;  // distinct ||v||^2 + sigma^2 must differ by at least this factor
  bool gaussian_entries = false;         // nonzeros N(0, nu^2)
  double nu = 1.0;
  double eta = 0.05;
  bool exact_sparsity = true;  // every vector has exactly k nonzeros
  std::vector<IndexSet> supports;        // optional fixed supports
  std::vector<SparseVector> vectors;     // optional fixed vectors (overrides everything above)
  std::uint64_t seed = 1;
  int max_attempts = 10000;

  MomentFamily moment_family() const;
};

struct PlantedInstance {
  PlantConfig config;
  std::vector<Eigen::VectorXd> v;

  int n() const { return config.n; }
  int ell() const { return static_cast<int>(v.size()); }
  SupportSet supports() const;
  double norm_gap() const;  // smallest difference between distinct norms, +inf when all equal
  std::vector<SparseVector> sparse() const;
};

PlantedInstance plant(const PlantConfig& cfg);
// One message per violated assumption, naming it.
std::vector<std::string> assumption_violations(const PlantedInstance& inst);

struct Samples {
  SampleMatrix x;
  Eigen::VectorXd y;            // empty for MD
  std::vector<int> component;   // oracle side channel, 0-based component label
  std::uint64_t seed = 0;
};

// Element-addressable sample source: cell (row, column) always yields the same value for a given seed.
class SampleStream {
 public:
  SampleStream(const PlantedInstance& inst, std::uint64_t seed);
  const PlantedInstance& instance() const { return *inst_; }
  std::uint64_t seed() const { return seed_; }
  int component(std::size_t row) const;
  double covariate(std::size_t row, int col) const;  // col is 1-based
  double response(std::size_t row) const;            // MLR/MLC only
  // Rows [r0, r1), columns `cols`. x is resized to (r1-r0) x |cols|.
  void fill(std::size_t r0, std::size_t r1, const IndexSet& cols, SampleMatrix& x, Eigen::VectorXd* y,
            std::vector<int>* comp) const;

 private:
  const PlantedInstance* inst_;
  std::uint64_t seed_;
  MomentFamily family_;
  std::vector<IndexSet> supp_;
};

Samples sample_md(const PlantedInstance& inst, std::size_t m, std::uint64_t seed);
Samples sample_mlr(const PlantedInstance& inst, std::size_t m, std::uint64_t seed);
Samples sample_mlc(const PlantedInstance& inst, std::size_t m, std::uint64_t seed);
Samples sample(const PlantedInstance& inst, std::size_t m, std::uint64_t seed);

struct OracleStats {
  IndexSet universe;
  OccTable occ;
  SubsetStatTable intersections;
  SubsetStatTable unions;
  SubsetStatTable membership;
  std::vector<IndexSet> maximal;
};

// Exact tables over every subset of the union of supports up to max_size.
OracleStats oracle_stats(const SupportSet& s, int max_size, std::size_t budget = 2'000'000);
OracleStats oracle_stats(const PlantedInstance& inst, int max_size, std::size_t budget = 2'000'000);

}  // namespace mixrec
