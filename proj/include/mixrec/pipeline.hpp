#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixrec/regression.hpp"
#include "mixrec/supports.hpp"
#include "mixrec/synth.hpp"

namespace mixrec {

enum class Mode { Exact, Maximal };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

enum class UnionStrategy { Default, Singleton, Cluster };
std::string to_string(UnionStrategy u);
UnionStrategy union_strategy_from_string(const std::string& s);

struct RunConfig {
  Mode mode = Mode::Exact;
  PlantConfig plant;       // model, dimensions, noise, family all live here
  std::uint64_t seed = 1;  // root seed; plant and sample seeds are derived from it
  std::size_t m = 100000;  // raw samples (MD, MLR)
  bool oracle = false;     // substitute exact statistics for the estimators
  double gamma = 0.05;
  std::optional<int> batches;      // median-of-means batches per subset; default from the failure budget
  double threshold_fraction = 0.5;  // MD thresholds tau_t = fraction * delta^{2t|C|}
  std::string alpha_schedule = "nonneg";
  std::optional<double> a_override;  // MLC conditioning threshold
  std::size_t mlc_conditioned = 0;   // conditioned samples per subset; 0 = 10 ell^2 ln(1/gamma_subset)
  std::size_t mlc_cap = 200'000'000;
  std::optional<double> mlr_alpha;
  std::optional<double> mlr_epsilon;
  int mlr_repeats = 1;
  UnionStrategy union_strategy = UnionStrategy::Default;
  bool timing = false;  // include wall time in JSON (breaks byte-identical output)

  Model model() const { return plant.model; }
  std::uint64_t plant_seed() const;
  std::uint64_t sample_seed() const;
};

struct StageError {
  std::string stage;
  IndexSet subset;
  bool has_subset = false;
  std::string message;
};

struct SubsetDiagnostic {
  IndexSet subset;
  int estimate = 0;
  std::optional<int> oracle;
};

struct RecoveryReport {
  Model model = Model::MD;
  Mode mode = Mode::Exact;
  bool oracle = false;
  std::uint64_t seed = 0, plant_seed = 0, sample_seed = 0;
  int n = 0, ell = 0;
  StatKind statistic = StatKind::Intersection;
  IndexSet union_estimate, union_truth;
  std::vector<IndexSet> recovered, truth;  // multiset (exact) or antichain (maximal)
  bool exact_match = false;
  std::vector<SubsetDiagnostic> diagnostics;
  std::size_t samples_used = 0;
  std::size_t subsets_queried = 0;
  std::optional<StageError> error;
  double wall_seconds = 0.0;
  bool include_timing = false;
};

// Source of subset statistics for one instance: either exact, or estimated from samples.
class StatisticSource {
 public:
  virtual ~StatisticSource() = default;
  virtual StatKind kind() const = 0;
  // Stage 1. Default: positive singleton statistics.
  virtual IndexSet union_of_support(int n);
  virtual std::vector<int> evaluate(const std::vector<IndexSet>& subsets) = 0;
  virtual std::size_t samples_used() const { return 0; }
};

std::unique_ptr<StatisticSource> make_source(const RunConfig& cfg, const PlantedInstance& inst);
StatKind statistic_for(const RunConfig& cfg);
int batches_for(const RunConfig& cfg, int n, int ell);

RecoveryReport exact_recovery(const RunConfig& cfg, const PlantedInstance& inst);
RecoveryReport maximal_recovery(const RunConfig& cfg, const PlantedInstance& inst);
// Plants the instance from cfg (seeded) and dispatches on cfg.mode.
RecoveryReport run(const RunConfig& cfg);

struct BenchRow {
  std::size_t m = 0;
  int trials = 0;
  int successes = 0;
  double rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

std::vector<BenchRow> bench(const RunConfig& base, const std::vector<std::size_t>& ms,
                            const std::vector<std::uint64_t>& seeds);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace mixrec
