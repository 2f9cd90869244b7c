#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mixrec {

// Index sets are sorted, duplicate-free, 1-based (coordinate i lives in column i-1).
using IndexSet = std::vector<int>;
// One '0'/'1' character per element of the IndexSet it is paired with, in the same order.
using Pattern = std::string;

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompleteStatistics : Error {
  IndexSet subset;
  explicit IncompleteStatistics(IndexSet s);
};

struct InconsistentStatistics : Error {
  IndexSet subset;
  InconsistentStatistics(IndexSet s, const std::string& what);
};

struct NotIdentifiable : Error {
  int p;
  int recovered;
  NotIdentifiable(int p, int recovered);
};

struct DegenerateFamily : Error {
  using Error::Error;
};

struct EmptyConditioning : Error {
  IndexSet subset;
  double event_probability;
  EmptyConditioning(IndexSet s, double prob);
};

struct AmbiguousCluster : Error {
  std::vector<IndexSet> tied;
  explicit AmbiguousCluster(std::vector<IndexSet> t);
};

struct NoConsistentMatching : Error {
  using Error::Error;
};

// An estimator failure tagged with the subset it was working on.
struct SubsetFailure : Error {
  IndexSet subset;
  SubsetFailure(IndexSet s, const std::string& what) : Error(what), subset(std::move(s)) {}
};

struct BudgetExceeded : Error {
  using Error::Error;
};

std::string to_string(const IndexSet& s);

bool is_canonical(const IndexSet& s);
IndexSet canonical(IndexSet s);
bool contains(const IndexSet& s, int i);
bool is_subset(const IndexSet& a, const IndexSet& b);
IndexSet set_union(const IndexSet& a, const IndexSet& b);
IndexSet set_minus(const IndexSet& a, const IndexSet& b);
IndexSet range_set(int lo, int hi);  // {lo, ..., hi}

// All size-s subsets of u in lexicographic order.
std::vector<IndexSet> subsets_of_size(const IndexSet& u, int s);
// Sizes lo..hi, each size block lexicographic.
std::vector<IndexSet> subsets_between(const IndexSet& u, int lo, int hi);

std::uint64_t binomial(int n, int k);

unsigned pattern_to_mask(const Pattern& a);
Pattern mask_to_pattern(unsigned mask, std::size_t len);
// Bit b set iff c[b] belongs to support.
unsigned restrict_mask(const IndexSet& support, const IndexSet& c);

int floor_log2(int x);

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v);
std::uint64_t hash_subset(std::uint64_t seed, const IndexSet& s);

}  // namespace mixrec
