#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixrec/common.hpp"

namespace mixrec {

// Multiset of supports of the planted vectors. Duplicates encode multiplicity.
struct SupportSet {
  int n = 0;
  std::vector<IndexSet> members;

  int ell() const { return static_cast<int>(members.size()); }
  void canonicalize();  // sort members, keep duplicates
  std::map<IndexSet, int> multiplicities() const;
  IndexSet union_of_supports() const;
  void validate() const;  // throws std::invalid_argument
  bool operator==(const SupportSet& o) const;
};

// Counts stored per subset as a dense vector indexed by pattern mask.
class OccTable {
 public:
  explicit OccTable(int ell = 0) : ell_(ell) {}

  int ell() const { return ell_; }
  bool contains(const IndexSet& c) const { return rows_.count(c) != 0; }
  int get(const IndexSet& c, const Pattern& a) const;
  int get_mask(const IndexSet& c, unsigned mask) const;
  void set(const IndexSet& c, const Pattern& a, int count);
  void set_row(const IndexSet& c, std::vector<int> counts);
  const std::vector<int>& row(const IndexSet& c) const;
  std::vector<int>& mutable_row(const IndexSet& c);
  const std::map<IndexSet, std::vector<int>>& rows() const { return rows_; }
  // Remove w copies of `support` from every row.
  void peel(const IndexSet& support, int w);

  // Empty optional when rows sum to ell, counts are in range and refinements add up.
  std::optional<std::string> consistency_error() const;

 private:
  int ell_;
  std::map<IndexSet, std::vector<int>> rows_;
};

enum class StatKind { Intersection, Union, Membership };
std::string to_string(StatKind k);
StatKind stat_kind_from_string(const std::string& s);

class SubsetStatTable {
 public:
  SubsetStatTable() = default;
  SubsetStatTable(StatKind kind, int ell) : kind_(kind), ell_(ell) {}

  StatKind kind() const { return kind_; }
  int ell() const { return ell_; }
  bool contains(const IndexSet& c) const;
  // The empty set is implicit: ell for intersections, 0 for unions, true for membership.
  int get(const IndexSet& c) const;
  void set(const IndexSet& c, int v);
  const std::map<IndexSet, int>& entries() const { return entries_; }
  std::optional<std::string> consistency_error() const;

 private:
  StatKind kind_ = StatKind::Intersection;
  int ell_ = 0;
  std::map<IndexSet, int> entries_;
};

int occ_from_intersections(const SubsetStatTable& inter, const IndexSet& c, const Pattern& a);
int intersections_from_unions(const SubsetStatTable& unions, const IndexSet& c);

SubsetStatTable intersection_table_from_unions(const SubsetStatTable& unions);
SubsetStatTable membership_from_intersections(const SubsetStatTable& inter);
// Every subset of `universe` whose size appears in `sizes`.
OccTable build_occ_table(const SubsetStatTable& inter, const IndexSet& universe, const std::vector<int>& sizes);
// Sizes consumed by recover_supports for a given ell and universe size.
std::vector<int> decoding_sizes(int ell, int universe_size);

// Peeling decoder. Only subsets of `universe` are consulted; indices outside it are treated as zero.
SupportSet recover_supports(const OccTable& occ, const IndexSet& universe, int n);

struct PeelStep {
  IndexSet column;  // support of the peeled column
  IndexSet rows;    // witness subset S
  Pattern pattern;  // column restricted to S
};

struct IdentifiabilityCertificate {
  bool identifiable = false;
  int p = 0;
  std::vector<PeelStep> order;
};

// Columns are given as supports over [n]; duplicates are removed first.
IdentifiabilityCertificate is_p_identifiable(const std::vector<IndexSet>& columns, int n, int p);

std::vector<IndexSet> maximal_elements(const std::vector<IndexSet>& sets);
std::vector<IndexSet> maximal_elements(const SupportSet& s);

std::vector<IndexSet> recover_maximal(const SubsetStatTable& membership, const IndexSet& universe);

// For each set, a t-index witness inside it and inside no other set. Empty when none exists.
std::optional<std::vector<IndexSet>> good_witnesses(const std::vector<IndexSet>& sets, int t);

// Direct enumeration against a known support multiset.
int oracle_occ(const SupportSet& s, const IndexSet& c, const Pattern& a);
int oracle_intersection(const SupportSet& s, const IndexSet& c);
int oracle_union(const SupportSet& s, const IndexSet& c);

}  // namespace mixrec
