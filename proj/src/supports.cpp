#include "mixrec/supports.hpp"

#include <algorithm>
#include <set>

namespace mixrec {

void SupportSet::canonicalize() {
  for (auto& m : members) m = canonical(std::move(m));
  std::sort(members.begin(), members.end());
}

std::map<IndexSet, int> SupportSet::multiplicities() const {
  std::map<IndexSet, int> out;
  for (const auto& m : members) ++out[m];
  return out;
}

IndexSet SupportSet::union_of_supports() const {
  IndexSet u;
  for (const auto& m : members) u = set_union(u, m);
  return u;
}

void SupportSet::validate() const {
  for (const auto& m : members) {
    if (!is_canonical(m)) throw std::invalid_argument("support not sorted/unique: " + to_string(m));
    for (int i : m)
      if (i < 1 || i > n)
        throw std::invalid_argument("support index " + std::to_string(i) + " outside [1.." + std::to_string(n) + "]");
  }
}

bool SupportSet::operator==(const SupportSet& o) const {
  auto a = *this, b = o;
  a.canonicalize();
  b.canonicalize();
  return a.n == b.n && a.members == b.members;
}

// ---------------------------------------------------------------- OccTable

int OccTable::get(const IndexSet& c, const Pattern& a) const {
  if (a.size() != c.size()) throw std::invalid_argument("pattern length differs from subset size");
  return get_mask(c, pattern_to_mask(a));
}

int OccTable::get_mask(const IndexSet& c, unsigned mask) const { return row(c).at(mask); }

void OccTable::set(const IndexSet& c, const Pattern& a, int count) {
  if (a.size() != c.size()) throw std::invalid_argument("pattern length differs from subset size");
  mutable_row(c)[pattern_to_mask(a)] = count;
}

void OccTable::set_row(const IndexSet& c, std::vector<int> counts) {
  if (!is_canonical(c)) throw std::invalid_argument("subset must be sorted: " + to_string(c));
  if (counts.size() != (std::size_t{1} << c.size())) throw std::invalid_argument("row needs 2^|C| counts");
  rows_[c] = std::move(counts);
}

const std::vector<int>& OccTable::row(const IndexSet& c) const {
  auto it = rows_.find(c);
  if (it == rows_.end()) throw IncompleteStatistics(c);
  return it->second;
}

std::vector<int>& OccTable::mutable_row(const IndexSet& c) {
  auto it = rows_.find(c);
  if (it == rows_.end()) {
    if (!is_canonical(c)) throw std::invalid_argument("subset must be sorted: " + to_string(c));
    it = rows_.emplace(c, std::vector<int>(std::size_t{1} << c.size(), 0)).first;
  }
  return it->second;
}

void OccTable::peel(const IndexSet& support, int w) {
  for (auto& [s, r] : rows_) {
    int& cell = r[restrict_mask(support, s)];
    cell -= w;
    if (cell < 0) throw InconsistentStatistics(s, "negative residual after peeling " + to_string(support));
  }
}

std::optional<std::string> OccTable::consistency_error() const {
  for (const auto& [c, r] : rows_) {
    long sum = 0;
    for (int v : r) {
      if (v < 0 || v > ell_) return "count out of range at " + to_string(c);
      sum += v;
    }
    if (sum != ell_) return "row " + to_string(c) + " sums to " + std::to_string(sum);
  }
  // refinement additivity between levels that are both present
  for (const auto& [d, rd] : rows_) {
    for (std::size_t pos = 0; pos < d.size(); ++pos) {
      IndexSet c = d;
      c.erase(c.begin() + static_cast<long>(pos));
      auto it = rows_.find(c);
      if (it == rows_.end()) continue;
      const auto& rc = it->second;
      for (unsigned mask = 0; mask < rc.size(); ++mask) {
        unsigned low = mask & ((1u << pos) - 1u);
        unsigned high = mask >> pos;
        unsigned m0 = low | (high << (pos + 1));
        unsigned m1 = m0 | (1u << pos);
        if (rc[mask] != rd[m0] + rd[m1])
          return "refinement of " + to_string(c) + " by " + std::to_string(d[pos]) + " does not add up";
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------- SubsetStatTable

std::string to_string(StatKind k) {
  switch (k) {
    case StatKind::Intersection: return "intersection-count";
    case StatKind::Union: return "union-count";
    case StatKind::Membership: return "membership-indicator";
  }
  return "?";
}

StatKind stat_kind_from_string(const std::string& s) {
  if (s == "intersection-count") return StatKind::Intersection;
  if (s == "union-count") return StatKind::Union;
  if (s == "membership-indicator") return StatKind::Membership;
  throw std::invalid_argument("unknown statistic kind: " + s);
}

bool SubsetStatTable::contains(const IndexSet& c) const { return c.empty() || entries_.count(c) != 0; }

int SubsetStatTable::get(const IndexSet& c) const {
  if (c.empty()) {
    switch (kind_) {
      case StatKind::Intersection: return ell_;
      case StatKind::Union: return 0;
      case StatKind::Membership: return 1;
    }
  }
  auto it = entries_.find(c);
  if (it == entries_.end()) throw IncompleteStatistics(c);
  return it->second;
}

void SubsetStatTable::set(const IndexSet& c, int v) {
  if (!is_canonical(c)) throw std::invalid_argument("subset must be sorted: " + to_string(c));
  if (kind_ == StatKind::Membership && v != 0 && v != 1) throw std::invalid_argument("membership must be 0/1");
  entries_[c] = v;
}

std::optional<std::string> SubsetStatTable::consistency_error() const {
  const int hi = kind_ == StatKind::Membership ? 1 : ell_;
  for (const auto& [c, v] : entries_)
    if (v < 0 || v > hi) return "value out of range at " + to_string(c);
  for (const auto& [d, vd] : entries_) {
    for (std::size_t pos = 0; pos < d.size(); ++pos) {
      IndexSet c = d;
      c.erase(c.begin() + static_cast<long>(pos));
      if (!contains(c)) continue;
      int vc = get(c);
      bool ok = kind_ == StatKind::Union ? vd >= vc : vd <= vc;
      if (!ok) return "monotonicity broken between " + to_string(c) + " and " + to_string(d);
    }
  }
  return std::nullopt;
}

// ------------------------------------------------------------ conversions

int occ_from_intersections(const SubsetStatTable& inter, const IndexSet& c, const Pattern& a) {
  if (inter.kind() != StatKind::Intersection) throw std::invalid_argument("need an intersection-count table");
  if (a.size() != c.size()) throw std::invalid_argument("pattern length differs from subset size");
  IndexSet c1, c0;
  for (std::size_t b = 0; b < c.size(); ++b) (a[b] == '1' ? c1 : c0).push_back(c[b]);
  const unsigned full = 1u << c0.size();
  long total = 0;
  for (unsigned sub = 0; sub < full; ++sub) {
    IndexSet d = c1;
    int bits = 0;
    for (std::size_t b = 0; b < c0.size(); ++b)
      if (sub & (1u << b)) {
        d.push_back(c0[b]);
        ++bits;
      }
    std::sort(d.begin(), d.end());
    const long v = inter.get(d);
    total += (bits % 2 ? -v : v);
  }
  return static_cast<int>(total);
}

int intersections_from_unions(const SubsetStatTable& unions, const IndexSet& c) {
  if (unions.kind() != StatKind::Union) throw std::invalid_argument("need a union-count table");
  if (c.empty()) return unions.ell();
  const unsigned full = 1u << c.size();
  long total = 0;
  for (unsigned sub = 1; sub < full; ++sub) {
    IndexSet d;
    for (std::size_t b = 0; b < c.size(); ++b)
      if (sub & (1u << b)) d.push_back(c[b]);
    const long v = unions.get(d);
    total += (d.size() % 2 ? v : -v);
  }
  if (total < 0 || total > unions.ell())
    throw InconsistentStatistics(c, "inverted intersection count " + std::to_string(total) + " outside [0," +
                                        std::to_string(unions.ell()) + "]");
  return static_cast<int>(total);
}

SubsetStatTable intersection_table_from_unions(const SubsetStatTable& unions) {
  SubsetStatTable out(StatKind::Intersection, unions.ell());
  for (const auto& [c, v] : unions.entries()) out.set(c, intersections_from_unions(unions, c));
  return out;
}

SubsetStatTable membership_from_intersections(const SubsetStatTable& inter) {
  SubsetStatTable out(StatKind::Membership, inter.ell());
  for (const auto& [c, v] : inter.entries()) out.set(c, v > 0 ? 1 : 0);
  return out;
}

std::vector<int> decoding_sizes(int ell, int universe_size) {
  const int p = std::min(floor_log2(ell), universe_size);
  std::vector<int> sizes{p};
  if (p + 1 <= universe_size) sizes.push_back(p + 1);
  return sizes;
}

OccTable build_occ_table(const SubsetStatTable& inter, const IndexSet& universe, const std::vector<int>& sizes) {
  OccTable occ(inter.ell());
  for (int s : sizes) {
    for (const auto& c : subsets_of_size(universe, s)) {
      std::vector<int> r(std::size_t{1} << c.size());
      for (unsigned mask = 0; mask < r.size(); ++mask)
        r[mask] = occ_from_intersections(inter, c, mask_to_pattern(mask, c.size()));
      occ.set_row(c, std::move(r));
    }
  }
  return occ;
}

// ------------------------------------------------------------- decoding

SupportSet recover_supports(const OccTable& occ, const IndexSet& universe, int n) {
  const int ell = occ.ell();
  if (ell < 1) throw std::invalid_argument("ell must be >= 1");
  if (!is_canonical(universe)) throw std::invalid_argument("universe must be sorted");
  const int p = std::min(floor_log2(ell), static_cast<int>(universe.size()));

  for (const auto& [c, r] : occ.rows()) {
    long sum = 0;
    for (int v : r) {
      if (v < 0 || v > ell) throw InconsistentStatistics(c, "occ count out of [0,ell]");
      sum += v;
    }
    if (sum != ell) throw InconsistentStatistics(c, "occ row sums to " + std::to_string(sum));
  }

  OccTable res = occ;
  SupportSet out;
  out.n = n;
  int count = 0;
  const auto candidates = subsets_of_size(universe, p);

  while (count < ell) {
    bool found = false;
    for (const auto& c : candidates) {
      const std::vector<int> crow = res.row(c);
      const IndexSet rest = set_minus(universe, c);
      for (unsigned mask = 0; mask < crow.size() && !found; ++mask) {
        const int w = crow[mask];
        if (w <= 0) continue;
        IndexSet supp;
        for (std::size_t b = 0; b < c.size(); ++b)
          if (mask & (1u << b)) supp.push_back(c[b]);
        bool ok = true;
        for (int j : rest) {
          IndexSet d = c;
          auto at = std::lower_bound(d.begin(), d.end(), j);
          const unsigned pos = static_cast<unsigned>(at - d.begin());
          d.insert(at, j);
          const unsigned low = mask & ((1u << pos) - 1u);
          const unsigned high = mask >> pos;
          const unsigned m1 = low | (1u << pos) | (high << (pos + 1));
          const int v = res.get_mask(d, m1);
          if (v == w) {
            supp.push_back(j);
          } else if (v != 0) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        supp = canonical(std::move(supp));
        if (w > ell - count) throw InconsistentStatistics(c, "multiplicity exceeds remaining vectors");
        res.peel(supp, w);
        for (int i = 0; i < w; ++i) out.members.push_back(supp);
        count += w;
        found = true;
      }
      if (found) break;
    }
    if (!found) throw NotIdentifiable(p, count);
  }
  out.canonicalize();
  return out;
}

IdentifiabilityCertificate is_p_identifiable(const std::vector<IndexSet>& columns, int n, int p) {
  std::vector<IndexSet> remaining;
  for (const auto& c : columns) remaining.push_back(canonical(c));
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());

  IdentifiabilityCertificate cert;
  cert.p = p;
  const auto witnesses = subsets_between(range_set(1, n), 0, p);
  while (!remaining.empty()) {
    bool peeled = false;
    for (std::size_t ci = 0; ci < remaining.size() && !peeled; ++ci) {
      for (const auto& s : witnesses) {
        const unsigned m = restrict_mask(remaining[ci], s);
        bool unique = true;
        for (std::size_t o = 0; o < remaining.size() && unique; ++o)
          if (o != ci && restrict_mask(remaining[o], s) == m) unique = false;
        if (!unique) continue;
        cert.order.push_back({remaining[ci], s, mask_to_pattern(m, s.size())});
        remaining.erase(remaining.begin() + static_cast<long>(ci));
        peeled = true;
        break;
      }
    }
    if (!peeled) return cert;
  }
  cert.identifiable = true;
  return cert;
}

std::vector<IndexSet> maximal_elements(const std::vector<IndexSet>& sets) {
  std::vector<IndexSet> uniq;
  for (const auto& s : sets) uniq.push_back(canonical(s));
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<IndexSet> out;
  for (const auto& a : uniq) {
    bool dominated = false;
    for (const auto& b : uniq)
      if (b != a && b.size() > a.size() && is_subset(a, b)) {
        dominated = true;
        break;
      }
    if (!dominated) out.push_back(a);
  }
  return out;
}

std::vector<IndexSet> maximal_elements(const SupportSet& s) { return maximal_elements(s.members); }

std::vector<IndexSet> recover_maximal(const SubsetStatTable& membership, const IndexSet& universe) {
  if (membership.kind() != StatKind::Membership) throw std::invalid_argument("need a membership table");
  const int ell = membership.ell();
  // A grown set is kept only when it sits inside some support: every subset of size <= ell must be positive.
  // Without this check two overlapping supports can merge into a spurious superset.
  std::map<IndexSet, bool> inside_memo;
  auto inside_some_support = [&](const IndexSet& u) {
    auto it = inside_memo.find(u);
    if (it != inside_memo.end()) return it->second;
    bool ok = true;
    if (static_cast<int>(u.size()) <= ell) {
      ok = membership.get(u) != 0;
    } else {
      for (const auto& d : subsets_between(u, 1, ell))
        if (!membership.get(d)) {
          ok = false;
          break;
        }
    }
    inside_memo[u] = ok;
    return ok;
  };

  std::set<IndexSet> grown;
  for (const auto& c : subsets_between(universe, 0, ell - 1)) {
    if (!membership.get(c)) continue;
    IndexSet u = c;
    for (int j : set_minus(universe, c)) {
      IndexSet d = c;
      d.insert(std::lower_bound(d.begin(), d.end(), j), j);
      if (membership.get(d)) u.push_back(j);
    }
    u = canonical(std::move(u));
    if (inside_some_support(u)) grown.insert(u);
  }
  return maximal_elements(std::vector<IndexSet>(grown.begin(), grown.end()));
}

std::optional<std::vector<IndexSet>> good_witnesses(const std::vector<IndexSet>& sets, int t) {
  std::vector<IndexSet> uniq;
  for (const auto& s : sets) uniq.push_back(canonical(s));
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<IndexSet> out;
  for (const auto& a : uniq) {
    bool found = false;
    for (const auto& w : subsets_between(a, 0, t)) {
      bool elsewhere = false;
      for (const auto& b : uniq)
        if (b != a && is_subset(w, b)) {
          elsewhere = true;
          break;
        }
      if (!elsewhere) {
        out.push_back(w);
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
  }
  return out;
}

int oracle_occ(const SupportSet& s, const IndexSet& c, const Pattern& a) {
  const unsigned m = pattern_to_mask(a);
  int k = 0;
  for (const auto& sup : s.members)
    if (restrict_mask(sup, c) == m) ++k;
  return k;
}

int oracle_intersection(const SupportSet& s, const IndexSet& c) {
  int k = 0;
  for (const auto& sup : s.members)
    if (is_subset(c, sup)) ++k;
  return k;
}

int oracle_union(const SupportSet& s, const IndexSet& c) {
  int k = 0;
  for (const auto& sup : s.members)
    if (restrict_mask(sup, c) != 0) ++k;
  return k;
}

}  // namespace mixrec
