#include "mixrec/common.hpp"

#include <algorithm>
#include <sstream>

namespace mixrec {

IncompleteStatistics::IncompleteStatistics(IndexSet s)
    : Error("incomplete statistics: missing entry for subset " + to_string(s)), subset(std::move(s)) {}

InconsistentStatistics::InconsistentStatistics(IndexSet s, const std::string& what)
    : Error("inconsistent statistics at subset " + to_string(s) + ": " + what), subset(std::move(s)) {}

NotIdentifiable::NotIdentifiable(int p_, int rec)
    : Error("not p-identifiable at p=" + std::to_string(p_) + " (decoded " + std::to_string(rec) +
            " vectors before getting stuck)"),
      p(p_),
      recovered(rec) {}

EmptyConditioning::EmptyConditioning(IndexSet s, double prob)
    : Error("empty conditioning event for subset " + to_string(s) +
            " (estimated probability " + std::to_string(prob) + ")"),
      subset(std::move(s)),
      event_probability(prob) {}

static std::string join_sets(const std::vector<IndexSet>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += to_string(v[i]);
  }
  return out;
}

AmbiguousCluster::AmbiguousCluster(std::vector<IndexSet> t)
    : Error("ambiguous largest cluster, tied: " + join_sets(t)), tied(std::move(t)) {}

std::string to_string(const IndexSet& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << '}';
  return os.str();
}

bool is_canonical(const IndexSet& s) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i - 1] >= s[i]) return false;
  return true;
}

IndexSet canonical(IndexSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

bool contains(const IndexSet& s, int i) { return std::binary_search(s.begin(), s.end(), i); }

bool is_subset(const IndexSet& a, const IndexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet set_minus(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet range_set(int lo, int hi) {
  IndexSet out;
  for (int i = lo; i <= hi; ++i) out.push_back(i);
  return out;
}

std::vector<IndexSet> subsets_of_size(const IndexSet& u, int s) {
  std::vector<IndexSet> out;
  const int n = static_cast<int>(u.size());
  if (s < 0 || s > n) return out;
  std::vector<int> idx(s);
  for (int i = 0; i < s; ++i) idx[i] = i;
  while (true) {
    IndexSet c(s);
    for (int i = 0; i < s; ++i) c[i] = u[idx[i]];
    out.push_back(std::move(c));
    int i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::vector<IndexSet> subsets_between(const IndexSet& u, int lo, int hi) {
  std::vector<IndexSet> out;
  for (int s = std::max(lo, 0); s <= hi && s <= static_cast<int>(u.size()); ++s) {
    auto block = subsets_of_size(u, s);
    out.insert(out.end(), std::make_move_iterator(block.begin()), std::make_move_iterator(block.end()));
  }
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

unsigned pattern_to_mask(const Pattern& a) {
  unsigned m = 0;
  for (std::size_t b = 0; b < a.size(); ++b) {
    if (a[b] == '1')
      m |= 1u << b;
    else if (a[b] != '0')
      throw std::invalid_argument("pattern must contain only 0/1: " + a);
  }
  return m;
}

Pattern mask_to_pattern(unsigned mask, std::size_t len) {
  Pattern a(len, '0');
  for (std::size_t b = 0; b < len; ++b)
    if (mask & (1u << b)) a[b] = '1';
  return a;
}

unsigned restrict_mask(const IndexSet& support, const IndexSet& c) {
  unsigned m = 0;
  for (std::size_t b = 0; b < c.size(); ++b)
    if (contains(support, c[b])) m |= 1u << b;
  return m;
}

int floor_log2(int x) {
  if (x < 1) throw std::invalid_argument("floor_log2 needs x >= 1");
  int p = 0;
  while ((2 << p) <= x) ++p;
  return p;
}

// splitmix64 finalizer
static std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) { return mix64(seed ^ mix64(v)); }

std::uint64_t hash_subset(std::uint64_t seed, const IndexSet& s) {
  std::uint64_t h = hash_combine(seed, s.size());
  for (int i : s) h = hash_combine(h, static_cast<std::uint64_t>(i));
  return h;
}

}  // namespace mixrec
