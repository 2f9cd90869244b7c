#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mixrec {

struct EstimatorConfig {
  int batches = 1;
  double failure_prob = 0.05;
  double tolerance = 0.1;

  static EstimatorConfig from_failure_prob(double gamma, double tolerance = 0.1);
  void validate() const;
};

// ceil(36 ln(1/gamma))
int batches_for_failure_prob(double gamma);

// Batch b covers [b*s, (b+1)*s) with s = m / B; the last batch absorbs the remainder.
std::size_t batch_of(std::size_t index, std::size_t m, int batches);

double lower_median(std::vector<double> v);
double median_of_means(std::span<const double> samples, int batches);

// Streaming version: K statistics accumulated row by row into B batch sums.
class BatchMeans {
 public:
  BatchMeans(std::size_t k, std::size_t m, int batches);
  std::size_t batch(std::size_t row) const { return batch_of(row, m_, b_); }
  double* sums_for(std::size_t b) { return &sums_[b * k_]; }
  void add(std::size_t row, std::size_t stat, double v) { sums_[batch(row) * k_ + stat] += v; }
  double median_of_means(std::size_t stat) const;
  double mean(std::size_t b, std::size_t stat) const { return sums_[b * k_ + stat] / static_cast<double>(counts_[b]); }
  std::size_t statistics() const { return k_; }
  int batches() const { return b_; }

 private:
  std::size_t k_, m_;
  int b_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

double indicator_frequency(std::span<const char> events);
double indicator_frequency(const std::vector<bool>& events);

}  // namespace mixrec
