#include "mixrec/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mixrec {

int batches_for_failure_prob(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("failure probability must lie in (0,1)");
  return static_cast<int>(std::ceil(36.0 * std::log(1.0 / gamma) - 1e-12));
}

EstimatorConfig EstimatorConfig::from_failure_prob(double gamma, double tolerance) {
  EstimatorConfig c;
  c.failure_prob = gamma;
  c.tolerance = tolerance;
  c.batches = batches_for_failure_prob(gamma);
  return c;
}

void EstimatorConfig::validate() const {
  if (batches < 1) throw std::invalid_argument("batches must be >= 1");
  if (!(failure_prob > 0.0 && failure_prob < 1.0)) throw std::invalid_argument("failure_prob must lie in (0,1)");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

std::size_t batch_of(std::size_t index, std::size_t m, int batches) {
  const std::size_t b = static_cast<std::size_t>(batches);
  const std::size_t s = m / b;
  return std::min(index / s, b - 1);
}

double lower_median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sequence");
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  return v[mid];
}

double median_of_means(std::span<const double> samples, int batches) {
  if (samples.empty()) throw std::invalid_argument("median_of_means: empty input");
  if (batches < 1) throw std::invalid_argument("median_of_means: batches must be >= 1");
  if (static_cast<std::size_t>(batches) > samples.size())
    throw std::invalid_argument("median_of_means: " + std::to_string(batches) + " batches for " +
                                std::to_string(samples.size()) + " samples");
  if (batches == 1) return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  const std::size_t m = samples.size();
  const std::size_t s = m / static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * s;
    const std::size_t hi = b == batches - 1 ? m : lo + s;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += samples[i];
    means[static_cast<std::size_t>(b)] = sum / static_cast<double>(hi - lo);
  }
  return lower_median(std::move(means));
}

BatchMeans::BatchMeans(std::size_t k, std::size_t m, int batches) : k_(k), m_(m), b_(batches) {
  if (m == 0) throw std::invalid_argument("median_of_means: empty input");
  if (batches < 1 || static_cast<std::size_t>(batches) > m)
    throw std::invalid_argument("median_of_means: need 1 <= batches <= samples");
  sums_.assign(k * static_cast<std::size_t>(batches), 0.0);
  counts_.assign(static_cast<std::size_t>(batches), m / static_cast<std::size_t>(batches));
  counts_.back() += m % static_cast<std::size_t>(batches);
}

double BatchMeans::median_of_means(std::size_t stat) const {
  std::vector<double> means(static_cast<std::size_t>(b_));
  for (std::size_t b = 0; b < means.size(); ++b) means[b] = mean(b, stat);
  if (means.size() == 1) return means[0];
  return lower_median(std::move(means));
}

double indicator_frequency(std::span<const char> events) {
  if (events.empty()) throw std::invalid_argument("indicator_frequency: empty input");
  std::size_t hits = 0;
  for (char e : events) hits += e ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

double indicator_frequency(const std::vector<bool>& events) {
  if (events.empty()) throw std::invalid_argument("indicator_frequency: empty input");
  const auto hits = std::count(events.begin(), events.end(), true);
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

}  // namespace mixrec
