#include "mixrec/classifier.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "mixrec/estimators.hpp"

namespace mixrec {

double conditioning_threshold(double R, double sigma, double delta, int ell) {
  if (!(delta > 0.0)) throw std::invalid_argument("conditioning_threshold: delta must be positive");
  if (R < 0.0 || sigma < 0.0) throw std::invalid_argument("conditioning_threshold: R and sigma must be >= 0");
  if (ell < 1) throw std::invalid_argument("conditioning_threshold: ell must be >= 1");
  const double q = 1.0 - 1.0 / (2.0 * ell);
  return std::sqrt(2.0 * (R * R + sigma * sigma)) / delta * boost::math::erf_inv(q);
}

std::vector<Band> decoding_bands(int ell) {
  if (ell < 1) throw std::invalid_argument("decoding_bands: ell must be >= 1");
  std::vector<Band> b;
  const double L = ell;
  for (int t = 0; t <= ell; ++t) {
    const double hi = 0.5 * (1.0 + t / L);
    b.push_back({hi - t / (4.0 * L * L), hi});
  }
  return b;
}

double min_band_gap(int ell) {
  const auto b = decoding_bands(ell);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < b.size(); ++t) gap = std::min(gap, b[t].lo - b[t - 1].hi);
  return gap;
}

int decode_band(double p, int ell, bool* inside) {
  const auto b = decoding_bands(ell);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= ell; ++t) {
    const double d = p < b[t].lo ? b[t].lo - p : (p > b[t].hi ? p - b[t].hi : 0.0);
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  if (inside) *inside = best_d == 0.0;
  return best;
}

MlcUnionEstimate union_count_mlc(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, double a,
                                 int ell) {
  if (x.rows() != y.size()) throw std::invalid_argument("union_count_mlc: x and y lengths differ");
  std::vector<char> positive;
  for (long r = 0; r < x.rows(); ++r) {
    bool keep = true;
    for (int j : c)
      if (!(x(r, j - 1) > a)) {
        keep = false;
        break;
      }
    if (keep) positive.push_back(y[r] > 0 ? 1 : 0);
  }
  if (positive.empty())
    throw EmptyConditioning(c, x.rows() ? 0.0 : std::numeric_limits<double>::quiet_NaN());
  MlcUnionEstimate e;
  e.conditioned = positive.size();
  e.p_hat = indicator_frequency(std::span<const char>(positive));
  e.count = decode_band(e.p_hat, ell, &e.in_band);
  return e;
}

void negate_if_nonpositive(SampleMatrix& x, SignRegime regime) {
  if (regime == SignRegime::Nonpos) x = -x;
}

ConditionedBatch collect_conditioned(const SampleStream& stream, std::size_t first_row, const IndexSet& c, double a,
                                     std::size_t m0, std::size_t cap, SignRegime regime) {
  const int n = stream.instance().n();
  const double s = regime == SignRegime::Nonpos ? -1.0 : 1.0;
  const IndexSet all = range_set(1, n);
  std::vector<std::size_t> kept;
  std::size_t drawn = 0;
  for (std::size_t r = first_row; kept.size() < m0 && drawn < cap; ++r, ++drawn) {
    bool keep = true;
    for (int j : c)
      if (!(s * stream.covariate(r, j) > a)) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(r);
  }
  ConditionedBatch out;
  out.drawn = drawn;
  out.x.resize(static_cast<long>(kept.size()), n);
  out.y.resize(static_cast<long>(kept.size()));
  SampleMatrix row;
  Eigen::VectorXd yr;
  for (std::size_t q = 0; q < kept.size(); ++q) {
    stream.fill(kept[q], kept[q] + 1, all, row, &yr, nullptr);
    out.x.row(static_cast<long>(q)) = row.row(0);
    out.y[static_cast<long>(q)] = yr[0];
  }
  negate_if_nonpositive(out.x, regime);
  return out;
}

}  // namespace mixrec
