#pragma once

#include <cstddef>
#include <vector>

#include "mixrec/common.hpp"
#include "mixrec/synth.hpp"

namespace mixrec {

double conditioning_threshold(double R, double sigma, double delta, int ell);

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

// Band t (t = 0..ell) is [(1 + t/ell)/2 - t/(4 ell^2), (1 + t/ell)/2].
std::vector<Band> decoding_bands(int ell);
// Smallest gap between consecutive bands; negative when two overlap.
double min_band_gap(int ell);
// Band containing p, or the nearest one.
int decode_band(double p, int ell, bool* inside = nullptr);

struct MlcUnionEstimate {
  int count = 0;
  double p_hat = 0.0;
  std::size_t conditioned = 0;
  bool in_band = false;
};

// Samples are rows of x with labels y in {-1,+1}.
MlcUnionEstimate union_count_mlc(const SampleMatrix& x, const Eigen::VectorXd& y, const IndexSet& c, double a,
                                 int ell);

// Flip x -> -x under the non-positive regime; identity otherwise.
void negate_if_nonpositive(SampleMatrix& x, SignRegime regime);

// Draws rows from the stream until m0 of them satisfy x_j > a on C (or cap rows were drawn).
struct ConditionedBatch {
  SampleMatrix x;  // conditioned rows, all n columns
  Eigen::VectorXd y;
  std::size_t drawn = 0;
};
ConditionedBatch collect_conditioned(const SampleStream& stream, std::size_t first_row, const IndexSet& c, double a,
                                     std::size_t m0, std::size_t cap, SignRegime regime);

}  // namespace mixrec
