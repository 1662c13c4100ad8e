#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qwlab/numcore.hpp"
#include "qwlab/source_model.hpp"
#include "qwlab/tm.hpp"

namespace qwlab {

/*
 * Two-photon interference engine.
 *
 * One photon (H) is prepared in a superposition u over the H input block,
 * its partner (V) in a superposition v over the V block.  After linear
 * propagation e_H = T_H u and e_V = T_V v, a coincidence between detectors
 * at output modes x and y involves two indistinguishable paths:
 *
 *   A1 = e_H(x) e_V(y)      H photon to x, V photon to y
 *   A2 = e_H(y) e_V(x)      the exchanged assignment
 *
 * and the rate interpolates between coherent and incoherent path addition
 * with the mutual coherence V:
 *
 *   R = |A1|^2 + |A2|^2 + 2 V Re(A1 conj(A2))
 */

// normalized input state of the pair; u spans the H block, v the V block
struct TwoPhotonInput {
  CVec u;
  CVec v;
  std::string descriptor;

  TwoPhotonInput() = default;
  // normalizes both halves; throws on zero or non-finite input
  TwoPhotonInput(CVec u_in, CVec v_in, std::string descr = "");
};

struct PairAmplitudes {
  Cx a1;
  Cx a2;
  int x = 0;
  int y = 0;
};

// propagated single-photon output fields for one input state
struct OutputFields {
  CVec e_h;
  CVec e_v;
};

OutputFields propagate(const TransmissionMatrix& tm, const TwoPhotonInput& in);

// x == y is rejected: a coincidence needs two distinct detection modes
PairAmplitudes pair_amplitude(const OutputFields& fields, int x, int y);
PairAmplitudes pair_amplitude(const TransmissionMatrix& tm,
                              const TwoPhotonInput& in, int x, int y);

// visibility must lie in [0, 1]; result is clamped at zero against
// floating-point round-off at exact cancellation
double coincidence_rate(const PairAmplitudes& amps, double visibility);

// rows = inputs, cols = detector pairs, entries = predicted rates
struct TtmBlock {
  RMat rates;
  double visibility = 0.0;
  std::vector<std::string> input_labels;
  std::vector<std::string> pair_labels;
};

TtmBlock build_ttm_block(const TransmissionMatrix& tm,
                         const std::vector<TwoPhotonInput>& inputs,
                         const std::vector<std::pair<int, int>>& pairs,
                         double visibility);

// C = (r_near - r_far) / r_far; r_far == 0 is flagged as degenerate
// (std::domain_error), never silently mapped to zero
double nonclassical_contrast(double rate_near, double rate_far);

// contrast of two equally shaped rate blocks; entries where the far rate
// vanishes are NaN with valid=false
struct ContrastMatrix {
  RMat c;
  std::vector<std::vector<bool>> valid;
  double delta_near_mm = 0.0;
  double delta_far_mm = 0.0;
};

ContrastMatrix contrast_matrix(const TtmBlock& near_block,
                               const TtmBlock& far_block,
                               double delta_near_mm, double delta_far_mm);

// statistical error of C from Poisson counting, first-order propagation:
// sigma_C ~ (N_near/N_far) * sqrt(1/N_near + 1/N_far) with raw counts
double contrast_sigma(double counts_near, double counts_far);

// coincidence rate at (x, y) versus pair delay, using V(delta) from the
// source; symmetric in delta with its extremum at delta = 0
std::vector<std::pair<double, double>> hom_curve(
    const TransmissionMatrix& tm, const TwoPhotonInput& in,
    const SourceModel& source, int x, int y,
    const std::vector<double>& deltas_mm);

/*
 * Independent oracle for the engine above: enumerate the full two-photon
 * output distribution over ordered mode pairs.  Indistinguishable photons
 * add path amplitudes (2x2 permanents), distinguishable photons add path
 * probabilities.  O(n_out^2); intended for small test instances.
 */
struct TwoPhotonDistribution {
  RMat indistinguishable;  // n_out x n_out, symmetric
  RMat distinguishable;
};

TwoPhotonDistribution brute_force_two_photon(const TransmissionMatrix& tm,
                                             const TwoPhotonInput& in,
                                             int max_n_out = 12);

}  // namespace qwlab
