#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qwlab/tm.hpp"
#include "qwlab/virtlab.hpp"

namespace qwlab {

/*
 * Inverse design from a transmission matrix.
 *
 * Focusing one photon on output mode x only needs the conjugated phases
 * of row x.  Steering the photon pair, however, inverts the two-photon
 * transfer: the pair-field operator for a target coincidence (x, y) is
 * the conjugated symmetrized product of rows x and y,
 *
 *   B[i, j] = conj(T[x,i] T[y,j] + T[y,i] T[x,j])
 *
 * which has rank at most 2 and therefore admits separable input states
 * (one SLM per photon), either focusing the photons independently or
 * preparing both in the same two-spot superposition.
 */

// theta_i = -arg(T[target, i]) over the chosen half; throws
// std::domain_error when row `target` vanishes on that half
SlmPattern focus_single(const TransmissionMatrix& tm, int target, SlmHalf half);

// H photon to x, V photon to y
std::pair<SlmPattern, SlmPattern> focus_independent(const TransmissionMatrix& tm,
                                                    int x, int y);

struct SuperpositionTarget {
  int x = 0;
  int y = 0;
  double phase_h = 0.0;
  double phase_v = 0.0;
};

// each photon into (|x> + e^{i phi} |y>)/sqrt(2); rows are weighted by
// their inverse norms first so both spots receive equal target amplitude
std::pair<SlmPattern, SlmPattern> superposition_masks(
    const TransmissionMatrix& tm, const SuperpositionTarget& target);

// the rank-<=2 pair-field operator together with its analytic factors
// (conjugated target rows restricted to each half)
struct TwoPhotonInputField {
  CMat b;  // n_in_h x n_in_v
  int x = 0;
  int y = 0;
  CVec h_x, h_y;  // conj row x / row y over the H block
  CVec v_x, v_y;  // same over the V block

  RVec singular_values() const;
};

TwoPhotonInputField ttm_inverse_field(const TransmissionMatrix& tm, int x, int y);

enum class SolutionKind { Independent, IndependentSwapped, Superposition };

struct SeparableSolution {
  CVec u;  // H-photon field (unit norm)
  CVec v;  // V-photon field (unit norm)
  SolutionKind kind = SolutionKind::Independent;
  double phase = 0.0;  // superposition family parameter
  std::string label;
};

// separable factorizations of the pair field: the two independent-focusing
// assignments and the symmetric superposition member at phase = 0
std::vector<SeparableSolution> separable_solutions(const TwoPhotonInputField& field);
// symmetric family member at an arbitrary relative phase
SeparableSolution symmetric_solution(const TwoPhotonInputField& field, double phase);

// keep only arg(field); zero entries get phase 0 and are flagged, an
// all-zero field is degenerate (std::domain_error)
SlmPattern phase_only_project(const CVec& field, SlmHalf half);

// least-squares fit of a contrast grid to A cos(phi_h - phi_v + phi0)
struct CosineFit {
  double amplitude = 0.0;
  double phase_offset = 0.0;
  double correlation = 0.0;  // Pearson, data vs fit
};

CosineFit fit_phase_law(const RMat& contrast,
                        const std::vector<double>& phases_h,
                        const std::vector<double>& phases_v);

}  // namespace qwlab
