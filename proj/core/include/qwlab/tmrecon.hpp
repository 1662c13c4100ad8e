#pragma once

#include <vector>

#include "qwlab/tm.hpp"
#include "qwlab/virtlab.hpp"

namespace qwlab {

/*
 * Interferometric transmission-matrix measurement.
 *
 * Each input mode i is probed in superposition with a reference field at
 * K >= 3 stepped relative phases theta_k = 2 pi k / K.  From the recorded
 * output intensities
 *
 *   I_k(p) = | E_i(p) + e^{i theta_k} E_ref(p) |^2 / 2
 *
 * lock-in demodulation recovers E_i(p) conj(E_ref(p)) exactly (for
 * noiseless frames), i.e. the true matrix up to one unknown conjugated
 * reference factor per output row.  That per-row ambiguity is physical:
 * it cancels in every intensity or coincidence prediction, and rows are
 * normalized before the matrix is used for inverse design.
 *
 * With the internal (co-propagated) reference one input mode is spent as
 * the reference and cannot be probed; an idealized external reference
 * (unit field on every output mode) probes all columns and recovers the
 * matrix without row factors.
 */

enum class ReferenceKind { Internal, External };

struct TmMeasureOptions {
  int phase_steps = 4;
  ReferenceKind reference = ReferenceKind::Internal;
  // input-mode index sacrificed as the internal reference
  int reference_mode = 0;
  // per-frame camera exposure and probe photon flux (sets shot noise in
  // poisson mode; noiseless frames are exact regardless)
  double exposure_s = 0.01;
  double flux = 1e6;
  // rows whose reference intensity falls below this fraction of the
  // brightest reference intensity are flagged unreliable
  double unreliable_rel_threshold = 1e-3;
  // subset of columns to probe; empty means all (minus the reference)
  std::vector<int> probe_columns;
};

struct ReconstructedTM {
  TransmissionMatrix tm;  // provenance = Measured; unprobed columns zero
  RVec reference_magnitude;  // per-row |E_ref| estimate
  std::vector<bool> unreliable_rows;
  std::vector<int> probed_columns;
  int phase_steps = 0;
  ReferenceKind reference = ReferenceKind::Internal;
  int reference_mode = -1;  // -1 when external

  int unreliable_count() const;
};

ReconstructedTM measure_tm(LabState& lab, const TmMeasureOptions& opts = {});

// lock-in demodulation primitive: given I_k = |E + e^{i theta_k} E_ref|^2
// at theta_k = 2 pi k / K, returns (1/K) sum_k I_k e^{i theta_k}
// = E conj(E_ref); exact for any K >= 3
Cx demodulate_phase_steps(const std::vector<double>& intensities);

// mean over reliable rows of |<m_p, t_p>| / (|m_p| |t_p|) restricted to
// the probed columns; 1.0 means perfect row-wise agreement up to the
// per-row reference factor
double tm_fidelity(const ReconstructedTM& measured,
                   const TransmissionMatrix& truth);

// same row-overlap statistic for two raw matrices of equal shape; the
// expected value for unrelated Gaussian rows is ~ sqrt(pi/4) / sqrt(cols)
double mean_row_overlap(const CMat& a, const CMat& b);

}  // namespace qwlab
