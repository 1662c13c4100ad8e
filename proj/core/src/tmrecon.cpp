#include "qwlab/tmrecon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qwlab {

int ReconstructedTM::unreliable_count() const {
  return static_cast<int>(
      std::count(unreliable_rows.begin(), unreliable_rows.end(), true));
}

Cx demodulate_phase_steps(const std::vector<double>& intensities) {
  int k_steps = static_cast<int>(intensities.size());
  if (k_steps < 3) {
    throw std::invalid_argument(
        "demodulate_phase_steps: at least 3 phase steps required");
  }
  Cx acc(0.0, 0.0);
  for (int k = 0; k < k_steps; ++k) {
    acc += intensities[k] * std::polar(1.0, kTwoPi * k / k_steps);
  }
  return acc / static_cast<double>(k_steps);
}

ReconstructedTM measure_tm(LabState& lab, const TmMeasureOptions& opts) {
  const int n_in = lab.n_in_h() + lab.n_in_v();
  const int n_out = lab.n_out();
  if (opts.phase_steps < 3) {
    throw std::invalid_argument("measure_tm: phase_steps must be >= 3");
  }
  if (!(opts.exposure_s > 0.0) || !(opts.flux > 0.0)) {
    throw std::invalid_argument("measure_tm: exposure and flux must be > 0");
  }
  const bool internal = opts.reference == ReferenceKind::Internal;
  if (internal && (opts.reference_mode < 0 || opts.reference_mode >= n_in)) {
    throw std::invalid_argument("measure_tm: reference_mode out of range");
  }

  std::vector<int> probed = opts.probe_columns;
  if (probed.empty()) {
    for (int i = 0; i < n_in; ++i) {
      if (internal && i == opts.reference_mode) continue;
      probed.push_back(i);
    }
  } else {
    for (int i : probed) {
      if (i < 0 || i >= n_in) {
        throw std::invalid_argument("measure_tm: probe column out of range");
      }
      if (internal && i == opts.reference_mode) {
        throw std::invalid_argument(
            "measure_tm: the reference mode cannot also be probed");
      }
    }
  }

  const double frame_scale = opts.exposure_s * opts.flux;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const int k_steps = opts.phase_steps;

  // reference output intensity, used for per-row reliability flags
  RVec ref_intensity;
  if (internal) {
    CVec ref_field = CVec::Zero(n_in);
    ref_field[opts.reference_mode] = Cx(1.0, 0.0);
    ref_intensity =
        lab.probe_intensity(ref_field, Cx(0.0, 0.0), opts.exposure_s, opts.flux) /
        frame_scale;
  } else {
    ref_intensity = RVec::Ones(n_out);
  }

  CMat estimate = CMat::Zero(n_out, n_in);
  CVec probe_field = CVec::Zero(n_in);
  std::vector<RVec> frames(static_cast<std::size_t>(k_steps));
  for (int col : probed) {
    for (int k = 0; k < k_steps; ++k) {
      Cx step = std::polar(inv_sqrt2, kTwoPi * k / k_steps);
      Cx ext_ref(0.0, 0.0);
      probe_field.setZero();
      probe_field[col] = Cx(inv_sqrt2, 0.0);
      if (internal) {
        probe_field[opts.reference_mode] += step;
      } else {
        ext_ref = step;
      }
      frames[static_cast<std::size_t>(k)] =
          lab.probe_intensity(probe_field, ext_ref, opts.exposure_s, opts.flux);
    }
    for (int p = 0; p < n_out; ++p) {
      Cx acc(0.0, 0.0);
      for (int k = 0; k < k_steps; ++k) {
        acc += (frames[static_cast<std::size_t>(k)][p] / frame_scale) *
               std::polar(1.0, kTwoPi * k / k_steps);
      }
      estimate(p, col) = 2.0 * acc / static_cast<double>(k_steps);
    }
  }

  ReconstructedTM recon;
  recon.tm.m = std::move(estimate);
  recon.tm.n_in_h = lab.n_in_h();
  recon.tm.provenance = TmProvenance::Measured;
  recon.tm.basis = TmBasis::InputMode;
  recon.reference_magnitude = ref_intensity.cwiseMax(0.0).cwiseSqrt();
  recon.probed_columns = std::move(probed);
  recon.phase_steps = k_steps;
  recon.reference = opts.reference;
  recon.reference_mode = internal ? opts.reference_mode : -1;

  double max_ref = ref_intensity.maxCoeff();
  recon.unreliable_rows.assign(static_cast<std::size_t>(n_out), false);
  for (int p = 0; p < n_out; ++p) {
    if (ref_intensity[p] < opts.unreliable_rel_threshold * max_ref) {
      recon.unreliable_rows[static_cast<std::size_t>(p)] = true;
    }
  }
  return recon;
}

double tm_fidelity(const ReconstructedTM& measured,
                   const TransmissionMatrix& truth) {
  if (measured.tm.m.rows() != truth.m.rows() ||
      measured.tm.m.cols() != truth.m.cols()) {
    throw std::invalid_argument("tm_fidelity: shape mismatch");
  }
  if (measured.probed_columns.empty()) {
    throw std::invalid_argument("tm_fidelity: no probed columns");
  }
  const auto& cols = measured.probed_columns;
  double acc = 0.0;
  int used = 0;
  for (int p = 0; p < measured.tm.m.rows(); ++p) {
    if (measured.unreliable_rows[static_cast<std::size_t>(p)]) continue;
    Cx dot(0.0, 0.0);
    double nm = 0.0, nt = 0.0;
    for (int c : cols) {
      dot += std::conj(measured.tm.m(p, c)) * truth.m(p, c);
      nm += std::norm(measured.tm.m(p, c));
      nt += std::norm(truth.m(p, c));
    }
    if (nm == 0.0 || nt == 0.0) continue;
    acc += std::abs(dot) / std::sqrt(nm * nt);
    ++used;
  }
  if (used == 0) {
    throw std::domain_error("tm_fidelity: no reliable rows to compare");
  }
  return acc / used;
}

double mean_row_overlap(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("mean_row_overlap: shape mismatch");
  }
  double acc = 0.0;
  int used = 0;
  for (int p = 0; p < a.rows(); ++p) {
    double na = a.row(p).norm();
    double nb = b.row(p).norm();
    if (na == 0.0 || nb == 0.0) continue;
    acc += std::abs(a.row(p).dot(b.row(p))) / (na * nb);
    ++used;
  }
  if (used == 0) {
    throw std::domain_error("mean_row_overlap: all rows empty");
  }
  return acc / used;
}

}  // namespace qwlab
