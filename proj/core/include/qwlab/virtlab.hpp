#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qwlab/numcore.hpp"
#include "qwlab/source_model.hpp"
#include "qwlab/tm.hpp"
#include "qwlab/ttm.hpp"

namespace qwlab {

enum class SlmHalf { H, V };
enum class PhotonSelect { H, V, Both };
enum class NoiseMode { Noiseless, Poisson };
enum class DetectorArm { F1, F2 };

// Phase-only SLM hologram over one input half.  Entries are radians;
// `undefined_entries` marks positions whose phase had to be defaulted to 0
// because the design field vanished there.
struct SlmPattern {
  SlmHalf half = SlmHalf::H;
  std::vector<double> phases;
  std::vector<int> undefined_entries;

  int size() const { return static_cast<int>(phases.size()); }
  // same physics, global phase anchored so that phases[0] == 0 and all
  // entries wrapped to [0, 2*pi); used when patterns are written to disk
  SlmPattern canonical() const;
};

// unit-amplitude field e^{i theta}/sqrt(N) induced by a pattern
CVec pattern_to_field(const SlmPattern& pattern);

struct FiberConfig {
  int n_in_h = 180;
  int n_in_v = 190;
  int n_out = 100;
  // dimension of the underlying unitary; 0 selects n_in_h + n_in_v + n_out,
  // so that the monitored block is a strict sub-unitary cut
  int ambient_dim = 0;
  std::uint64_t seed = 1;

  int n_in() const { return n_in_h + n_in_v; }
  int resolved_ambient() const {
    return ambient_dim > 0 ? ambient_dim : n_in() + n_out;
  }
  void validate() const;
};

struct DetectorModel {
  double coincidence_window_s = 2.5e-9;
  double dark_rate = 0.0;   // counts/s per detector
  double efficiency = 1.0;  // per-photon detection probability
  NoiseMode noise_mode = NoiseMode::Noiseless;
  std::uint64_t seed = 1;

  void validate() const;
};

// monitored output mode with its position on the camera grid
struct OutputPosition {
  int index = 0;
  std::string label;
  int gx = 0;
  int gy = 0;
};

/*
 * Ground truth: an ambient Haar unitary U of dimension D, from which the
 * physical transfer matrix is the cut
 *
 *   T_true = U[monitored output rows, H input columns ++ V input columns]
 *
 * The cut is strictly sub-unitary for D > max(n_in, n_out), which models
 * the unmonitored remainder of the output space and polarization
 * selection; all singular values are <= 1.
 */
struct GroundTruthFiber {
  UnitaryMatrix ambient;
  CMat t_true;  // n_out x n_in
  FiberConfig config;
  int grid_w = 0;
  int grid_h = 0;

  static GroundTruthFiber sample(const FiberConfig& cfg);
  // explicit ambient unitary (identity fiber, couplers, regression cases)
  static GroundTruthFiber from_unitary(const CMat& u, const FiberConfig& cfg);
};

struct CoincidenceResult {
  double counts = 0.0;  // integer-valued in poisson mode, exact otherwise
  double rate = 0.0;    // counts / duration
  double sigma = 0.0;   // sqrt(counts), the Poisson estimate
};

struct IntensityImage {
  RVec counts;  // per monitored output mode
  int grid_w = 0;
  int grid_h = 0;
  double exposure_s = 0.0;
};

/*
 * One virtual optical bench: fiber + source + detectors + the two SLM
 * programmable input fields + the pair delay line.  Mutating operations
 * follow a single-writer discipline; all randomness is drawn from the
 * detector-seeded stream so that a fixed command sequence reproduces the
 * same counts bit for bit.
 */
class LabState {
 public:
  LabState(const FiberConfig& fiber_cfg, const SourceModel& source,
           const DetectorModel& detector);
  LabState(GroundTruthFiber fiber, const SourceModel& source,
           const DetectorModel& detector);

  void set_slm(SlmHalf half, const SlmPattern& pattern);
  // arbitrary normalized superposition in the input-mode basis (focused
  // spots, spot pairs for interferometric probing); vector is normalized
  void set_input_field(SlmHalf half, const CVec& field);
  void set_delay(double delta_mm);

  double delay_mm() const { return delta_mm_; }
  double visibility_now() const;  // V(current delay)

  // camera frame over the monitored grid for the selected photon(s);
  // Both is the incoherent sum of the H and V frames
  IntensityImage intensity_image(PhotonSelect which, double exposure_s);

  // counts/s at one monitored position; dark counts included
  double singles_rate(int position_index, DetectorArm arm) const;

  // coincidence counts between arm F1 at x and arm F2 at y over the given
  // duration; includes accidental coincidences S1*S2*tau_w
  CoincidenceResult count_coincidences(int x, int y, double duration_s);

  // interferometric probe: detected counts per output mode for an
  // arbitrary input-mode field, optionally overlapped with an external
  // reference of the given amplitude on every output mode
  RVec probe_intensity(const CVec& input_field, Cx external_ref,
                       double exposure_s, double flux);

  // oracle access; provenance-tagged so measured-only paths can refuse it
  TransmissionMatrix true_transmission_matrix() const;

  OutputPosition position(int index) const;
  const GroundTruthFiber& fiber() const { return fiber_; }
  const SourceModel& source() const { return source_; }
  const DetectorModel& detector() const { return detector_; }
  const CVec& input_field(SlmHalf half) const;
  int n_out() const { return fiber_.config.n_out; }
  int n_in_h() const { return fiber_.config.n_in_h; }
  int n_in_v() const { return fiber_.config.n_in_v; }

  TwoPhotonInput current_input() const;

 private:
  RVec single_photon_intensity(SlmHalf half) const;
  long long draw_counts(double mean);

  GroundTruthFiber fiber_;
  SourceModel source_;
  DetectorModel detector_;
  CVec field_h_;
  CVec field_v_;
  double delta_mm_ = 0.0;
  Rng rng_;
};

// effective number of bright speckle grains in a frame, the intensity
// participation ratio (sum I)^2 / sum I^2
double speckle_grain_count(const IntensityImage& image);

// std/mean of the per-mode intensities; ~1 for fully developed speckle
double speckle_contrast(const IntensityImage& image);

}  // namespace qwlab
