#include "qwlab/virtlab.hpp"

#include <cmath>
#include <stdexcept>

namespace qwlab {

void SourceModel::validate() const {
  if (!(visibility_v0 >= 0.0 && visibility_v0 <= 1.0)) {
    throw std::invalid_argument("SourceModel: visibility_v0 must be in [0, 1]");
  }
  if (!(coherence_scale_mm > 0.0)) {
    throw std::invalid_argument("SourceModel: coherence_scale_mm must be > 0");
  }
  if (!(pair_rate >= 0.0) || !std::isfinite(pair_rate)) {
    throw std::invalid_argument("SourceModel: pair_rate must be >= 0");
  }
  if (!(wavelength_nm > 0.0) || !(filter_fwhm_nm > 0.0)) {
    throw std::invalid_argument("SourceModel: wavelength and filter width must be > 0");
  }
}

double mutual_coherence(const SourceModel& source, double delta_mm) {
  source.validate();
  if (!std::isfinite(delta_mm)) {
    throw std::invalid_argument("mutual_coherence: delay must be finite");
  }
  double ratio = delta_mm / source.coherence_scale_mm;
  return source.visibility_v0 * std::exp(-ratio * ratio);
}

SlmPattern SlmPattern::canonical() const {
  SlmPattern out = *this;
  if (out.phases.empty()) return out;
  double anchor = out.phases[0];
  for (double& p : out.phases) {
    p = std::fmod(p - anchor, kTwoPi);
    if (p < 0.0) p += kTwoPi;
  }
  return out;
}

CVec pattern_to_field(const SlmPattern& pattern) {
  if (pattern.phases.empty()) {
    throw std::invalid_argument("pattern_to_field: empty pattern");
  }
  int n = pattern.size();
  double amp = 1.0 / std::sqrt(static_cast<double>(n));
  CVec field(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(pattern.phases[i])) {
      throw std::invalid_argument("pattern_to_field: non-finite phase");
    }
    field[i] = std::polar(amp, pattern.phases[i]);
  }
  return field;
}

void FiberConfig::validate() const {
  if (n_in_h < 1 || n_in_v < 1 || n_out < 1) {
    throw std::invalid_argument("FiberConfig: mode counts must be >= 1");
  }
  int d = resolved_ambient();
  if (n_in() > d || n_out > d) {
    throw std::invalid_argument(
        "FiberConfig: ambient dimension must cover both the input blocks and "
        "the monitored outputs");
  }
}

void DetectorModel::validate() const {
  if (!(coincidence_window_s > 0.0)) {
    throw std::invalid_argument("DetectorModel: coincidence window must be > 0");
  }
  if (dark_rate < 0.0) {
    throw std::invalid_argument("DetectorModel: dark_rate must be >= 0");
  }
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("DetectorModel: efficiency must be in [0, 1]");
  }
}

namespace {

void fill_grid_dims(GroundTruthFiber& fiber) {
  int n = fiber.config.n_out;
  int w = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  fiber.grid_w = w;
  fiber.grid_h = (n + w - 1) / w;
}

CMat cut_transfer_matrix(const CMat& u, const FiberConfig& cfg) {
  // monitored outputs are the first n_out ambient rows; the H block
  // occupies the first n_in_h columns, the V block the next n_in_v
  return u.block(0, 0, cfg.n_out, cfg.n_in());
}

}  // namespace

GroundTruthFiber GroundTruthFiber::sample(const FiberConfig& cfg) {
  cfg.validate();
  GroundTruthFiber fiber;
  fiber.config = cfg;
  fiber.ambient = haar_unitary(cfg.resolved_ambient(), cfg.seed);
  fiber.t_true = cut_transfer_matrix(fiber.ambient.m, cfg);
  fill_grid_dims(fiber);
  return fiber;
}

GroundTruthFiber GroundTruthFiber::from_unitary(const CMat& u,
                                                const FiberConfig& cfg) {
  cfg.validate();
  if (u.rows() != u.cols() || u.rows() != cfg.resolved_ambient()) {
    throw std::invalid_argument(
        "GroundTruthFiber: unitary dimension must equal the ambient dimension");
  }
  if (unitarity_defect(u) > 1e-10) {
    throw std::invalid_argument("GroundTruthFiber: matrix is not unitary");
  }
  GroundTruthFiber fiber;
  fiber.config = cfg;
  fiber.ambient = UnitaryMatrix{u, cfg.seed};
  fiber.t_true = cut_transfer_matrix(u, cfg);
  fill_grid_dims(fiber);
  return fiber;
}

LabState::LabState(const FiberConfig& fiber_cfg, const SourceModel& source,
                   const DetectorModel& detector)
    : LabState(GroundTruthFiber::sample(fiber_cfg), source, detector) {}

LabState::LabState(GroundTruthFiber fiber, const SourceModel& source,
                   const DetectorModel& detector)
    : fiber_(std::move(fiber)),
      source_(source),
      detector_(detector),
      rng_(detector.seed, /*stream=*/0x44455443ull) {
  source_.validate();
  detector_.validate();
  // both SLMs start flat
  field_h_ = CVec::Constant(fiber_.config.n_in_h,
                            Cx(1.0 / std::sqrt(double(fiber_.config.n_in_h)), 0.0));
  field_v_ = CVec::Constant(fiber_.config.n_in_v,
                            Cx(1.0 / std::sqrt(double(fiber_.config.n_in_v)), 0.0));
}

void LabState::set_slm(SlmHalf half, const SlmPattern& pattern) {
  int expected = half == SlmHalf::H ? fiber_.config.n_in_h : fiber_.config.n_in_v;
  if (pattern.size() != expected) {
    throw std::invalid_argument("set_slm: pattern length does not match the half");
  }
  (half == SlmHalf::H ? field_h_ : field_v_) = pattern_to_field(pattern);
}

void LabState::set_input_field(SlmHalf half, const CVec& field) {
  int expected = half == SlmHalf::H ? fiber_.config.n_in_h : fiber_.config.n_in_v;
  if (field.size() != expected) {
    throw std::invalid_argument("set_input_field: length does not match the half");
  }
  if (!all_finite(field)) {
    throw std::invalid_argument("set_input_field: non-finite field");
  }
  double norm = field.norm();
  if (norm == 0.0) {
    throw std::invalid_argument("set_input_field: zero field");
  }
  (half == SlmHalf::H ? field_h_ : field_v_) = field / norm;
}

void LabState::set_delay(double delta_mm) {
  if (!std::isfinite(delta_mm)) {
    throw std::invalid_argument("set_delay: delay must be finite");
  }
  delta_mm_ = delta_mm;
}

double LabState::visibility_now() const {
  return mutual_coherence(source_, delta_mm_);
}

const CVec& LabState::input_field(SlmHalf half) const {
  return half == SlmHalf::H ? field_h_ : field_v_;
}

TwoPhotonInput LabState::current_input() const {
  return TwoPhotonInput(field_h_, field_v_, "lab");
}

RVec LabState::single_photon_intensity(SlmHalf half) const {
  const CVec& f = half == SlmHalf::H ? field_h_ : field_v_;
  int offset = half == SlmHalf::H ? 0 : fiber_.config.n_in_h;
  int width = static_cast<int>(f.size());
  CVec e = fiber_.t_true.middleCols(offset, width) * f;
  return e.cwiseAbs2();
}

long long LabState::draw_counts(double mean) { return rng_.poisson(mean); }

IntensityImage LabState::intensity_image(PhotonSelect which, double exposure_s) {
  if (!(exposure_s > 0.0)) {
    throw std::invalid_argument("intensity_image: exposure must be > 0");
  }
  RVec intensity = RVec::Zero(fiber_.config.n_out);
  if (which == PhotonSelect::H || which == PhotonSelect::Both) {
    intensity += single_photon_intensity(SlmHalf::H);
  }
  if (which == PhotonSelect::V || which == PhotonSelect::Both) {
    intensity += single_photon_intensity(SlmHalf::V);
  }
  double scale = source_.pair_rate * exposure_s * detector_.efficiency;
  IntensityImage image;
  image.grid_w = fiber_.grid_w;
  image.grid_h = fiber_.grid_h;
  image.exposure_s = exposure_s;
  image.counts = intensity * scale;
  if (detector_.noise_mode == NoiseMode::Poisson) {
    for (int p = 0; p < image.counts.size(); ++p) {
      image.counts[p] = static_cast<double>(draw_counts(image.counts[p]));
    }
  }
  return image;
}

double LabState::singles_rate(int position_index, DetectorArm /*arm*/) const {
  if (position_index < 0 || position_index >= fiber_.config.n_out) {
    throw std::invalid_argument("singles_rate: position out of range");
  }
  RVec ih = single_photon_intensity(SlmHalf::H);
  RVec iv = single_photon_intensity(SlmHalf::V);
  // either photon of a pair can arrive; the polarizing split halves the
  // collected flux per arm
  double optical = source_.pair_rate * detector_.efficiency *
                   0.5 * (ih[position_index] + iv[position_index]);
  return optical + detector_.dark_rate;
}

CoincidenceResult LabState::count_coincidences(int x, int y, double duration_s) {
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("count_coincidences: duration must be > 0");
  }
  PairAmplitudes amps = pair_amplitude(true_transmission_matrix(),
                                       current_input(), x, y);
  double correlated = source_.pair_rate * detector_.efficiency *
                      detector_.efficiency *
                      coincidence_rate(amps, visibility_now());
  double accidental = singles_rate(x, DetectorArm::F1) *
                      singles_rate(y, DetectorArm::F2) *
                      detector_.coincidence_window_s;
  double rate = correlated + accidental;

  CoincidenceResult result;
  if (detector_.noise_mode == NoiseMode::Poisson) {
    result.counts = static_cast<double>(draw_counts(rate * duration_s));
  } else {
    result.counts = rate * duration_s;
  }
  result.rate = result.counts / duration_s;
  result.sigma = std::sqrt(result.counts);
  return result;
}

RVec LabState::probe_intensity(const CVec& input_field, Cx external_ref,
                               double exposure_s, double flux) {
  if (input_field.size() != fiber_.config.n_in()) {
    throw std::invalid_argument(
        "probe_intensity: field length must equal the full input-mode count");
  }
  if (!all_finite(input_field)) {
    throw std::invalid_argument("probe_intensity: non-finite field");
  }
  if (!(exposure_s > 0.0) || !(flux > 0.0)) {
    throw std::invalid_argument("probe_intensity: exposure and flux must be > 0");
  }
  CVec e = fiber_.t_true * input_field;
  RVec counts(e.size());
  double scale = exposure_s * flux;
  for (int p = 0; p < e.size(); ++p) {
    counts[p] = std::norm(e[p] + external_ref) * scale;
  }
  if (detector_.noise_mode == NoiseMode::Poisson) {
    for (int p = 0; p < counts.size(); ++p) {
      counts[p] = static_cast<double>(draw_counts(counts[p]));
    }
  }
  return counts;
}

TransmissionMatrix LabState::true_transmission_matrix() const {
  TransmissionMatrix tm;
  tm.m = fiber_.t_true;
  tm.n_in_h = fiber_.config.n_in_h;
  tm.provenance = TmProvenance::Oracle;
  tm.basis = TmBasis::InputMode;
  return tm;
}

OutputPosition LabState::position(int index) const {
  if (index < 0 || index >= fiber_.config.n_out) {
    throw std::invalid_argument("position: index out of range");
  }
  OutputPosition pos;
  pos.index = index;
  pos.gx = index % fiber_.grid_w;
  pos.gy = index / fiber_.grid_w;
  pos.label = "M" + std::to_string(index);
  return pos;
}

double speckle_grain_count(const IntensityImage& image) {
  double total = image.counts.sum();
  double sq = image.counts.squaredNorm();
  if (sq == 0.0) return 0.0;
  return total * total / sq;
}

double speckle_contrast(const IntensityImage& image) {
  int n = static_cast<int>(image.counts.size());
  if (n < 2) {
    throw std::invalid_argument("speckle_contrast: need at least two modes");
  }
  double mean = image.counts.mean();
  if (mean == 0.0) {
    throw std::domain_error("speckle_contrast: empty frame");
  }
  double var = (image.counts.array() - mean).square().sum() / (n - 1);
  return std::sqrt(var) / mean;
}

}  // namespace qwlab
