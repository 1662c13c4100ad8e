#pragma once

namespace qwlab {

enum class CoherenceShape { Gaussian };

// Photon-pair source.  Wavelength and filter width are carried as metadata;
// what the interference engine consumes is the mutual coherence V(delta).
struct SourceModel {
  double wavelength_nm = 810.0;
  double filter_fwhm_nm = 1.0;
  // two-photon interference visibility at zero delay
  double visibility_v0 = 0.86;
  // delay scale (mm of path difference) over which V decays
  double coherence_scale_mm = 0.2;
  // emitted pairs per second reaching the fiber input
  double pair_rate = 400.0;
  CoherenceShape shape = CoherenceShape::Gaussian;

  void validate() const;
};

// V(delta) = V0 * exp(-(delta/scale)^2); even in delta, V(0) = V0,
// V -> 0 as |delta| grows.
double mutual_coherence(const SourceModel& source, double delta_mm);

}  // namespace qwlab
