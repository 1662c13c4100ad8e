#include "qwlab/ttm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qwlab {

TwoPhotonInput::TwoPhotonInput(CVec u_in, CVec v_in, std::string descr)
    : u(std::move(u_in)), v(std::move(v_in)), descriptor(std::move(descr)) {
  if (u.size() == 0 || v.size() == 0) {
    throw std::invalid_argument("TwoPhotonInput: empty input vector");
  }
  if (!all_finite(u) || !all_finite(v)) {
    throw std::invalid_argument("TwoPhotonInput: non-finite input vector");
  }
  double nu = u.norm();
  double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("TwoPhotonInput: zero input vector");
  }
  u /= nu;
  v /= nv;
}

OutputFields propagate(const TransmissionMatrix& tm, const TwoPhotonInput& in) {
  if (in.u.size() != tm.n_in_h || in.v.size() != tm.n_in_v()) {
    throw std::invalid_argument("propagate: input lengths do not match TM blocks");
  }
  return OutputFields{tm.h_block() * in.u, tm.v_block() * in.v};
}

PairAmplitudes pair_amplitude(const OutputFields& fields, int x, int y) {
  int n = static_cast<int>(fields.e_h.size());
  if (x < 0 || y < 0 || x >= n || y >= n) {
    throw std::invalid_argument("pair_amplitude: output index out of range");
  }
  if (x == y) {
    throw std::domain_error(
        "pair_amplitude: x == y; coincidences need two distinct output modes");
  }
  return PairAmplitudes{fields.e_h[x] * fields.e_v[y],
                        fields.e_h[y] * fields.e_v[x], x, y};
}

PairAmplitudes pair_amplitude(const TransmissionMatrix& tm,
                              const TwoPhotonInput& in, int x, int y) {
  return pair_amplitude(propagate(tm, in), x, y);
}

double coincidence_rate(const PairAmplitudes& amps, double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw std::invalid_argument("coincidence_rate: visibility must be in [0, 1]");
  }
  double r = std::norm(amps.a1) + std::norm(amps.a2) +
             2.0 * visibility * (amps.a1 * std::conj(amps.a2)).real();
  return r < 0.0 ? 0.0 : r;
}

TtmBlock build_ttm_block(const TransmissionMatrix& tm,
                         const std::vector<TwoPhotonInput>& inputs,
                         const std::vector<std::pair<int, int>>& pairs,
                         double visibility) {
  if (inputs.empty() || pairs.empty()) {
    throw std::invalid_argument("build_ttm_block: empty inputs or pairs");
  }
  TtmBlock block;
  block.visibility = visibility;
  block.rates.resize(inputs.size(), pairs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    OutputFields fields = propagate(tm, inputs[i]);
    block.input_labels.push_back(inputs[i].descriptor);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      PairAmplitudes amps = pair_amplitude(fields, pairs[j].first, pairs[j].second);
      block.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          coincidence_rate(amps, visibility);
    }
  }
  for (const auto& p : pairs) {
    block.pair_labels.push_back("(" + std::to_string(p.first) + "," +
                                std::to_string(p.second) + ")");
  }
  return block;
}

double nonclassical_contrast(double rate_near, double rate_far) {
  if (rate_far < 0.0 || rate_near < 0.0) {
    throw std::invalid_argument("nonclassical_contrast: negative rate");
  }
  if (rate_far == 0.0) {
    throw std::domain_error(
        "nonclassical_contrast: zero far-delay rate, contrast undefined");
  }
  return (rate_near - rate_far) / rate_far;
}

ContrastMatrix contrast_matrix(const TtmBlock& near_block,
                               const TtmBlock& far_block,
                               double delta_near_mm, double delta_far_mm) {
  if (near_block.rates.rows() != far_block.rates.rows() ||
      near_block.rates.cols() != far_block.rates.cols()) {
    throw std::invalid_argument("contrast_matrix: block shapes differ");
  }
  ContrastMatrix out;
  out.delta_near_mm = delta_near_mm;
  out.delta_far_mm = delta_far_mm;
  out.c.resize(near_block.rates.rows(), near_block.rates.cols());
  out.valid.assign(near_block.rates.rows(),
                   std::vector<bool>(near_block.rates.cols(), true));
  for (Eigen::Index i = 0; i < out.c.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.c.cols(); ++j) {
      try {
        out.c(i, j) =
            nonclassical_contrast(near_block.rates(i, j), far_block.rates(i, j));
      } catch (const std::domain_error&) {
        out.c(i, j) = std::numeric_limits<double>::quiet_NaN();
        out.valid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = false;
      }
    }
  }
  return out;
}

double contrast_sigma(double counts_near, double counts_far) {
  if (counts_near <= 0.0 || counts_far <= 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return (counts_near / counts_far) *
         std::sqrt(1.0 / counts_near + 1.0 / counts_far);
}

std::vector<std::pair<double, double>> hom_curve(
    const TransmissionMatrix& tm, const TwoPhotonInput& in,
    const SourceModel& source, int x, int y,
    const std::vector<double>& deltas_mm) {
  PairAmplitudes amps = pair_amplitude(tm, in, x, y);
  std::vector<std::pair<double, double>> curve;
  curve.reserve(deltas_mm.size());
  for (double d : deltas_mm) {
    curve.emplace_back(d, coincidence_rate(amps, mutual_coherence(source, d)));
  }
  return curve;
}

TwoPhotonDistribution brute_force_two_photon(const TransmissionMatrix& tm,
                                             const TwoPhotonInput& in,
                                             int max_n_out) {
  int n = tm.n_out();
  if (n > max_n_out) {
    throw std::invalid_argument(
        "brute_force_two_photon: output space too large for exhaustive "
        "enumeration");
  }
  OutputFields f = propagate(tm, in);
  TwoPhotonDistribution dist;
  dist.indistinguishable.resize(n, n);
  dist.distinguishable.resize(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      Cx a1 = f.e_h[p] * f.e_v[q];
      Cx a2 = f.e_h[q] * f.e_v[p];
      if (p == q) {
        // both photons in one mode: permanent 2 e_h(p) e_v(p), bosonic
        // weight 1/2! for the doubly occupied outcome
        dist.indistinguishable(p, q) = 2.0 * std::norm(f.e_h[p] * f.e_v[p]);
        dist.distinguishable(p, q) = std::norm(f.e_h[p]) * std::norm(f.e_v[p]);
      } else {
        dist.indistinguishable(p, q) = std::norm(a1 + a2);
        dist.distinguishable(p, q) = std::norm(a1) + std::norm(a2);
      }
    }
  }
  return dist;
}

}  // namespace qwlab
