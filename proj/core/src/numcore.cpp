#include "qwlab/numcore.hpp"

#include <cmath>
#include <stdexcept>

namespace qwlab {

namespace {

// SplitMix64 step; used only to turn (seed, stream) into engine state.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x9E3779B97F4A7C15ull);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix_seed_stream(seed, stream)) {}

double Rng::uniform() { return uniform_dist_(engine_); }

double Rng::normal() { return normal_dist_(engine_); }

Cx Rng::complex_normal() {
  double re = normal();
  double im = normal();
  return {re, im};
}

long long Rng::poisson(double mean) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw std::invalid_argument("Rng::poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  std::poisson_distribution<long long> dist(mean);
  return dist(engine_);
}

std::uint64_t Rng::next_u64() { return engine_(); }

Rng Rng::split(std::uint64_t substream) const {
  std::uint64_t s = stream_;
  std::uint64_t child = splitmix64(s) ^ (substream * 0xDA942042E4DD58B5ull);
  return Rng(seed_, child + substream);
}

UnitaryMatrix haar_unitary(int dim, std::uint64_t seed) {
  if (dim < 1) {
    throw std::invalid_argument("haar_unitary: dim must be >= 1");
  }
  Rng rng(seed, /*stream=*/0x48414152ull);  // dedicated stream for sampling

  CMat z(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      z(r, c) = rng.complex_normal();
    }
  }

  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ();
  CVec diag = qr.matrixQR().diagonal();
  for (int k = 0; k < dim; ++k) {
    double mag = std::abs(diag[k]);
    Cx phase = (mag > 0.0) ? diag[k] / mag : Cx(1.0, 0.0);
    q.col(k) *= std::conj(phase);
  }
  return UnitaryMatrix{std::move(q), seed};
}

double unitarity_defect(const CMat& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("unitarity_defect: matrix must be square");
  }
  CMat gram = m.adjoint() * m;
  gram -= CMat::Identity(m.rows(), m.cols());
  return gram.cwiseAbs().maxCoeff();
}

bool all_finite(const CMat& m) {
  return m.allFinite();
}

bool all_finite(const CVec& v) {
  return v.allFinite();
}

bool all_finite(const RMat& m) {
  return m.allFinite();
}

bool all_finite(const RVec& v) {
  return v.allFinite();
}

}  // namespace qwlab
