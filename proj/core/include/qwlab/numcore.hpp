#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>

namespace qwlab {

using Cx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/*
 * Deterministic random source.
 *
 * A (seed, stream) pair selects an independent sequence; the same pair
 * always reproduces the same draws bit for bit within a build.  Streams
 * let one master seed drive several consumers (fiber realization,
 * detector shot noise, probe shot noise) without correlation.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // uniform on [0, 1)
  double uniform();
  // standard normal
  double normal();
  // complex with independent standard-normal real and imaginary parts
  Cx complex_normal();
  // Poisson counts; mean must be finite and >= 0
  long long poisson(double mean);
  std::uint64_t next_u64();

  // independent child stream, deterministic in (seed, stream, substream)
  Rng split(std::uint64_t substream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_dist_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_dist_{0.0, 1.0};
};

// Matrix sampled from the unitary group with uniform (Haar) weight,
// tagged with the seed that produced it.
struct UnitaryMatrix {
  CMat m;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(m.rows()); }
};

/*
 * Draw a Haar-distributed unitary.
 *
 * A complex Ginibre matrix (iid standard-normal real/imaginary parts) is
 * QR-factorized and the orthonormal factor is corrected with the inverse
 * diagonal phases of the triangular factor.  Without the correction the
 * raw Q is biased by the QR sign convention; with it the result carries
 * the invariant group measure.  Deterministic for fixed (dim, seed).
 */
UnitaryMatrix haar_unitary(int dim, std::uint64_t seed);

// max-abs entry of (M^dagger M - I); throws std::invalid_argument for
// non-square input
double unitarity_defect(const CMat& m);

bool all_finite(const CMat& m);
bool all_finite(const CVec& v);
bool all_finite(const RMat& m);
bool all_finite(const RVec& v);

}  // namespace qwlab
