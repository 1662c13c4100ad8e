#include <cmath>

#include "doctest.h"
#include "qwlab/virtlab.hpp"

using namespace qwlab;

namespace {

FiberConfig small_fiber(std::uint64_t seed = 1) {
  FiberConfig cfg;
  cfg.n_in_h = 24;
  cfg.n_in_v = 26;
  cfg.n_out = 30;
  cfg.seed = seed;
  return cfg;
}

LabState small_lab(std::uint64_t seed = 1) {
  return LabState(small_fiber(seed), SourceModel{}, DetectorModel{});
}

CVec basis(int n, int i) {
  CVec v = CVec::Zero(n);
  v[i] = Cx(1.0);
  return v;
}

}  // namespace

TEST_CASE("fiber sampling respects the configured shape") {
  GroundTruthFiber fiber = GroundTruthFiber::sample(small_fiber());
  CHECK(fiber.ambient.dim() == 24 + 26 + 30);
  CHECK(fiber.t_true.rows() == 30);
  CHECK(fiber.t_true.cols() == 50);
  CHECK(unitarity_defect(fiber.ambient.m) < 1e-10);
  CHECK(fiber.grid_w * fiber.grid_h >= 30);
}

TEST_CASE("fiber is reproducible per seed and differs across seeds") {
  GroundTruthFiber a = GroundTruthFiber::sample(small_fiber(5));
  GroundTruthFiber b = GroundTruthFiber::sample(small_fiber(5));
  GroundTruthFiber c = GroundTruthFiber::sample(small_fiber(6));
  CHECK((a.t_true - b.t_true).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.t_true - c.t_true).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("explicit ambient unitaries are accepted only when consistent") {
  FiberConfig cfg;
  cfg.n_in_h = 2;
  cfg.n_in_v = 2;
  cfg.n_out = 3;
  cfg.ambient_dim = 7;
  CHECK_NOTHROW(GroundTruthFiber::from_unitary(CMat::Identity(7, 7), cfg));
  CHECK_THROWS_AS(GroundTruthFiber::from_unitary(CMat::Identity(6, 6), cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      GroundTruthFiber::from_unitary(2.0 * CMat::Identity(7, 7), cfg),
      std::invalid_argument);
}

TEST_CASE("transfer through the fiber cannot exceed unity gain") {
  GroundTruthFiber fiber = GroundTruthFiber::sample(small_fiber(9));
  Eigen::JacobiSVD<CMat> svd(fiber.t_true);
  CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-10);
}

TEST_CASE("no mode truncation when the cut equals the whole unitary") {
  FiberConfig cfg;
  cfg.n_in_h = 1;
  cfg.n_in_v = 1;
  cfg.n_out = 2;
  cfg.ambient_dim = 2;  // the monitored block is the entire unitary
  GroundTruthFiber fiber = GroundTruthFiber::sample(cfg);
  CHECK(unitarity_defect(fiber.t_true) < 1e-10);
}

TEST_CASE("identity fiber maps input modes to matching pixels") {
  FiberConfig cfg;
  cfg.n_in_h = 4;
  cfg.n_in_v = 4;
  cfg.n_out = 4;
  cfg.ambient_dim = 12;
  GroundTruthFiber fiber =
      GroundTruthFiber::from_unitary(CMat::Identity(12, 12), cfg);
  LabState lab(fiber, SourceModel{}, DetectorModel{});

  lab.set_input_field(SlmHalf::H, basis(4, 2));
  IntensityImage img = lab.intensity_image(PhotonSelect::H, 1.0);
  for (int p = 0; p < 4; ++p) {
    if (p == 2) {
      CHECK(img.counts[p] > 0.0);
    } else {
      CHECK(img.counts[p] == 0.0);
    }
  }
  // V inputs (global modes 4..7) fall outside the monitored rows 0..3
  IntensityImage img_v = lab.intensity_image(PhotonSelect::V, 1.0);
  CHECK(img_v.counts.maxCoeff() == 0.0);
}

TEST_CASE("initial SLM state is the flat uniform field") {
  LabState lab = small_lab();
  const CVec& f = lab.input_field(SlmHalf::H);
  REQUIRE(f.size() == 24);
  for (int i = 0; i < f.size(); ++i) {
    CHECK(std::abs(f[i] - Cx(1.0 / std::sqrt(24.0))) < 1e-14);
  }
}

TEST_CASE("pattern_to_field builds unit-amplitude phase fields") {
  SlmPattern p;
  p.half = SlmHalf::H;
  p.phases = {0.0, kPi / 2.0, kPi};
  CVec f = pattern_to_field(p);
  double amp = 1.0 / std::sqrt(3.0);
  CHECK(std::abs(f[0] - Cx(amp, 0.0)) < 1e-14);
  CHECK(std::abs(f[1] - Cx(0.0, amp)) < 1e-14);
  CHECK(std::abs(f[2] - Cx(-amp, 0.0)) < 1e-14);
}

TEST_CASE("a global phase offset on the SLM changes nothing observable") {
  SlmPattern p1, p2;
  p1.half = p2.half = SlmHalf::H;
  Rng rng(3, 0);
  for (int i = 0; i < 24; ++i) {
    double th = kTwoPi * rng.uniform();
    p1.phases.push_back(th);
    p2.phases.push_back(th + 1.234);
  }
  LabState lab1 = small_lab(4);
  LabState lab2 = small_lab(4);
  lab1.set_slm(SlmHalf::H, p1);
  lab2.set_slm(SlmHalf::H, p2);
  IntensityImage i1 = lab1.intensity_image(PhotonSelect::H, 1.0);
  IntensityImage i2 = lab2.intensity_image(PhotonSelect::H, 1.0);
  CHECK((i1.counts - i2.counts).cwiseAbs().maxCoeff() < 1e-12);

  lab1.set_delay(0.0);
  lab2.set_delay(0.0);
  CHECK(lab1.count_coincidences(1, 20, 10.0).rate ==
        doctest::Approx(lab2.count_coincidences(1, 20, 10.0).rate)
            .epsilon(1e-12));
}

TEST_CASE("canonical patterns anchor the global phase") {
  SlmPattern p;
  p.half = SlmHalf::V;
  p.phases = {1.0, 2.5, 0.3};
  SlmPattern c = p.canonical();
  CHECK(c.phases[0] == doctest::Approx(0.0));
  CHECK(c.phases[1] == doctest::Approx(1.5));
  CHECK(c.phases[2] == doctest::Approx(0.3 - 1.0 + kTwoPi));
}

TEST_CASE("both-photon image is the sum of the single-photon images") {
  LabState lab = small_lab(8);
  IntensityImage h = lab.intensity_image(PhotonSelect::H, 2.0);
  IntensityImage v = lab.intensity_image(PhotonSelect::V, 2.0);
  IntensityImage b = lab.intensity_image(PhotonSelect::Both, 2.0);
  CHECK((b.counts - h.counts - v.counts).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("captured energy never exceeds the injected photon budget") {
  LabState lab = small_lab(12);
  SourceModel src = lab.source();
  IntensityImage b = lab.intensity_image(PhotonSelect::Both, 1.0);
  // both photons of every pair captured at best: 2 * pair_rate * exposure
  CHECK(b.counts.sum() <= 2.0 * src.pair_rate * 1.0 + 1e-9);
}

TEST_CASE("visibility follows the delay line") {
  LabState lab = small_lab();
  lab.set_delay(0.0);
  CHECK(lab.visibility_now() == doctest::Approx(0.86).epsilon(1e-14));
  lab.set_delay(0.4);
  CHECK(lab.visibility_now() ==
        doctest::Approx(0.86 * std::exp(-4.0)).epsilon(1e-12));
  lab.set_delay(-0.4);
  CHECK(lab.visibility_now() ==
        doctest::Approx(0.86 * std::exp(-4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(lab.set_delay(std::nan("")), std::invalid_argument);
}

TEST_CASE("singles rates: dark floor, light term, delay independence") {
  SourceModel src;
  src.pair_rate = 0.0;
  DetectorModel det;
  det.dark_rate = 75.0;
  LabState dark_lab(small_fiber(2), src, det);
  CHECK(dark_lab.singles_rate(3, DetectorArm::F1) == doctest::Approx(75.0));
  CHECK(dark_lab.singles_rate(3, DetectorArm::F2) == doctest::Approx(75.0));

  LabState lab = small_lab(2);
  double s0 = lab.singles_rate(5, DetectorArm::F1);
  lab.set_delay(0.37);
  CHECK(lab.singles_rate(5, DetectorArm::F1) == doctest::Approx(s0));

  // manual formula: pair_rate * eff * (I_h + I_v)/2, no dark counts here
  IntensityImage h = lab.intensity_image(PhotonSelect::H, 1.0);
  IntensityImage v = lab.intensity_image(PhotonSelect::V, 1.0);
  double expected = 0.5 * (h.counts[5] + v.counts[5]);  // scale already has rate
  CHECK(lab.singles_rate(5, DetectorArm::F1) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("noiseless coincidences equal rate times duration exactly") {
  LabState lab = small_lab(6);
  lab.set_delay(0.0);
  CoincidenceResult c1 = lab.count_coincidences(2, 17, 123.0);
  CoincidenceResult c2 = lab.count_coincidences(2, 17, 246.0);
  CHECK(c1.rate == doctest::Approx(c2.rate).epsilon(1e-14));
  CHECK(c1.counts == doctest::Approx(c1.rate * 123.0).epsilon(1e-14));
  CHECK_THROWS_AS(lab.count_coincidences(2, 2, 10.0), std::domain_error);
  CHECK_THROWS_AS(lab.count_coincidences(2, 17, 0.0), std::invalid_argument);
}

TEST_CASE("poisson counting reproduces the rate statistics") {
  SourceModel src;
  DetectorModel det;
  det.noise_mode = NoiseMode::Poisson;
  det.seed = 77;
  LabState noiseless(small_fiber(20), src, DetectorModel{});
  LabState lab(small_fiber(20), src, det);
  noiseless.set_delay(0.0);
  lab.set_delay(0.0);

  double expected = noiseless.count_coincidences(1, 25, 50.0).counts;
  const int trials = 3000;
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    double x = lab.count_coincidences(1, 25, 50.0).counts;
    CHECK(x == std::floor(x));  // integer counts under poisson
    s += x;
    s2 += x * x;
  }
  double mean = s / trials;
  double var = s2 / trials - mean * mean;
  CHECK(std::abs(mean - expected) < 4.0 * std::sqrt(expected / trials));
  CHECK(var / expected > 0.9);
  CHECK(var / expected < 1.1);
}

TEST_CASE("accidental coincidences equal the singles product times the window") {
  SourceModel src;
  src.pair_rate = 0.0;  // kill correlated pairs, keep dark-count singles
  DetectorModel det;
  det.dark_rate = 1000.0;
  LabState lab(small_fiber(3), src, det);
  CoincidenceResult c = lab.count_coincidences(0, 29, 100.0);
  CHECK(c.rate == doctest::Approx(1000.0 * 1000.0 * 2.5e-9).epsilon(1e-12));
}

TEST_CASE("probe_intensity matches the oracle field calculation") {
  LabState lab = small_lab(14);
  TransmissionMatrix truth = lab.true_transmission_matrix();
  CVec field = CVec::Zero(50);
  field[7] = Cx(1.0 / std::sqrt(2.0));
  field[30] = Cx(0.0, 1.0 / std::sqrt(2.0));

  double exposure = 0.02, flux = 5e5;
  RVec counts = lab.probe_intensity(field, Cx(0.0), exposure, flux);
  CVec e = truth.m * field;
  for (int p = 0; p < 30; ++p) {
    CHECK(counts[p] ==
          doctest::Approx(std::norm(e[p]) * exposure * flux).epsilon(1e-10));
  }

  Cx ref(0.3, -0.2);
  RVec counts_ref = lab.probe_intensity(field, ref, exposure, flux);
  for (int p = 0; p < 30; ++p) {
    CHECK(counts_ref[p] ==
          doctest::Approx(std::norm(e[p] + ref) * exposure * flux)
              .epsilon(1e-10));
  }
}

TEST_CASE("monitored positions carry grid coordinates and labels") {
  LabState lab = small_lab();
  OutputPosition pos = lab.position(17);
  CHECK(pos.index == 17);
  CHECK(pos.label == "M17");
  CHECK(pos.gx == 17 % lab.fiber().grid_w);
  CHECK(pos.gy == 17 / lab.fiber().grid_w);
  CHECK_THROWS_AS(lab.position(30), std::invalid_argument);
}

TEST_CASE("speckle statistics of a single-mode input") {
  FiberConfig cfg;
  cfg.n_in_h = 180;
  cfg.n_in_v = 190;
  cfg.n_out = 100;
  double contrast_sum = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = 300 + static_cast<std::uint64_t>(s);
    LabState lab(cfg, SourceModel{}, DetectorModel{});
    lab.set_input_field(SlmHalf::H, basis(180, 3));
    IntensityImage img = lab.intensity_image(PhotonSelect::H, 1.0);
    double grains = speckle_grain_count(img);
    CHECK(grains >= 20.0);
    CHECK(grains <= 100.0);
    contrast_sum += speckle_contrast(img);
  }
  // fully developed speckle has unit contrast
  CHECK(contrast_sum / seeds == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("lab state validates inputs") {
  LabState lab = small_lab();
  CHECK_THROWS_AS(lab.set_input_field(SlmHalf::H, basis(9, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lab.set_input_field(SlmHalf::H, CVec::Zero(24)),
                  std::invalid_argument);
  SlmPattern p;
  p.half = SlmHalf::H;
  p.phases.assign(5, 0.0);
  CHECK_THROWS_AS(lab.set_slm(SlmHalf::H, p), std::invalid_argument);
  CHECK_THROWS_AS(lab.intensity_image(PhotonSelect::H, 0.0),
                  std::invalid_argument);

  FiberConfig bad = small_fiber();
  bad.n_out = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  DetectorModel det;
  det.efficiency = 1.5;
  CHECK_THROWS_AS(det.validate(), std::invalid_argument);
  SourceModel src;
  src.visibility_v0 = -0.1;
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
}
