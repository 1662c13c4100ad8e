#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qwlab/numcore.hpp"
#include "qwlab/tm.hpp"

using namespace qwlab;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TransmissionMatrix random_tm(int rows, int cols, int n_in_h, std::uint64_t seed) {
  Rng rng(seed, 0);
  TransmissionMatrix tm;
  tm.m.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) tm.m(r, c) = rng.complex_normal();
  tm.n_in_h = n_in_h;
  return tm;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("block accessors partition the matrix") {
  TransmissionMatrix tm = random_tm(4, 7, 3, 1);
  CHECK(tm.n_out() == 4);
  CHECK(tm.n_in() == 7);
  CHECK(tm.n_in_v() == 4);
  CHECK((tm.h_block() - tm.m.leftCols(3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((tm.v_block() - tm.m.rightCols(4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("row_normalized scales rows to unit norm and keeps zero rows") {
  TransmissionMatrix tm = random_tm(5, 6, 3, 2);
  tm.m.row(2).setZero();
  TransmissionMatrix n = tm.row_normalized();
  for (int r = 0; r < 5; ++r) {
    double norm = n.m.row(r).norm();
    if (r == 2) {
      CHECK(norm == 0.0);
    } else {
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("validate rejects malformed matrices") {
  TransmissionMatrix tm = random_tm(3, 5, 2, 3);
  CHECK_NOTHROW(tm.validate());

  TransmissionMatrix bad = tm;
  bad.n_in_h = 9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.n_in_h = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  TransmissionMatrix nan_tm = tm;
  nan_tm.m(0, 0) = Cx(std::nan(""), 0.0);
  CHECK_THROWS_AS(nan_tm.validate(), std::invalid_argument);

  TransmissionMatrix empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("change_basis right-multiplies and retags the basis") {
  TransmissionMatrix tm = random_tm(4, 6, 3, 4);
  // a DFT-like unitary map over all inputs
  CMat b(6, 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      b(r, c) = std::exp(Cx(0.0, kTwoPi * r * c / 6.0)) / std::sqrt(6.0);
  TransmissionMatrix mapped = change_basis(tm, b);
  CHECK(mapped.basis == TmBasis::SlmMacropixel);
  CHECK((mapped.m - tm.m * b).cwiseAbs().maxCoeff() < 1e-14);

  CMat wrong = CMat::Identity(5, 5);
  CHECK_THROWS_AS(change_basis(tm, wrong), std::invalid_argument);
}

TEST_CASE("qwtm round-trip is bit exact") {
  TransmissionMatrix tm = random_tm(6, 9, 4, 5);
  tm.provenance = TmProvenance::Measured;
  std::string p1 = temp_path("qwlab_rt1.qwtm");
  std::string p2 = temp_path("qwlab_rt2.qwtm");
  save_qwtm(p1, tm);
  TransmissionMatrix loaded = load_qwtm(p1);
  CHECK(loaded.n_in_h == tm.n_in_h);
  CHECK(loaded.provenance == TmProvenance::Measured);
  REQUIRE(loaded.m.rows() == tm.m.rows());
  REQUIRE(loaded.m.cols() == tm.m.cols());
  // exact binary doubles, not approximate
  for (int r = 0; r < tm.m.rows(); ++r)
    for (int c = 0; c < tm.m.cols(); ++c) CHECK(loaded.m(r, c) == tm.m(r, c));
  save_qwtm(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("qwtm loader rejects corrupt files") {
  std::string path = temp_path("qwlab_corrupt.qwtm");

  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(load_qwtm(path), std::runtime_error);

  TransmissionMatrix tm = random_tm(3, 4, 2, 6);
  save_qwtm(path, tm);
  std::string full = slurp(path);
  {
    std::ofstream os(path, std::ios::binary);
    os.write(full.data(), static_cast<std::streamsize>(full.size() - 10));
  }
  CHECK_THROWS_AS(load_qwtm(path), std::runtime_error);

  CHECK_THROWS_AS(load_qwtm(temp_path("qwlab_missing.qwtm")),
                  std::runtime_error);
  std::remove(path.c_str());
}
