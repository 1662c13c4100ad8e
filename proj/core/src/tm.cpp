#include "qwlab/tm.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qwlab {

namespace {

constexpr std::array<char, 4> kMagic = {'Q', 'W', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF),
  };
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

TransmissionMatrix TransmissionMatrix::row_normalized() const {
  TransmissionMatrix out = *this;
  for (int r = 0; r < out.m.rows(); ++r) {
    double norm = out.m.row(r).norm();
    if (norm > 0.0) out.m.row(r) /= norm;
  }
  return out;
}

void TransmissionMatrix::validate() const {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("TransmissionMatrix: empty matrix");
  }
  if (n_in_h < 0 || n_in_h > n_in()) {
    throw std::invalid_argument("TransmissionMatrix: n_in_h out of range");
  }
  if (!all_finite(m)) {
    throw std::invalid_argument("TransmissionMatrix: non-finite entries");
  }
}

TransmissionMatrix change_basis(const TransmissionMatrix& tm,
                                const CMat& basis_map, TmBasis new_basis) {
  tm.validate();
  if (basis_map.rows() != tm.m.cols()) {
    throw std::invalid_argument(
        "change_basis: basis_map row count must match input-mode count");
  }
  if (!all_finite(basis_map)) {
    throw std::invalid_argument("change_basis: non-finite basis_map");
  }
  TransmissionMatrix out;
  out.m = tm.m * basis_map;
  out.n_in_h = tm.n_in_h;
  out.provenance = tm.provenance;
  out.basis = new_basis;
  return out;
}

void save_qwtm(const std::string& path, const TransmissionMatrix& tm) {
  tm.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw std::runtime_error("save_qwtm: cannot open '" + path + "' for writing");
  }
  os.write(kMagic.data(), 4);
  put_u32_le(os, kVersion);
  put_u32_le(os, static_cast<std::uint32_t>(tm.m.rows()));
  put_u32_le(os, static_cast<std::uint32_t>(tm.m.cols()));
  put_u32_le(os, static_cast<std::uint32_t>(tm.n_in_h));
  unsigned char prov = tm.provenance == TmProvenance::Measured ? 1 : 0;
  os.write(reinterpret_cast<const char*>(&prov), 1);
  const char pad[7] = {0, 0, 0, 0, 0, 0, 0};
  os.write(pad, 7);
  for (int r = 0; r < tm.m.rows(); ++r) {
    for (int c = 0; c < tm.m.cols(); ++c) {
      put_f64_le(os, tm.m(r, c).real());
      put_f64_le(os, tm.m(r, c).imag());
    }
  }
  if (!os) {
    throw std::runtime_error("save_qwtm: write failed for '" + path + "'");
  }
}

TransmissionMatrix load_qwtm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("load_qwtm: cannot open '" + path + "'");
  }
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (!is || magic != kMagic) {
    throw std::runtime_error("load_qwtm: '" + path + "' is not a QWTM file");
  }
  std::uint32_t version = get_u32_le(is);
  if (version != kVersion) {
    throw std::runtime_error("load_qwtm: unsupported QWTM version in '" + path + "'");
  }
  std::uint32_t rows = get_u32_le(is);
  std::uint32_t cols = get_u32_le(is);
  std::uint32_t n_in_h = get_u32_le(is);
  unsigned char prov = 0;
  is.read(reinterpret_cast<char*>(&prov), 1);
  char pad[7];
  is.read(pad, 7);
  if (!is || rows < 1 || cols < 1 || n_in_h > cols || prov > 1) {
    throw std::runtime_error("load_qwtm: corrupt header in '" + path + "'");
  }

  TransmissionMatrix tm;
  tm.m.resize(rows, cols);
  tm.n_in_h = static_cast<int>(n_in_h);
  tm.provenance = prov == 1 ? TmProvenance::Measured : TmProvenance::Oracle;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      double re = get_f64_le(is);
      double im = get_f64_le(is);
      tm.m(r, c) = Cx(re, im);
    }
  }
  if (!is) {
    throw std::runtime_error("load_qwtm: truncated payload in '" + path + "'");
  }
  return tm;
}

}  // namespace qwlab
