#pragma once

#include <string>

#include "qwlab/numcore.hpp"

namespace qwlab {

enum class TmProvenance { Oracle, Measured };
enum class TmBasis { InputMode, SlmMacropixel };

// Complex linear map from the two input-mode blocks (H columns first,
// then V) to the monitored output modes.
struct TransmissionMatrix {
  CMat m;              // n_out x (n_in_h + n_in_v)
  int n_in_h = 0;
  TmProvenance provenance = TmProvenance::Oracle;
  TmBasis basis = TmBasis::InputMode;

  int n_out() const { return static_cast<int>(m.rows()); }
  int n_in() const { return static_cast<int>(m.cols()); }
  int n_in_v() const { return n_in() - n_in_h; }

  auto h_block() const { return m.leftCols(n_in_h); }
  auto v_block() const { return m.rightCols(n_in_v()); }

  // every row scaled to unit norm; rows of exactly zero norm are left as-is
  TransmissionMatrix row_normalized() const;

  void validate() const;  // dimensions, finiteness
};

// Right-multiplies by a basis-change matrix whose columns express the new
// input modes in the current basis.  Column count of `tm` must match the
// row count of `basis_map`.
TransmissionMatrix change_basis(const TransmissionMatrix& tm,
                                const CMat& basis_map,
                                TmBasis new_basis = TmBasis::SlmMacropixel);

/*
 * QWTM container, version 1. Fixed little-endian layout:
 *
 *   bytes 0-3    magic "QWTM"
 *   bytes 4-7    u32 version (1)
 *   bytes 8-11   u32 rows
 *   bytes 12-15  u32 cols
 *   bytes 16-19  u32 n_in_h
 *   byte  20     u8 provenance (0 = oracle, 1 = measured)
 *   bytes 21-27  zero padding
 *   then rows*cols complex entries, row-major, each (f64 real, f64 imag)
 */
void save_qwtm(const std::string& path, const TransmissionMatrix& tm);
TransmissionMatrix load_qwtm(const std::string& path);

}  // namespace qwlab
