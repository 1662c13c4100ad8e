#include "qwlab/control.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace qwlab {

namespace {

double wrap_phase(double p) {
  p = std::fmod(p, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  return p;
}

// conjugated row restricted to one half, weighted by the inverse row norm
CVec conjugate_row(const TransmissionMatrix& tm, int row, SlmHalf half,
                   bool balance) {
  auto block = half == SlmHalf::H ? tm.h_block() : tm.v_block();
  CVec r = block.row(row).conjugate().transpose();
  double norm = r.norm();
  if (norm == 0.0) {
    throw std::domain_error(
        "inverse design: target row vanishes on the " +
        std::string(half == SlmHalf::H ? "H" : "V") + " half");
  }
  return balance ? CVec(r / norm) : r;
}

void check_targets(const TransmissionMatrix& tm, int x, int y) {
  if (x < 0 || y < 0 || x >= tm.n_out() || y >= tm.n_out()) {
    throw std::invalid_argument("inverse design: target index out of range");
  }
  if (x == y) {
    throw std::domain_error(
        "inverse design: coincident targets x == y are degenerate");
  }
}

}  // namespace

SlmPattern focus_single(const TransmissionMatrix& tm, int target, SlmHalf half) {
  tm.validate();
  if (target < 0 || target >= tm.n_out()) {
    throw std::invalid_argument("focus_single: target index out of range");
  }
  auto block = half == SlmHalf::H ? tm.h_block() : tm.v_block();
  if (block.row(target).norm() == 0.0) {
    throw std::domain_error("focus_single: target row vanishes on this half");
  }
  SlmPattern pattern;
  pattern.half = half;
  pattern.phases.resize(static_cast<std::size_t>(block.cols()));
  for (int i = 0; i < block.cols(); ++i) {
    pattern.phases[static_cast<std::size_t>(i)] =
        wrap_phase(-std::arg(block(target, i)));
  }
  return pattern;
}

std::pair<SlmPattern, SlmPattern> focus_independent(const TransmissionMatrix& tm,
                                                    int x, int y) {
  check_targets(tm, x, y);
  return {focus_single(tm, x, SlmHalf::H), focus_single(tm, y, SlmHalf::V)};
}

std::pair<SlmPattern, SlmPattern> superposition_masks(
    const TransmissionMatrix& tm, const SuperpositionTarget& target) {
  tm.validate();
  check_targets(tm, target.x, target.y);
  auto make_half = [&](SlmHalf half, double phase) {
    CVec a = conjugate_row(tm, target.x, half, /*balance=*/true);
    CVec b = conjugate_row(tm, target.y, half, /*balance=*/true);
    CVec field = a + std::polar(1.0, phase) * b;
    return phase_only_project(field, half);
  };
  return {make_half(SlmHalf::H, target.phase_h),
          make_half(SlmHalf::V, target.phase_v)};
}

RVec TwoPhotonInputField::singular_values() const {
  Eigen::JacobiSVD<CMat> svd(b);
  return svd.singularValues();
}

TwoPhotonInputField ttm_inverse_field(const TransmissionMatrix& tm, int x, int y) {
  tm.validate();
  check_targets(tm, x, y);
  TwoPhotonInputField field;
  field.x = x;
  field.y = y;
  field.h_x = conjugate_row(tm, x, SlmHalf::H, /*balance=*/false);
  field.h_y = conjugate_row(tm, y, SlmHalf::H, /*balance=*/false);
  field.v_x = conjugate_row(tm, x, SlmHalf::V, /*balance=*/false);
  field.v_y = conjugate_row(tm, y, SlmHalf::V, /*balance=*/false);
  field.b = field.h_x * field.v_y.transpose() + field.h_y * field.v_x.transpose();
  return field;
}

namespace {

CVec normalized_or_throw(CVec v, const char* what) {
  double n = v.norm();
  if (n == 0.0) {
    throw std::domain_error(std::string("separable_solutions: ") + what);
  }
  return v / n;
}

}  // namespace

SeparableSolution symmetric_solution(const TwoPhotonInputField& field,
                                     double phase) {
  Cx rot = std::polar(1.0, phase);
  CVec u = field.h_x / field.h_x.norm() + rot * (field.h_y / field.h_y.norm());
  CVec v = field.v_x / field.v_x.norm() + rot * (field.v_y / field.v_y.norm());
  SeparableSolution sol;
  sol.u = normalized_or_throw(std::move(u), "superposition field vanished");
  sol.v = normalized_or_throw(std::move(v), "superposition field vanished");
  sol.kind = SolutionKind::Superposition;
  sol.phase = phase;
  sol.label = "superposition";
  return sol;
}

std::vector<SeparableSolution> separable_solutions(
    const TwoPhotonInputField& field) {
  std::vector<SeparableSolution> out;

  SeparableSolution indep;
  indep.u = normalized_or_throw(field.h_x, "zero H factor");
  indep.v = normalized_or_throw(field.v_y, "zero V factor");
  indep.kind = SolutionKind::Independent;
  indep.label = "independent";
  out.push_back(std::move(indep));

  SeparableSolution swapped;
  swapped.u = normalized_or_throw(field.h_y, "zero H factor");
  swapped.v = normalized_or_throw(field.v_x, "zero V factor");
  swapped.kind = SolutionKind::IndependentSwapped;
  swapped.label = "independent-swapped";
  out.push_back(std::move(swapped));

  out.push_back(symmetric_solution(field, 0.0));
  return out;
}

SlmPattern phase_only_project(const CVec& field, SlmHalf half) {
  if (field.size() == 0) {
    throw std::invalid_argument("phase_only_project: empty field");
  }
  if (!all_finite(field)) {
    throw std::invalid_argument("phase_only_project: non-finite field");
  }
  if (field.norm() == 0.0) {
    throw std::domain_error("phase_only_project: zero field is degenerate");
  }
  SlmPattern pattern;
  pattern.half = half;
  pattern.phases.resize(static_cast<std::size_t>(field.size()));
  for (int i = 0; i < field.size(); ++i) {
    if (field[i] == Cx(0.0, 0.0)) {
      pattern.phases[static_cast<std::size_t>(i)] = 0.0;
      pattern.undefined_entries.push_back(i);
    } else {
      pattern.phases[static_cast<std::size_t>(i)] = wrap_phase(std::arg(field[i]));
    }
  }
  return pattern;
}

CosineFit fit_phase_law(const RMat& contrast,
                        const std::vector<double>& phases_h,
                        const std::vector<double>& phases_v) {
  if (contrast.rows() != static_cast<Eigen::Index>(phases_h.size()) ||
      contrast.cols() != static_cast<Eigen::Index>(phases_v.size())) {
    throw std::invalid_argument("fit_phase_law: grid shape mismatch");
  }
  std::vector<double> cos_d, sin_d, values;
  for (Eigen::Index i = 0; i < contrast.rows(); ++i) {
    for (Eigen::Index j = 0; j < contrast.cols(); ++j) {
      double c = contrast(i, j);
      if (!std::isfinite(c)) continue;
      double d = phases_h[static_cast<std::size_t>(i)] -
                 phases_v[static_cast<std::size_t>(j)];
      cos_d.push_back(std::cos(d));
      sin_d.push_back(std::sin(d));
      values.push_back(c);
    }
  }
  if (values.size() < 3) {
    throw std::invalid_argument("fit_phase_law: not enough finite grid points");
  }

  // normal equations for C ~ alpha cos(d) + beta sin(d)
  double scc = 0, sss = 0, scs = 0, syc = 0, sys = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    scc += cos_d[k] * cos_d[k];
    sss += sin_d[k] * sin_d[k];
    scs += cos_d[k] * sin_d[k];
    syc += values[k] * cos_d[k];
    sys += values[k] * sin_d[k];
  }
  double det = scc * sss - scs * scs;
  if (std::abs(det) < 1e-30) {
    throw std::domain_error("fit_phase_law: degenerate phase grid");
  }
  double alpha = (syc * sss - sys * scs) / det;
  double beta = (sys * scc - syc * scs) / det;

  CosineFit fit;
  fit.amplitude = std::hypot(alpha, beta);
  // A cos(d + phi0) = A cos(phi0) cos(d) - A sin(phi0) sin(d)
  fit.phase_offset = std::atan2(-beta, alpha);

  double mean_y = 0, mean_f = 0;
  std::vector<double> fitted(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    fitted[k] = alpha * cos_d[k] + beta * sin_d[k];
    mean_y += values[k];
    mean_f += fitted[k];
  }
  mean_y /= static_cast<double>(values.size());
  mean_f /= static_cast<double>(values.size());
  double cov = 0, vy = 0, vf = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    cov += (values[k] - mean_y) * (fitted[k] - mean_f);
    vy += (values[k] - mean_y) * (values[k] - mean_y);
    vf += (fitted[k] - mean_f) * (fitted[k] - mean_f);
  }
  fit.correlation = (vy > 0 && vf > 0) ? cov / std::sqrt(vy * vf) : 0.0;
  return fit;
}

}  // namespace qwlab
