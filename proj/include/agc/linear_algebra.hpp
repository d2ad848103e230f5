#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "agc/error.hpp"

namespace agc {

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
/// The series runs until the next term is negligible relative to the sum.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw StructuralError("expm needs a square matrix");
  if (!a.allFinite()) throw NumericError("expm of a matrix with non-finite entries");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;

  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < 64; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-17 * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  if (!sum.allFinite()) throw NumericError("expm overflowed");
  return sum;
}

struct DiscreteModel {
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;
};

/// Zero-order-hold discretization through the augmented exponential
///   exp([[A, B], [0, 0]] h) = [[Ad, Bd], [0, I]].
inline DiscreteModel zoh_discretize(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw StructuralError("sample time must be > 0");
  if (a.rows() != a.cols() || b.rows() != a.rows()) throw StructuralError("A and B dimensions disagree");
  if (!a.allFinite() || !b.allFinite()) throw NumericError("non-finite entries in A or B");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * h;
  aug.topRightCorner(n, m) = b * h;
  const Eigen::MatrixXd e = expm(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

struct RiccatiSolution {
  Eigen::MatrixXd P;  // cost-to-go
  Eigen::MatrixXd K;  // u = -K x
  std::size_t iterations = 0;
};

/// Gain (R + B'PB)^-1 B'PA for a given cost matrix.
inline Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& bd, const Eigen::MatrixXd& r,
                                const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd s = r + bd.transpose() * p * bd;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success) throw NumericError("R + B'PB is not invertible");
  return ldlt.solve(bd.transpose() * p * ad);
}

/// Discrete algebraic Riccati equation by fixed-point (value) iteration from
/// P0 = Q. Stops when successive iterates differ by less than `tolerance`
/// in max-abs.
inline RiccatiSolution solve_dare(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& bd, const Eigen::MatrixXd& q,
                                  const Eigen::MatrixXd& r, double tolerance = 1e-12,
                                  std::size_t max_iterations = 100000) {
  const Eigen::Index n = ad.rows();
  const Eigen::Index m = bd.cols();
  if (ad.cols() != n || bd.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m)
    throw StructuralError("DARE operand dimensions disagree");
  if (!ad.allFinite() || !bd.allFinite() || !q.allFinite() || !r.allFinite())
    throw NumericError("non-finite DARE operand");
  if (!q.isApprox(q.transpose(), 1e-12) && q.norm() > 0) throw StructuralError("Q must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> r_llt(r);
  if (r_llt.info() != Eigen::Success || !r.isApprox(r.transpose(), 1e-12))
    throw StructuralError("R must be symmetric positive definite");

  Eigen::MatrixXd p = q;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    const Eigen::MatrixXd k = lqr_gain(ad, bd, r, p);
    Eigen::MatrixXd next = ad.transpose() * p * ad - ad.transpose() * p * bd * k + q;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw NumericError("DARE iteration diverged", it);
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (change < tolerance) return {p, lqr_gain(ad, bd, r, p), it};
  }
  throw ConvergenceError("DARE fixed-point iteration did not converge within " + std::to_string(max_iterations) +
                         " iterations");
}

}  // namespace agc
