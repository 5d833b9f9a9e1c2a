#include "hjam/kalman.hpp"

#include "hjam/errors.hpp"

#include <cmath>
#include <string>

namespace hjam {
namespace {

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double min_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

void LtiSystem::validate(const ValidationOptions& opts) const {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw ValidationError("A must be a non-empty square matrix");
  if (C.cols() != n || C.rows() == 0) throw ValidationError("C must have as many columns as A");
  if (W.rows() != n || W.cols() != n) throw ValidationError("W must match the dimension of A");
  if (V.rows() != C.rows() || V.cols() != C.rows())
    throw ValidationError("V must be square with the row count of C");
  if (!A.allFinite() || !C.allFinite() || !W.allFinite() || !V.allFinite())
    throw ValidationError("system matrices must be finite");
  if (max_abs(W - W.transpose()) > opts.tol_psd) throw ValidationError("W is not symmetric");
  if (max_abs(V - V.transpose()) > opts.tol_psd) throw ValidationError("V is not symmetric");
  if (min_eigenvalue(W) < -opts.tol_psd) throw ValidationError("W is not positive semidefinite");
  if (min_eigenvalue(V) <= 0.0) throw ValidationError("V is not positive definite");
  if (!opts.allow_stable) {
    const double norm = spectral_norm(A);
    if (norm < 1.0)
      throw ValidationError("||A|| = " + std::to_string(norm) +
                            " < 1; pass allow_stable to run anyway");
  }
}

Matrix prediction(const LtiSystem& sys, const Matrix& X) {
  return symmetrize(sys.A * X * sys.A.transpose() + sys.W);
}

Matrix measurement_update(const LtiSystem& sys, const Matrix& X) {
  const Matrix innovation = sys.C * X * sys.C.transpose() + sys.V;
  Eigen::LDLT<Matrix> ldlt(innovation);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0)
    throw NumericalError("innovation covariance C X C' + V is not invertible");
  const Matrix XCt = X * sys.C.transpose();
  return symmetrize(X - XCt * ldlt.solve(XCt.transpose()));
}

RiccatiMaps riccati_maps(const LtiSystem& sys, const Matrix& X) {
  RiccatiMaps out;
  out.h = prediction(sys, X);
  out.g = measurement_update(sys, out.h);
  return out;
}

std::vector<double> trace_powers(const LtiSystem& sys, const Matrix& p_bar, std::size_t count) {
  std::vector<double> table;
  table.reserve(count);
  Matrix X = p_bar;
  for (std::size_t t = 0; t < count; ++t) {
    table.push_back(X.trace());
    if (t + 1 < count) X = prediction(sys, X);
  }
  return table;
}

SteadyState steady_state(const LtiSystem& sys, std::size_t horizon, const SteadyStateOptions& opts) {
  if (!(opts.tol_riccati > 0.0)) throw ValidationError("tol_riccati must be positive");
  SteadyState out;
  Matrix X = sys.W;
  double delta = 0.0;
  std::size_t k = 0;
  for (; k < opts.max_iter; ++k) {
    Matrix next = riccati_maps(sys, X).g;
    delta = max_abs(next - X);
    X = std::move(next);
    if (delta < opts.tol_riccati) break;
  }
  if (k == opts.max_iter)
    throw ConvergenceError("Riccati fixed-point iteration did not converge", delta);
  out.p_bar = X;
  out.iterations = k + 1;
  out.residual = max_abs(riccati_maps(sys, X).g - X);
  out.trace_table = trace_powers(sys, X, horizon + 2);
  return out;
}

double spectral_norm(const Matrix& A, double tol, std::size_t max_iter) {
  if (A.rows() != A.cols()) throw ValidationError("spectral_norm expects a square matrix");
  if (A.size() == 0) return 0.0;
  const Matrix AtA = A.transpose() * A;
  // Start off any axis so a diagonal A cannot trap the iteration in a
  // non-dominant eigenvector.
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(A.cols(), 1.0, 2.0).normalized();
  double lambda = 0.0;
  for (std::size_t k = 0; k < max_iter; ++k) {
    Eigen::VectorXd y = AtA * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    const double next = x.dot(y);
    x = y / norm;
    if (std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace hjam
