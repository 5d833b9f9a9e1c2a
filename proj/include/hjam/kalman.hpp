#pragma once

// Process/sensor models and the steady-state quantities the attack reward needs.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace hjam {

using Matrix = Eigen::MatrixXd;

/// Tolerances used when validating hand-entered system matrices.
struct ValidationOptions {
  double tol_psd = 1e-9;
  /// Accept systems with spectral norm below one. The structural guarantees
  /// do not cover that case, but every routine still runs.
  bool allow_stable = false;
};

/// One process observed by one sensor: x' = A x + w, y = C x + v.
struct LtiSystem {
  Matrix A;
  Matrix C;
  Matrix W;
  Matrix V;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index obs_dim() const { return C.rows(); }

  /// Throws ValidationError on shape mismatch, W not PSD, V not PD, or
  /// ||A|| < 1 without `allow_stable`. Detectability is not checked.
  void validate(const ValidationOptions& opts = {}) const;
};

struct RiccatiMaps {
  Matrix h;  // A X A' + W
  Matrix g;  // g~(h(X))
};

/// Evaluates the open-loop prediction map h and the one-step Kalman map g at X.
/// Outputs are symmetrized. Throws NumericalError if the innovation covariance
/// cannot be inverted.
RiccatiMaps riccati_maps(const LtiSystem& sys, const Matrix& X);

/// The measurement-update map g~(X) = X - X C' (C X C' + V)^-1 C X.
Matrix measurement_update(const LtiSystem& sys, const Matrix& X);

/// h(X) = A X A' + W, symmetrized.
Matrix prediction(const LtiSystem& sys, const Matrix& X);

struct SteadyState {
  Matrix p_bar;
  /// trace_table[t] = Tr(h^t(p_bar)), t = 0..L+1.
  std::vector<double> trace_table;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct SteadyStateOptions {
  double tol_riccati = 1e-10;
  std::size_t max_iter = 1'000'000;
};

/// Fixed-point iteration X <- g(X) from X0 = W, then fills the trace table up
/// to index `horizon` + 1. Throws ConvergenceError when max_iter is exhausted.
SteadyState steady_state(const LtiSystem& sys, std::size_t horizon,
                         const SteadyStateOptions& opts = {});

/// Tr(h^t(p_bar)) for t = 0..count-1. Used to extend a table past the
/// truncation bound.
std::vector<double> trace_powers(const LtiSystem& sys, const Matrix& p_bar, std::size_t count);

/// Largest singular value via power iteration on A'A.
double spectral_norm(const Matrix& A, double tol = 1e-12, std::size_t max_iter = 100'000);

/// max |M_ij|
double max_abs(const Matrix& M);

}  // namespace hjam
