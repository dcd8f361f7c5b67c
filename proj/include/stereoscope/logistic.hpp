#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "stereoscope/parallel.hpp"
#include "stereoscope/tfidf.hpp"

namespace stereoscope {

enum class Penalty { none, l1, l2 };

std::string_view to_string(Penalty p);
Penalty parse_penalty(std::string_view s);  // throws UsageError

struct LogisticOptions {
  Penalty penalty = Penalty::l1;
  double C = 1.0;  // inverse regularisation strength
  std::uint64_t seed = 42;
  int max_iterations = 1000;
  double tolerance = 1e-6;  // on the max-norm of the (sub)gradient
  int lbfgs_memory = 10;
  Exec exec = Exec::parallel;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  Penalty penalty = Penalty::l1;
  double C = 1.0;

  double decision(const SparseMatrix& X, std::size_t row) const { return bias + X.row_dot(row, weights); }
  double predict_proba(const SparseMatrix& X, std::size_t row) const;
  std::vector<double> predict_proba(const SparseMatrix& X, Exec exec = Exec::parallel) const;
  // Fraction of weights that are exactly zero.
  double sparsity() const;
};

struct TrainingTrace {
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;       // max-norm of the optimality measure at the end
  std::vector<double> objective;    // objective after every accepted iterate, starting at w = 0
};

struct TrainResult {
  LogisticModel model;
  TrainingTrace trace;
};

/// Minimises  mean_i NLL(y_i | b + w.x_i) + R(w) / (C * N)
/// with R = ||w||_1 (l1), ||w||^2 / 2 (l2) or 0 (none). The bias is never
/// penalised.
///
/// none/l2 use L-BFGS with an Armijo backtracking line search; l1 uses
/// monotone FISTA with backtracking on the Lipschitz estimate. Both start
/// from zero and are deterministic; the objective never increases between
/// accepted iterates. Stops when the (minimum-norm sub)gradient max-norm is
/// within tolerance or after max_iterations.
///
/// Throws DataError when y holds a single class, lengths mismatch, or X has
/// non-finite entries.
TrainResult train_logistic(const SparseMatrix& X, std::span<const int> y, const LogisticOptions& opts);

// Objective and gradient at (w, b); gradient has dim+1 entries, bias last.
// Only the smooth part for l1. Exposed for tests.
double logistic_objective(const SparseMatrix& X, const SparseMatrix& Xt, std::span<const int> y,
                          std::span<const double> theta, double l2, std::vector<double>* grad, Exec exec);

double sigmoid(double z);

}  // namespace stereoscope
