#include "stereoscope/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "stereoscope/error.hpp"

namespace stereoscope {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l1_norm_weights(std::span<const double> theta) {
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < theta.size(); ++j) s += std::abs(theta[j]);
  return s;
}

struct Problem {
  const SparseMatrix& X;
  SparseMatrix Xt;
  std::span<const int> y;
  Exec exec;

  double eval(std::span<const double> theta, double l2, std::vector<double>* grad) const {
    return logistic_objective(X, Xt, y, theta, l2, grad, exec);
  }
};

void validate(const SparseMatrix& X, std::span<const int> y, const LogisticOptions& opts) {
  if (X.rows != y.size()) throw DataError("feature rows (" + std::to_string(X.rows) + ") and labels (" +
                                          std::to_string(y.size()) + ") differ in length");
  if (X.rows == 0) throw DataError("no training rows");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw DataError("labels must be 0 or 1");
  }
  if (!(has0 && has1)) throw DataError("training labels contain a single class");
  for (double v : X.values) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  if (opts.penalty != Penalty::none && !(opts.C > 0.0 && std::isfinite(opts.C))) {
    throw UsageError("C must be a positive finite number");
  }
  if (opts.max_iterations < 0) throw UsageError("max_iterations must be non-negative");
}

TrainResult run_lbfgs(const Problem& prob, double l2, const LogisticOptions& opts) {
  const std::size_t dim = prob.X.cols + 1;
  std::vector<double> theta(dim, 0.0), grad(dim), trial(dim), trial_grad(dim), dir(dim);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  TrainResult out;
  double f = prob.eval(theta, l2, &grad);
  out.trace.objective.push_back(f);

  int it = 0;
  while (it < opts.max_iterations && max_abs(grad) > opts.tolerance) {
    // Two-loop recursion.
    dir = grad;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * dot(S[k], dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] -= alpha[k] * Y[k][j];
    }
    if (!S.empty()) {
      const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
      for (double& d : dir) d *= gamma;
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * dot(Y[k], dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] += S[k][j] * (alpha[k] - beta);
    }
    for (double& d : dir) d = -d;
    double slope = dot(grad, dir);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t j = 0; j < dim; ++j) dir[j] = -grad[j];
      slope = dot(grad, dir);
    }

    double step = S.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(grad, grad))) : 1.0;
    double f_new = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      for (std::size_t j = 0; j < dim; ++j) trial[j] = theta[j] + step * dir[j];
      f_new = prob.eval(trial, l2, &trial_grad);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(dim), yv(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      s[j] = trial[j] - theta[j];
      yv[j] = trial_grad[j] - grad[j];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(yv, yv))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    theta.swap(trial);
    grad.swap(trial_grad);
    f = f_new;
    out.trace.objective.push_back(f);
    ++it;
  }
  out.trace.iterations = it;
  out.trace.gradient_norm = max_abs(grad);
  out.trace.converged = out.trace.gradient_norm <= opts.tolerance;
  out.model.weights.assign(theta.begin(), theta.end() - 1);
  out.model.bias = theta.back();
  return out;
}

// Minimum-norm element of the subdifferential of f + lambda*||w||_1.
double l1_optimality(std::span<const double> theta, std::span<const double> grad, double lambda) {
  double m = std::abs(grad.back());
  for (std::size_t j = 0; j + 1 < theta.size(); ++j) {
    double v;
    if (theta[j] > 0) v = std::abs(grad[j] + lambda);
    else if (theta[j] < 0) v = std::abs(grad[j] - lambda);
    else v = std::max(0.0, std::abs(grad[j]) - lambda);
    m = std::max(m, v);
  }
  return m;
}

TrainResult run_mfista(const Problem& prob, double lambda, const LogisticOptions& opts) {
  const std::size_t dim = prob.X.cols + 1;
  const auto n = static_cast<double>(prob.X.rows);
  std::vector<double> x(dim, 0.0), x_prev(dim, 0.0), yv(dim, 0.0), z(dim), gx(dim), gy(dim), gz(dim);

  // Trace bound on the Lipschitz constant of the mean logistic loss.
  double lipschitz = 0.0;
  for (std::size_t r = 0; r < prob.X.rows; ++r) {
    double sq = 1.0;
    for (std::size_t k = prob.X.row_ptr[r]; k < prob.X.row_ptr[r + 1]; ++k) sq += prob.X.values[k] * prob.X.values[k];
    lipschitz += sq;
  }
  lipschitz /= 4.0 * n;
  double L = std::max(lipschitz / 8.0, 1e-12);

  TrainResult out;
  double fx = prob.eval(x, 0.0, &gx);
  double Fx = fx + lambda * l1_norm_weights(x);
  out.trace.objective.push_back(Fx);
  double t = 1.0;
  int it = 0;
  while (it < opts.max_iterations && l1_optimality(x, gx, lambda) > opts.tolerance) {
    const double fy = prob.eval(yv, 0.0, &gy);
    double fz = 0.0;
    for (int tries = 0; tries < 200; ++tries) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = yv[j] - gy[j] / L;
        if (j + 1 == dim) {
          z[j] = v;
        } else {
          const double thr = lambda / L;
          z[j] = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
        }
      }
      fz = prob.eval(z, 0.0, nullptr);
      double quad = fy;
      double sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = z[j] - yv[j];
        quad += gy[j] * d;
        sq += d * d;
      }
      quad += 0.5 * L * sq;
      if (fz <= quad + 1e-15 * std::abs(quad)) break;
      L *= 2.0;
    }
    const double Fz = fz + lambda * l1_norm_weights(z);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    x_prev = x;
    const bool take_z = Fz <= Fx;
    if (take_z) {
      x = z;
      Fx = Fz;
    }
    for (std::size_t j = 0; j < dim; ++j) {
      yv[j] = x[j] + (t / t_next) * (z[j] - x[j]) + ((t - 1.0) / t_next) * (x[j] - x_prev[j]);
    }
    t = t_next;
    if (take_z) fx = prob.eval(x, 0.0, &gx);
    out.trace.objective.push_back(Fx);
    ++it;
    // Stalled: the extrapolated point made no progress; restart momentum.
    if (!take_z) {
      t = 1.0;
      yv = x;
    }
  }
  out.trace.iterations = it;
  out.trace.gradient_norm = l1_optimality(x, gx, lambda);
  out.trace.converged = out.trace.gradient_norm <= opts.tolerance;
  out.model.weights.assign(x.begin(), x.end() - 1);
  out.model.bias = x.back();
  return out;
}

}  // namespace

std::string_view to_string(Penalty p) {
  switch (p) {
    case Penalty::none: return "none";
    case Penalty::l1: return "l1";
    case Penalty::l2: return "l2";
  }
  return "none";
}

Penalty parse_penalty(std::string_view s) {
  if (s == "none") return Penalty::none;
  if (s == "l1" || s == "L1") return Penalty::l1;
  if (s == "l2" || s == "L2") return Penalty::l2;
  throw UsageError("unknown penalty '" + std::string(s) + "' (expected none, l1 or l2)");
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LogisticModel::predict_proba(const SparseMatrix& X, std::size_t row) const { return sigmoid(decision(X, row)); }

std::vector<double> LogisticModel::predict_proba(const SparseMatrix& X, Exec exec) const {
  std::vector<double> out(X.rows);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(X.rows); ++r) {
      out[static_cast<std::size_t>(r)] = predict_proba(X, static_cast<std::size_t>(r));
    }
  } else {
    for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict_proba(X, r);
  }
  return out;
}

double LogisticModel::sparsity() const {
  if (weights.empty()) return 0.0;
  const auto zeros = std::count(weights.begin(), weights.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(weights.size());
}

double logistic_objective(const SparseMatrix& X, const SparseMatrix& Xt, std::span<const int> y,
                          std::span<const double> theta, double l2, std::vector<double>* grad, Exec exec) {
  const std::size_t n = X.rows;
  const std::size_t d = X.cols;
  const std::span<const double> w = theta.first(d);
  const double b = theta[d];
  std::vector<double> resid(n);
  std::vector<double> loss_terms(n);
  const auto row_term = [&](std::size_t i) {
    const double z = b + X.row_dot(i, w);
    loss_terms[i] = softplus(z) - static_cast<double>(y[i]) * z;
    resid[i] = sigmoid(z) - static_cast<double>(y[i]);
  };
  double loss;
  double resid_sum;
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) row_term(static_cast<std::size_t>(i));
    loss = block_sum(n, [&](std::size_t i) { return loss_terms[i]; });
    resid_sum = block_sum(n, [&](std::size_t i) { return resid[i]; });
  } else {
    loss = 0.0;
    resid_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      row_term(i);
      loss += loss_terms[i];
      resid_sum += resid[i];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double penalty = 0.0;
  if (l2 > 0.0) penalty = 0.5 * l2 * dot(w, w);
  if (grad) {
    grad->assign(d + 1, 0.0);
    auto column = [&](std::size_t j) {
      (*grad)[j] = Xt.row_dot(j, resid) * inv_n + l2 * w[j];
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(d); ++j) column(static_cast<std::size_t>(j));
    } else {
      for (std::size_t j = 0; j < d; ++j) column(j);
    }
    (*grad)[d] = resid_sum * inv_n;
  }
  return loss * inv_n + penalty;
}

TrainResult train_logistic(const SparseMatrix& X, std::span<const int> y, const LogisticOptions& opts) {
  validate(X, y, opts);
  const Problem prob{X, X.transpose(), y, opts.exec};
  const double n = static_cast<double>(X.rows);
  TrainResult out;
  switch (opts.penalty) {
    case Penalty::none: out = run_lbfgs(prob, 0.0, opts); break;
    case Penalty::l2: out = run_lbfgs(prob, 1.0 / (opts.C * n), opts); break;
    case Penalty::l1: out = run_mfista(prob, 1.0 / (opts.C * n), opts); break;
  }
  out.model.penalty = opts.penalty;
  out.model.C = opts.C;
  return out;
}

}  // namespace stereoscope
