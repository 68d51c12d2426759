// Copyright 2026 The hfgt-watershed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense verification path. Deliberately shares nothing with the sparse solver
// beyond the QuadraticProgram it reads: plain row-major storage, row
// equilibration and textbook partial-pivoting LU.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hfgt/error.hpp"
#include "hfgt/estimator.hpp"

namespace hfgt {

namespace {

class DenseLu {
 public:
  explicit DenseLu(std::size_t n) : n_(n), a_(n * n, 0.0), perm_(n) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }

  // In-place Doolittle with row pivoting; false on an exactly zero pivot.
  bool factor() {
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t piv = k;
      double best = std::abs(at(k, k));
      for (std::size_t r = k + 1; r < n_; ++r) {
        const double v = std::abs(at(r, k));
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (best == 0.0) return false;
      if (piv != k) {
        std::swap_ranges(a_.begin() + static_cast<std::ptrdiff_t>(k * n_),
                         a_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n_),
                         a_.begin() + static_cast<std::ptrdiff_t>(piv * n_));
        std::swap(perm_[k], perm_[piv]);
      }
      const double pivot = at(k, k);
      const double* krow = &a_[k * n_];
      for (std::size_t r = k + 1; r < n_; ++r) {
        double* row = &a_[r * n_];
        if (row[k] == 0.0) continue;
        const double l = row[k] / pivot;
        row[k] = l;
        for (std::size_t c = k + 1; c < n_; ++c) row[c] -= l * krow[c];
      }
    }
    return true;
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    std::vector<double> y(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[perm_[i]];
      const double* row = &a_[i * n_];
      for (std::size_t j = 0; j < i; ++j) s -= row[j] * y[j];
      y[i] = s;
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = y[i];
      const double* row = &a_[i * n_];
      for (std::size_t j = i + 1; j < n_; ++j) s -= row[j] * y[j];
      y[i] = s / row[i];
    }
    return y;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
  std::vector<std::size_t> perm_;
};

}  // namespace

QpSolution dense_oracle_solve_qp(const QuadraticProgram& qp, const SolveOptions& options) {
  const std::size_t n = qp.n_variables();
  const std::size_t m = qp.n_rows();
  if (n > kDenseOracleMaxVariables) {
    throw SolverError("dense oracle limited to " + std::to_string(kDenseOracleMaxVariables) +
                      " variables, problem has " + std::to_string(n));
  }
  if (static_cast<std::size_t>(qp.constraint_matrix.cols()) != n ||
      static_cast<std::size_t>(qp.constraint_matrix.rows()) != m) {
    throw ValidationError("quadratic program blocks have inconsistent sizes");
  }
  const std::size_t N = n + m;

  std::vector<double> full(N * N, 0.0);
  for (std::size_t i = 0; i < n; ++i) full[i * N + i] = qp.hessian_diag[static_cast<Eigen::Index>(i)];
  for (Eigen::Index j = 0; j < qp.constraint_matrix.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.constraint_matrix, j); it; ++it) {
      const auto r = n + static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(it.col());
      full[r * N + c] += it.value();
      full[c * N + r] += it.value();
    }
  }
  std::vector<double> rhs(N, 0.0);
  for (std::size_t r = 0; r < m; ++r) rhs[n + r] = qp.rhs[static_cast<Eigen::Index>(r)];

  std::vector<double> row_scale(N, 1.0);
  DenseLu lu(N);
  for (std::size_t r = 0; r < N; ++r) {
    double mx = 0.0;
    for (std::size_t c = 0; c < N; ++c) mx = std::max(mx, std::abs(full[r * N + c]));
    if (mx > 0.0) row_scale[r] = 1.0 / mx;
    for (std::size_t c = 0; c < N; ++c) lu.at(r, c) = full[r * N + c] * row_scale[r];
  }

  QpSolution sol;
  sol.messages.push_back("dense oracle");
  if (!lu.factor()) {
    sol.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    sol.multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    evaluate_residuals(qp, sol);
    sol.status = SolveStatus::Failed;
    sol.messages.push_back("singular KKT matrix");
    return sol;
  }

  auto scaled = [&](const std::vector<double>& v) {
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = v[i] * row_scale[i];
    return out;
  };
  std::vector<double> z = lu.solve(scaled(rhs));
  for (int step = 0; step < std::max(options.max_refinement_steps, 2); ++step) {
    std::vector<double> r(rhs);
    for (std::size_t i = 0; i < N; ++i) {
      const double* row = &full[i * N];
      double s = 0.0;
      for (std::size_t j = 0; j < N; ++j) s += row[j] * z[j];
      r[i] -= s;
    }
    const auto dz = lu.solve(scaled(r));
    for (std::size_t i = 0; i < N; ++i) z[i] += dz[i];
    ++sol.refinement_steps;
  }

  sol.x.resize(static_cast<Eigen::Index>(n));
  sol.multipliers.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) sol.x[static_cast<Eigen::Index>(i)] = z[i];
  for (std::size_t r = 0; r < m; ++r) sol.multipliers[static_cast<Eigen::Index>(r)] = z[n + r];
  evaluate_residuals(qp, sol);
  double bnorm = 0.0;
  for (std::size_t r = 0; r < m; ++r) bnorm = std::max(bnorm, std::abs(rhs[n + r]));
  sol.status = sol.x.allFinite() && sol.constraint_residual <= options.tol * (1.0 + bnorm)
                   ? SolveStatus::Converged
                   : SolveStatus::NotConverged;
  return sol;
}

}  // namespace hfgt
