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

#ifndef HFGT_ESTIMATOR_HPP
#define HFGT_ESTIMATOR_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hfgt/measurement.hpp"
#include "hfgt/net.hpp"

namespace hfgt {

inline constexpr double kDefaultAlpha = 1e-10;  // flow penalty
inline constexpr double kDefaultBeta = 1e-12;   // buffer penalty
inline constexpr double kDefaultTolerance = 1e-8;

/// minimize 1/2 x' diag(h) x  subject to  A x = b.
struct QuadraticProgram {
  Eigen::VectorXd hessian_diag;
  Eigen::SparseMatrix<double> constraint_matrix;
  Eigen::VectorXd rhs;

  std::size_t n_variables() const { return static_cast<std::size_t>(hessian_diag.size()); }
  std::size_t n_rows() const { return static_cast<std::size_t>(rhs.size()); }
};

enum class SolveStatus { Converged, NotConverged, Failed };

std::string_view to_string(SolveStatus status);

struct SolveOptions {
  double tol = kDefaultTolerance;
  int max_refinement_steps = 3;
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // y in H x + A' y = 0
  double objective_value = 0.0;
  double constraint_residual = 0.0;  // ||A x - b||_inf
  double kkt_residual = 0.0;         // ||H x + A' y||_inf
  SolveStatus status = SolveStatus::Failed;
  int refinement_steps = 0;
  bool regularized = false;
  double regularization = 0.0;
  std::vector<std::size_t> suspect_rows;
  std::vector<std::string> messages;
};

/// Sparse route: symmetric Ruiz equilibration of the bordered KKT matrix
/// [[H, A'], [A, 0]], sparse LU, then iterative refinement against the
/// unscaled system. A small dual regularization -delta I is added only when
/// the factorization breaks down.
QpSolution solve_qp(const QuadraticProgram& qp, const SolveOptions& options = {});

/// Independent dense route for verification: row-equilibrated Gaussian
/// elimination with partial pivoting on the full bordered matrix. Throws
/// SolverError when the program has more than kDenseOracleMaxVariables.
inline constexpr std::size_t kDenseOracleMaxVariables = 2000;
QpSolution dense_oracle_solve_qp(const QuadraticProgram& qp, const SolveOptions& options = {});

/// Residuals recomputed from x and y alone.
void evaluate_residuals(const QuadraticProgram& qp, QpSolution& sol);

struct AssembleOptions {
  std::size_t k_steps = 1;
  double dt = 1.0;  // years
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
};

/// The watershed state estimator as a QP.
///
/// Variable layout (all blocks step-major):
///   [ Q_B[2..K+1] (K x places) | U[1..K] (K x capabilities) | E (one per row) ]
/// Q_B[1] = 0 is eliminated. Rows: K x places mass-balance rows
///   -Q_B[k+1] + Q_B[k] + dt M U[k] = 0, then one row per measurement
///   sum(coef U) - E = C.
/// Hessian diagonal: beta on Q_B, alpha on U, the measurement weight on E.
struct EstimationProblem {
  QuadraticProgram qp;
  std::size_t n_steps = 1;
  double dt = 1.0;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  std::size_t n_places = 0;
  std::size_t n_capabilities = 0;
  std::vector<MeasurementConstraint> measurements;

  std::size_t n_measurements() const { return measurements.size(); }
  /// step is 0-based: Q_B at step 0 here is Q_B[2].
  std::size_t qb_index(std::size_t step, std::size_t place) const {
    return step * n_places + place;
  }
  std::size_t u_index(std::size_t step, std::size_t capability) const {
    return n_steps * n_places + step * n_capabilities + capability;
  }
  std::size_t error_index(std::size_t measurement) const {
    return n_steps * (n_places + n_capabilities) + measurement;
  }
  std::size_t balance_row(std::size_t step, std::size_t place) const {
    return step * n_places + place;
  }
  std::size_t measurement_row(std::size_t measurement) const {
    return n_steps * n_places + measurement;
  }
};

/// Throws ValidationError for an empty capability set, k_steps == 0, a
/// non-positive dt or penalty, or terms outside the capability/step range.
/// An empty constraint list is allowed (the optimum is then zero) and warned.
EstimationProblem assemble_problem(const IncidenceMatrices& incidence,
                                   std::span<const MeasurementConstraint> constraints,
                                   const AssembleOptions& options = {},
                                   std::vector<std::string>* warnings = nullptr);

struct Solution {
  std::vector<Eigen::VectorXd> q_b;  // [step] over places, steps 2..K+1
  std::vector<Eigen::VectorXd> u;    // [step] over capabilities, steps 1..K
  Eigen::VectorXd errors;            // one per measurement
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  SolveStatus status = SolveStatus::Failed;
  int refinement_steps = 0;
  bool regularized = false;
  double regularization = 0.0;
  std::vector<std::size_t> suspect_rows;
  std::vector<std::string> messages;
  std::vector<std::string> negative_flows;  // diagnostics, not errors
};

Solution solve(const EstimationProblem& problem, const SolveOptions& options = {});
Solution dense_oracle_solve(const EstimationProblem& problem, const SolveOptions& options = {});

/// Maps a raw QP solution back onto the problem's blocks.
Solution unpack_solution(const EstimationProblem& problem, QpSolution qp_solution);

struct Statistics {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double l2 = 0.0;
};

Statistics summarize(std::vector<double> values);

struct FamilyResidual {
  ConstraintFamily family;
  std::size_t count = 0;
  Statistics error;            // |E|
  Statistics scaled_error;     // |E| / max(|C|, sqrt 2)
  Statistics row_residual;     // |row of (A x - b)|
};

/// Per-family summaries of the measurement errors; families with no rows are
/// left out.
std::vector<FamilyResidual> residual_report(const EstimationProblem& problem,
                                            const Solution& solution);

}  // namespace hfgt

#endif  // HFGT_ESTIMATOR_HPP
