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

#include "hfgt/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include "hfgt/error.hpp"

namespace hfgt {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double row_sum_norm(const SpMat& a) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index j = 0; j < a.outerSize(); ++j)
    for (SpMat::InnerIterator it(a, j); it; ++it) sums[it.row()] += std::abs(it.value());
  return inf_norm(sums);
}

SpMat build_kkt(const QuadraticProgram& qp, double delta) {
  const auto n = static_cast<Eigen::Index>(qp.n_variables());
  const auto m = static_cast<Eigen::Index>(qp.n_rows());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n + 2 * qp.constraint_matrix.nonZeros() + m));
  for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, qp.hessian_diag[i]);
  for (Eigen::Index j = 0; j < qp.constraint_matrix.outerSize(); ++j) {
    for (SpMat::InnerIterator it(qp.constraint_matrix, j); it; ++it) {
      trips.emplace_back(n + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), n + it.row(), it.value());
    }
  }
  if (delta != 0.0) {
    for (Eigen::Index r = 0; r < m; ++r) trips.emplace_back(n + r, n + r, -delta);
  }
  SpMat kkt(n + m, n + m);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();
  return kkt;
}

// Symmetric Ruiz scaling: returns d with every row/column of diag(d) K diag(d)
// having infinity norm close to one.
Eigen::VectorXd ruiz_scaling(const SpMat& kkt, int max_iter = 30, double target = 1e-3) {
  const Eigen::Index n = kkt.cols();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd norms(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    norms.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (SpMat::InnerIterator it(kkt, j); it; ++it) {
        const double v = std::abs(d[it.row()] * it.value() * d[j]);
        norms[j] = std::max(norms[j], v);
      }
    }
    double worst = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (norms[j] > 0.0) {
        d[j] /= std::sqrt(norms[j]);
        worst = std::max(worst, std::abs(1.0 - norms[j]));
      }
    }
    if (worst < target) break;
  }
  return d;
}

// Zero rows and exact duplicates (up to scale) of A.
std::vector<std::size_t> find_suspect_rows(const SpMat& a) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = a;
  std::map<std::vector<std::pair<Eigen::Index, double>>, std::size_t> seen;
  std::vector<std::size_t> suspects;
  for (Eigen::Index r = 0; r < rows.outerSize(); ++r) {
    std::vector<std::pair<Eigen::Index, double>> key;
    double lead = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
      if (it.value() == 0.0) continue;
      if (lead == 0.0) lead = it.value();
      key.emplace_back(it.col(), it.value() / lead);
    }
    if (key.empty()) {
      suspects.push_back(static_cast<std::size_t>(r));
      continue;
    }
    auto [pos, fresh] = seen.emplace(std::move(key), static_cast<std::size_t>(r));
    if (!fresh) {
      suspects.push_back(pos->second);
      suspects.push_back(static_cast<std::size_t>(r));
    }
  }
  std::sort(suspects.begin(), suspects.end());
  suspects.erase(std::unique(suspects.begin(), suspects.end()), suspects.end());
  return suspects;
}

struct Factorized {
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  Eigen::VectorXd scale;
  bool ok = false;
};

void factorize(const SpMat& kkt, Factorized& f) {
  f.scale = ruiz_scaling(kkt);
  SpMat scaled = kkt;
  for (Eigen::Index j = 0; j < scaled.outerSize(); ++j)
    for (SpMat::InnerIterator it(scaled, j); it; ++it)
      it.valueRef() *= f.scale[it.row()] * f.scale[j];
  f.lu.analyzePattern(scaled);
  f.lu.factorize(scaled);
  f.ok = f.lu.info() == Eigen::Success;
}

Eigen::VectorXd apply_inverse(Factorized& f, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd scaled_rhs = f.scale.cwiseProduct(rhs);
  Eigen::VectorXd z = f.lu.solve(scaled_rhs);
  return f.scale.cwiseProduct(z);
}

bool converged(const QuadraticProgram& qp, const QpSolution& sol, double tol) {
  return sol.constraint_residual <= tol * (1.0 + inf_norm(qp.rhs));
}

bool stationary(const QuadraticProgram& qp, const QpSolution& sol, double tol) {
  const double scale = inf_norm(qp.hessian_diag.cwiseProduct(sol.x)) +
                       inf_norm(qp.constraint_matrix.transpose() * sol.multipliers);
  return sol.kkt_residual <= tol * std::max(scale, 1e-300);
}

// Solves with the factorization and refines against the unregularized kkt.
QpSolution solve_with(const QuadraticProgram& qp, const SpMat& kkt, Factorized& f,
                      const SolveOptions& options) {
  const auto n = static_cast<Eigen::Index>(qp.n_variables());
  const auto m = static_cast<Eigen::Index>(qp.n_rows());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.tail(m) = qp.rhs;

  Eigen::VectorXd z = apply_inverse(f, rhs);
  QpSolution sol;
  auto load = [&](const Eigen::VectorXd& v) {
    sol.x = v.head(n);
    sol.multipliers = v.tail(m);
    evaluate_residuals(qp, sol);
  };
  load(z);
  for (int step = 0; step < options.max_refinement_steps; ++step) {
    if (!z.allFinite()) break;
    if (converged(qp, sol, options.tol) && stationary(qp, sol, options.tol)) break;
    const Eigen::VectorXd r = rhs - kkt * z;
    const Eigen::VectorXd candidate = z + apply_inverse(f, r);
    QpSolution trial = sol;
    trial.x = candidate.head(n);
    trial.multipliers = candidate.tail(m);
    evaluate_residuals(qp, trial);
    if (!candidate.allFinite() ||
        std::max(trial.constraint_residual, trial.kkt_residual) >=
            std::max(sol.constraint_residual, sol.kkt_residual)) {
      break;
    }
    z = candidate;
    trial.refinement_steps = sol.refinement_steps + 1;
    sol = std::move(trial);
  }
  return sol;
}

void check_shapes(const QuadraticProgram& qp) {
  if (qp.constraint_matrix.cols() != qp.hessian_diag.size() ||
      qp.constraint_matrix.rows() != qp.rhs.size()) {
    throw ValidationError("quadratic program blocks have inconsistent sizes");
  }
  if (qp.n_variables() == 0) throw ValidationError("quadratic program has no variables");
  if (!(qp.hessian_diag.array() > 0.0).all()) {
    throw ValidationError("Hessian diagonal must be strictly positive");
  }
}

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NotConverged: return "not_converged";
    case SolveStatus::Failed: return "failed";
  }
  return "unknown";
}

void evaluate_residuals(const QuadraticProgram& qp, QpSolution& sol) {
  const Eigen::VectorXd ax = qp.constraint_matrix * sol.x;
  sol.constraint_residual = inf_norm(ax - qp.rhs);
  const Eigen::VectorXd grad = qp.hessian_diag.cwiseProduct(sol.x) +
                               qp.constraint_matrix.transpose() * sol.multipliers;
  sol.kkt_residual = inf_norm(grad);
  sol.objective_value = 0.5 * sol.x.dot(qp.hessian_diag.cwiseProduct(sol.x));
  if (!std::isfinite(sol.constraint_residual) || !std::isfinite(sol.kkt_residual)) {
    sol.constraint_residual = std::numeric_limits<double>::infinity();
    sol.kkt_residual = std::numeric_limits<double>::infinity();
  }
}

QpSolution solve_qp(const QuadraticProgram& qp, const SolveOptions& options) {
  check_shapes(qp);
  const SpMat kkt = build_kkt(qp, 0.0);
  Factorized f;
  factorize(kkt, f);

  QpSolution sol;
  bool broken = false;
  bool deficient = !f.ok;
  if (f.ok) {
    sol = solve_with(qp, kkt, f, options);
    deficient = !sol.x.allFinite() ||
                sol.constraint_residual > 1e3 * options.tol * (1.0 + inf_norm(qp.rhs));
  }
  if (deficient) {
    const double delta = 1e-12 * std::max(row_sum_norm(qp.constraint_matrix), 1.0);
    std::vector<std::string> messages;
    messages.push_back(f.ok ? "KKT solve inaccurate; applying dual regularization"
                            : "KKT factorization failed (" + f.lu.lastErrorMessage() +
                                  "); applying dual regularization");
    auto suspects = find_suspect_rows(qp.constraint_matrix);
    const SpMat regularized = build_kkt(qp, delta);
    Factorized fr;
    factorize(regularized, fr);
    if (!fr.ok) {
      sol = QpSolution{};
      sol.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(qp.n_variables()));
      sol.multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(qp.n_rows()));
      evaluate_residuals(qp, sol);
      messages.push_back("regularized factorization failed: " + fr.lu.lastErrorMessage());
      broken = true;
    } else {
      sol = solve_with(qp, kkt, fr, options);
    }
    sol.regularized = true;
    sol.regularization = delta;
    sol.suspect_rows = std::move(suspects);
    if (!sol.suspect_rows.empty()) {
      std::string rows = "suspect constraint rows:";
      for (auto r : sol.suspect_rows) rows += " " + std::to_string(r);
      messages.push_back(rows);
    }
    sol.messages = std::move(messages);
  }
  if (broken) {
    sol.status = SolveStatus::Failed;
  } else {
    sol.status = sol.x.allFinite() && converged(qp, sol, options.tol) ? SolveStatus::Converged
                                                                       : SolveStatus::NotConverged;
  }
  return sol;
}

EstimationProblem assemble_problem(const IncidenceMatrices& incidence,
                                   std::span<const MeasurementConstraint> constraints,
                                   const AssembleOptions& options,
                                   std::vector<std::string>* warnings) {
  if (incidence.n_capabilities() == 0) throw ValidationError("the capability set is empty");
  if (options.k_steps == 0) throw ValidationError("k_steps must be >= 1");
  if (!(options.dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(options.alpha > 0.0) || !(options.beta > 0.0)) {
    throw ValidationError("alpha and beta must be positive");
  }

  EstimationProblem p;
  p.n_steps = options.k_steps;
  p.dt = options.dt;
  p.alpha = options.alpha;
  p.beta = options.beta;
  p.n_places = incidence.n_places();
  p.n_capabilities = incidence.n_capabilities();
  p.measurements.assign(constraints.begin(), constraints.end());
  if (constraints.empty() && warnings) {
    warnings->push_back("no measurement constraints: the estimate is identically zero");
  }

  const std::size_t K = p.n_steps;
  const std::size_t n_vars = K * (p.n_places + p.n_capabilities) + p.n_measurements();
  const std::size_t n_rows = K * p.n_places + p.n_measurements();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(K * (2 * p.n_places + 2 * p.n_capabilities) + 4 * p.n_measurements());
  const Eigen::SparseMatrix<double> m = incidence.m.cast<double>();
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t place = 0; place < p.n_places; ++place) {
      const auto row = static_cast<int>(p.balance_row(k, place));
      trips.emplace_back(row, static_cast<int>(p.qb_index(k, place)), -1.0);
      if (k > 0) trips.emplace_back(row, static_cast<int>(p.qb_index(k - 1, place)), 1.0);
    }
    for (Eigen::Index psi = 0; psi < m.outerSize(); ++psi) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, psi); it; ++it) {
        trips.emplace_back(static_cast<int>(p.balance_row(k, static_cast<std::size_t>(it.row()))),
                           static_cast<int>(p.u_index(k, static_cast<std::size_t>(psi))),
                           options.dt * it.value());
      }
    }
  }

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_rows));
  Eigen::VectorXd h(static_cast<Eigen::Index>(n_vars));
  h.head(static_cast<Eigen::Index>(K * p.n_places)).setConstant(p.beta);
  h.segment(static_cast<Eigen::Index>(K * p.n_places),
            static_cast<Eigen::Index>(K * p.n_capabilities))
      .setConstant(p.alpha);

  std::vector<std::string> issues;
  for (std::size_t r = 0; r < p.n_measurements(); ++r) {
    const auto& c = p.measurements[r];
    const auto row = static_cast<int>(p.measurement_row(r));
    if (c.terms.empty()) issues.push_back("constraint '" + c.label + "' has no terms");
    if (!(c.weight > 0.0)) issues.push_back("constraint '" + c.label + "' has non-positive weight");
    for (const auto& t : c.terms) {
      if (t.step >= K || t.capability.value >= p.n_capabilities) {
        issues.push_back("constraint '" + c.label + "' references capability " +
                         std::to_string(t.capability.value) + " at step " +
                         std::to_string(t.step) + " outside the problem");
        continue;
      }
      trips.emplace_back(row, static_cast<int>(p.u_index(t.step, t.capability.value)),
                         t.coefficient);
    }
    trips.emplace_back(row, static_cast<int>(p.error_index(r)), -1.0);
    rhs[row] = c.constant;
    h[static_cast<Eigen::Index>(p.error_index(r))] = c.weight;
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  p.qp.constraint_matrix.resize(static_cast<Eigen::Index>(n_rows),
                                static_cast<Eigen::Index>(n_vars));
  p.qp.constraint_matrix.setFromTriplets(trips.begin(), trips.end());
  p.qp.constraint_matrix.makeCompressed();
  p.qp.rhs = std::move(rhs);
  p.qp.hessian_diag = std::move(h);
  return p;
}

Solution unpack_solution(const EstimationProblem& problem, QpSolution qp_solution) {
  Solution s;
  const auto K = problem.n_steps;
  const auto P = static_cast<Eigen::Index>(problem.n_places);
  const auto C = static_cast<Eigen::Index>(problem.n_capabilities);
  for (std::size_t k = 0; k < K; ++k) {
    s.q_b.push_back(qp_solution.x.segment(static_cast<Eigen::Index>(problem.qb_index(k, 0)), P));
    s.u.push_back(qp_solution.x.segment(static_cast<Eigen::Index>(problem.u_index(k, 0)), C));
  }
  s.errors = qp_solution.x.tail(static_cast<Eigen::Index>(problem.n_measurements()));
  s.objective_value = qp_solution.objective_value;
  s.kkt_residual = qp_solution.kkt_residual;
  s.constraint_residual = qp_solution.constraint_residual;
  s.status = qp_solution.status;
  s.refinement_steps = qp_solution.refinement_steps;
  s.regularized = qp_solution.regularized;
  s.regularization = qp_solution.regularization;
  s.suspect_rows = std::move(qp_solution.suspect_rows);
  s.messages = std::move(qp_solution.messages);
  s.x = std::move(qp_solution.x);
  s.multipliers = std::move(qp_solution.multipliers);

  double scale = 0.0;
  for (const auto& u : s.u) scale = std::max(scale, inf_norm(u));
  const double threshold = -1e-9 * std::max(scale, 1.0);
  std::size_t negatives = 0;
  for (std::size_t k = 0; k < K; ++k) {
    for (Eigen::Index psi = 0; psi < C; ++psi) {
      if (s.u[k][psi] < threshold) {
        if (++negatives <= 20) {
          s.negative_flows.push_back("U[step " + std::to_string(k + 1) + ", capability " +
                                     std::to_string(psi) + "] = " + std::to_string(s.u[k][psi]));
        }
      }
    }
  }
  if (negatives > 20) {
    s.negative_flows.push_back("... " + std::to_string(negatives - 20) + " more negative flows");
  }
  return s;
}

Solution solve(const EstimationProblem& problem, const SolveOptions& options) {
  return unpack_solution(problem, solve_qp(problem.qp, options));
}

Solution dense_oracle_solve(const EstimationProblem& problem, const SolveOptions& options) {
  return unpack_solution(problem, dense_oracle_solve_qp(problem.qp, options));
}

Statistics summarize(std::vector<double> values) {
  Statistics s;
  if (values.empty()) return s;
  double sq = 0.0;
  for (double v : values) sq += v * v;
  s.l2 = std::sqrt(sq);
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

std::vector<FamilyResidual> residual_report(const EstimationProblem& problem,
                                            const Solution& solution) {
  const Eigen::VectorXd residual = problem.qp.constraint_matrix * solution.x - problem.qp.rhs;
  std::vector<FamilyResidual> out;
  for (auto family : {ConstraintFamily::Accept, ConstraintFamily::EoS, ConstraintFamily::EoT,
                      ConstraintFamily::TransportRelation}) {
    std::vector<double> err;
    std::vector<double> scaled;
    std::vector<double> rows;
    for (std::size_t r = 0; r < problem.n_measurements(); ++r) {
      const auto& c = problem.measurements[r];
      if (c.family != family) continue;
      const double e = std::abs(solution.errors[static_cast<Eigen::Index>(r)]);
      err.push_back(e);
      scaled.push_back(e / std::max(std::abs(c.constant), std::sqrt(2.0)));
      rows.push_back(std::abs(residual[static_cast<Eigen::Index>(problem.measurement_row(r))]));
    }
    if (err.empty()) continue;
    FamilyResidual fr;
    fr.family = family;
    fr.count = err.size();
    fr.error = summarize(std::move(err));
    fr.scaled_error = summarize(std::move(scaled));
    fr.row_residual = summarize(std::move(rows));
    out.push_back(fr);
  }
  return out;
}

}  // namespace hfgt
