#pragma once

#include "clabfm/compact.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <vector>

namespace clabfm {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Square or rectangular matrix in compressed-row form, columns sorted per row.
class SparseMatrix {
public:
  SparseMatrix() = default;
  /// Duplicate (row, col) entries are summed in input order.
  SparseMatrix(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nonzeros() const { return static_cast<int>(values_.size()); }
  const std::vector<int> &row_ptr() const { return row_ptr_; }
  const std::vector<int> &col_idx() const { return col_idx_; }
  const std::vector<double> &values() const { return values_; }

  /// Entry (r, c) or 0 when not stored.
  double coeff(int r, int c) const;
  Eigen::VectorXd diagonal() const;
  /// y = M x, accumulated in column order.
  Eigen::VectorXd multiply(const Eigen::VectorXd &x) const;
  /// y_i = sum_{j != i} m_ij (x_j - x_i): the product for matrices whose
  /// rows sum to zero, exact on constant vectors.
  Eigen::VectorXd multiply_difference(const Eigen::VectorXd &x) const;
  /// Off-diagonal entries summed in column order, then the diagonal added.
  double row_sum(int r) const;
  bool is_identity() const;

  Eigen::SparseMatrix<double, Eigen::RowMajor> to_eigen() const;
  Eigen::MatrixXd to_dense() const;

  /// Matrix Market coordinate format, 1-based, 17 significant digits.
  void write_matrix_market(std::ostream &out) const;
  static SparseMatrix read_matrix_market(std::istream &in);

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Global pair (A, B) of one operator: B (L phi) = A phi.
struct GlobalOperator {
  OperatorKind kind = OperatorKind::ddx;
  SchemeSpec scheme;
  SparseMatrix A;  // w_ji off-diagonal, -sum_j w_ji on the diagonal
  SparseMatrix B;  // alpha_{q,i} on row i
  DiscreteOperator local;

  int size() const { return A.rows(); }
  bool is_explicit() const { return B.is_identity(); }
};

/// Rows in node order, columns ascending. Dirichlet nodes get empty A rows
/// and identity B rows.
GlobalOperator assemble_global(const DiscreteOperator &local);
GlobalOperator assemble_global(const NodeSet &nodes, const SchemeSpec &scheme, OperatorKind kind,
                               const OptimizerSettings &settings = {});

enum class Preconditioner { jacobi, ilut };

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 2000;
  int restart = 30;
  Preconditioner preconditioner = Preconditioner::jacobi;
};

struct SolveResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;  // |b - M x| / |b|
  std::vector<double> history;
};

/// Restarted GMRES, right-preconditioned. Throws SolveError carrying the
/// residual history if tol is not reached within max_iter iterations.
SolveResult iterative_solve(const SparseMatrix &m, const Eigen::VectorXd &b,
                            const SolverOptions &options = {});

/// Solves B d = A phi. Explicit operators return A phi with no solve.
Eigen::VectorXd apply_operator(const GlobalOperator &op, const Eigen::VectorXd &phi,
                               const SolverOptions &options = {}, int *iterations = nullptr);

struct PoissonSystem {
  SparseMatrix A;      // A^L with identity rows on Dirichlet nodes
  SparseMatrix alpha;  // alpha^L with identity rows on Dirichlet nodes
  std::vector<char> dirichlet;
  DiscreteOperator local;
};

/// Defaults for the Poisson solve: the Laplacian matrix is far from the
/// identity, so GMRES runs with an incomplete-LU preconditioner.
inline SolverOptions poisson_solver_options() {
  SolverOptions o;
  o.preconditioner = Preconditioner::ilut;
  return o;
}

PoissonSystem assemble_poisson(const DiscreteOperator &laplacian);
PoissonSystem assemble_poisson(const NodeSet &nodes, const SchemeSpec &scheme,
                               const OptimizerSettings &settings = {});

/// Solves A^L phi = alpha^L f with phi_i = g_i on Dirichlet rows.
SolveResult solve_poisson(const PoissonSystem &system, const Eigen::VectorXd &f,
                          const Eigen::VectorXd &g,
                          const SolverOptions &options = poisson_solver_options());

} // namespace clabfm
