#include "clabfm/global.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace clabfm {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ConfigError("SparseMatrix: negative dimension");
  for (const auto &t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw ConfigError("SparseMatrix: entry (" + std::to_string(t.row) + ", " +
                        std::to_string(t.col) + ") out of range");
    if (!std::isfinite(t.value))
      throw NumericalError("SparseMatrix: non-finite entry in row " + std::to_string(t.row));
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(rows + 1, 0);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto &t = triplets[k];
    if (!col_idx_.empty() && k > 0 && triplets[k - 1].row == t.row &&
        triplets[k - 1].col == t.col) {
      values_.back() += t.value;
      continue;
    }
    col_idx_.push_back(t.col);
    values_.push_back(t.value);
    ++row_ptr_[t.row + 1];
  }
  for (int r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(t));
}

double SparseMatrix::coeff(int r, int c) const {
  const auto b = col_idx_.begin() + row_ptr_[r], e = col_idx_.begin() + row_ptr_[r + 1];
  const auto it = std::lower_bound(b, e, c);
  return it != e && *it == c ? values_[it - col_idx_.begin()] : 0.0;
}

Eigen::VectorXd SparseMatrix::diagonal() const {
  Eigen::VectorXd d(std::min(rows_, cols_));
  for (int i = 0; i < d.size(); ++i) d[i] = coeff(i, i);
  return d;
}

Eigen::VectorXd SparseMatrix::multiply(const Eigen::VectorXd &x) const {
  if (x.size() != cols_) throw ConfigError("SparseMatrix::multiply: size mismatch");
  Eigen::VectorXd y(rows_);
  for (int r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[col_idx_[k]];
    y[r] = acc;
  }
  return y;
}

Eigen::VectorXd SparseMatrix::multiply_difference(const Eigen::VectorXd &x) const {
  if (x.size() != cols_ || rows_ != cols_)
    throw ConfigError("SparseMatrix::multiply_difference: size mismatch");
  Eigen::VectorXd y(rows_);
  for (int r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_idx_[k] != r) acc += values_[k] * (x[col_idx_[k]] - x[r]);
    y[r] = acc;
  }
  return y;
}

double SparseMatrix::row_sum(int r) const {
  double off = 0.0, diag = 0.0;
  for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
    if (col_idx_[k] == r)
      diag = values_[k];
    else
      off += values_[k];
  }
  return off + diag;
}

bool SparseMatrix::is_identity() const {
  if (rows_ != cols_) return false;
  for (int r = 0; r < rows_; ++r) {
    if (row_ptr_[r + 1] - row_ptr_[r] != 1) return false;
    if (col_idx_[row_ptr_[r]] != r || values_[row_ptr_[r]] != 1.0) return false;
  }
  return true;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SparseMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.emplace_back(r, col_idx_[k], values_[k]);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(rows_, cols_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m(r, col_idx_[k]) = values_[k];
  return m;
}

void SparseMatrix::write_matrix_market(std::ostream &out) const {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << rows_ << ' ' << cols_ << ' ' << nonzeros() << '\n';
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      out << r + 1 << ' ' << col_idx_[k] + 1 << ' ' << format_double(values_[k]) << '\n';
}

SparseMatrix SparseMatrix::read_matrix_market(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket matrix coordinate real general", 0) != 0)
    throw ConfigError("not a real general coordinate Matrix Market stream");
  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream head(line);
  int rows = 0, cols = 0, nnz = 0;
  if (!(head >> rows >> cols >> nnz)) throw ConfigError("Matrix Market: bad size line");
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (int k = 0; k < nnz; ++k) {
    int r = 0, c = 0;
    std::string v;
    if (!(in >> r >> c >> v)) throw ConfigError("Matrix Market: truncated entry list");
    t.push_back({r - 1, c - 1, parse_double(v)});
  }
  return SparseMatrix(rows, cols, std::move(t));
}

namespace {

/// Row i of an operator matrix: w_ji on neighbor columns, minus their sum
/// (accumulated in column order) on the diagonal.
void append_weight_row(std::vector<Triplet> &t, int i, const std::vector<int> &nbrs,
                       const Eigen::VectorXd &w) {
  double sum = 0.0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    t.push_back({i, nbrs[k], w[k]});
    sum += w[k];
  }
  t.push_back({i, i, -sum});
}

void append_alpha_row(std::vector<Triplet> &t, int i, const CompactStencil &st) {
  for (int q = 0; q < st.size(); ++q) t.push_back({i, st.members[q], st.alpha[q]});
}

class Preconditioning {
public:
  Preconditioning(const SparseMatrix &m, Preconditioner kind) : kind_(kind) {
    if (kind == Preconditioner::jacobi) {
      inv_diag_ = m.diagonal();
      for (auto &d : inv_diag_) d = d != 0.0 ? 1.0 / d : 1.0;
    } else {
      Eigen::SparseMatrix<double> cm = m.to_eigen();
      ilu_.setDroptol(1e-6);
      ilu_.setFillfactor(20);
      ilu_.compute(cm);
      if (ilu_.info() != Eigen::Success)
        throw SolveError("incomplete LU factorisation failed", INFINITY);
    }
  }

  Eigen::VectorXd apply(const Eigen::VectorXd &v) const {
    if (kind_ == Preconditioner::jacobi) return inv_diag_.cwiseProduct(v);
    return ilu_.solve(v);
  }

private:
  Preconditioner kind_;
  Eigen::VectorXd inv_diag_;
  Eigen::IncompleteLUT<double> ilu_;
};

} // namespace

GlobalOperator assemble_global(const DiscreteOperator &local) {
  const int n = local.nodes.size();
  std::vector<Triplet> a, b;
  for (int i = 0; i < n; ++i) {
    if (local.has_weights(i)) append_weight_row(a, i, local.nodes.neighbors[i], local.weights[i].weights);
    append_alpha_row(b, i, local.stencils[i]);
  }
  GlobalOperator op;
  op.kind = local.kind;
  op.scheme = local.scheme;
  op.A = SparseMatrix(n, n, std::move(a));
  op.B = SparseMatrix(n, n, std::move(b));
  op.local = local;
  return op;
}

GlobalOperator assemble_global(const NodeSet &nodes, const SchemeSpec &scheme, OperatorKind kind,
                               const OptimizerSettings &settings) {
  return assemble_global(build_operator(nodes, scheme, kind, settings));
}

SolveResult iterative_solve(const SparseMatrix &m, const Eigen::VectorXd &b,
                            const SolverOptions &options) {
  if (m.rows() != m.cols() || b.size() != m.rows())
    throw ConfigError("iterative_solve: dimension mismatch");
  if (!(options.tol > 0.0) || options.max_iter < 1 || options.restart < 1)
    throw ConfigError("iterative_solve: tol, max_iter and restart must be positive");

  const int n = m.rows();
  SolveResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return res;

  const Preconditioning prec(m, options.preconditioner);
  const int restart = std::min(options.restart, n);
  Eigen::MatrixXd v(n, restart + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(restart + 1, restart);
  Eigen::VectorXd cs(restart), sn(restart), g(restart + 1);

  Eigen::VectorXd r = b;
  double rnorm = bnorm;
  res.history.push_back(1.0);
  while (res.iterations < options.max_iter) {
    v.col(0) = r / rnorm;
    g.setZero();
    g[0] = rnorm;
    h.setZero();
    int j = 0;
    for (; j < restart && res.iterations < options.max_iter; ++j) {
      Eigen::VectorXd w = m.multiply(prec.apply(v.col(j)));
      for (int k = 0; k <= j; ++k) {
        h(k, j) = v.col(k).dot(w);
        w -= h(k, j) * v.col(k);
      }
      h(j + 1, j) = w.norm();
      const bool breakdown = !(h(j + 1, j) > 0.0);
      if (!breakdown) v.col(j + 1) = w / h(j + 1, j);
      for (int k = 0; k < j; ++k) {
        const double t = cs[k] * h(k, j) + sn[k] * h(k + 1, j);
        h(k + 1, j) = -sn[k] * h(k, j) + cs[k] * h(k + 1, j);
        h(k, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      if (denom == 0.0) break;
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++res.iterations;
      res.history.push_back(std::abs(g[j + 1]) / bnorm);
      if (std::abs(g[j + 1]) <= options.tol * bnorm || breakdown) {
        ++j;
        break;
      }
    }
    if (j == 0) break;
    const Eigen::VectorXd y =
        h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    res.x += prec.apply(v.leftCols(j) * y);
    r = b - m.multiply(res.x);
    rnorm = r.norm();
    res.residual = rnorm / bnorm;
    if (!std::isfinite(rnorm)) break;
    if (res.residual <= options.tol) return res;
  }
  res.residual = (b - m.multiply(res.x)).norm() / bnorm;
  if (res.residual <= options.tol) return res;
  throw SolveError("GMRES did not converge in " + std::to_string(res.iterations) +
                       " iterations (relative residual " + format_double(res.residual) + ")",
                   res.residual, res.history);
}

Eigen::VectorXd apply_operator(const GlobalOperator &op, const Eigen::VectorXd &phi,
                               const SolverOptions &options, int *iterations) {
  if (phi.size() != op.size()) throw ConfigError("apply_operator: field size mismatch");
  Eigen::VectorXd rhs = op.A.multiply_difference(phi);
  if (iterations) *iterations = 0;
  if (op.is_explicit()) return rhs;
  SolveResult r = iterative_solve(op.B, rhs, options);
  if (iterations) *iterations = r.iterations;
  return std::move(r.x);
}

PoissonSystem assemble_poisson(const DiscreteOperator &lap) {
  if (lap.kind != OperatorKind::laplacian)
    throw ConfigError("assemble_poisson: a Laplacian operator is required");
  const NodeSet &nodes = lap.nodes;
  const int n = nodes.size();
  if (static_cast<int>(nodes.tags.size()) != n)
    throw ConfigError("assemble_poisson: node set carries no boundary tags");
  PoissonSystem sys;
  sys.dirichlet.assign(n, 0);
  std::vector<Triplet> a, al;
  for (int i = 0; i < n; ++i) {
    if (nodes.is_dirichlet(i)) {
      sys.dirichlet[i] = 1;
      a.push_back({i, i, 1.0});
      al.push_back({i, i, 1.0});
      continue;
    }
    append_weight_row(a, i, nodes.neighbors[i], lap.weights[i].weights);
    append_alpha_row(al, i, lap.stencils[i]);
  }
  sys.A = SparseMatrix(n, n, std::move(a));
  sys.alpha = SparseMatrix(n, n, std::move(al));
  sys.local = lap;
  return sys;
}

PoissonSystem assemble_poisson(const NodeSet &nodes, const SchemeSpec &scheme,
                               const OptimizerSettings &settings) {
  return assemble_poisson(build_operator(nodes, scheme, OperatorKind::laplacian, settings));
}

SolveResult solve_poisson(const PoissonSystem &system, const Eigen::VectorXd &f,
                          const Eigen::VectorXd &g, const SolverOptions &options) {
  const int n = system.A.rows();
  if (f.size() != n || g.size() != n) throw ConfigError("solve_poisson: field size mismatch");
  Eigen::VectorXd b = system.alpha.multiply(f);
  for (int i = 0; i < n; ++i)
    if (system.dirichlet[i]) b[i] = g[i];
  return iterative_solve(system.A, b, options);
}

} // namespace clabfm
