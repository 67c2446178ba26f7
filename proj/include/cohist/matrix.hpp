// Dense complex matrix utilities: tensor products, Hermitian spectral
// decomposition, entropies and the permutation operators on tensor powers.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohist {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Predicate tolerance used when a caller does not supply one.
inline constexpr double kDefaultTol = 1e-9;

/// Relative threshold for grouping nearly equal eigenvalues.
inline constexpr double kEigenGroupRelTol = 1e-8;

inline ComplexMatrix identity(std::size_t n) {
  return ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

inline ComplexMatrix zeros(std::size_t n) {
  return ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

inline ComplexMatrix diag(std::initializer_list<double> values) {
  ComplexMatrix m = zeros(values.size());
  Eigen::Index i = 0;
  for (double v : values) m(i, i) = v, ++i;
  return m;
}

inline std::size_t dim(const ComplexMatrix& m) { return static_cast<std::size_t>(m.rows()); }

inline bool is_square(const ComplexMatrix& m) { return m.rows() == m.cols() && m.rows() > 0; }

inline void require_square(const ComplexMatrix& m, const char* what) {
  if (!is_square(m))
    throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Largest absolute entry; the norm used by every tolerance check here.
inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline bool is_hermitian(const ComplexMatrix& m, double tol = kDefaultTol) {
  return is_square(m) && max_abs(m - m.adjoint()) <= tol;
}

inline bool is_unitary(const ComplexMatrix& u, double tol = kDefaultTol) {
  return is_square(u) && max_abs(u * u.adjoint() - identity(dim(u))) <= tol;
}

// ---------------------------------------------------------------------------
// Tensor products

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square(a, "kron");
  require_square(b, "kron");
  const Eigen::Index na = a.rows(), nb = b.rows();
  ComplexMatrix out(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) out.block(i * nb, j * nb, nb, nb) = a(i, j) * b;
  return out;
}

/// Left-to-right Kronecker product of a list of factors.
inline ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
  if (factors.empty()) throw std::invalid_argument("kron_all: empty factor list");
  ComplexMatrix out = factors.front();
  require_square(out, "kron_all");
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

inline ComplexMatrix kron_all(std::initializer_list<ComplexMatrix> factors) {
  std::vector<ComplexMatrix> v(factors);
  return kron_all(std::span<const ComplexMatrix>(v));
}

/// Permutation of tensor factors. `dims[k]` is the dimension of factor k and
/// the returned operator maps u_0 (x) ... (x) u_{m-1} to the product whose
/// slot `perm[k]` carries u_k. Entries are exactly 0 or 1.
inline ComplexMatrix permute_factors(std::span<const std::size_t> dims,
                                     std::span<const std::size_t> perm) {
  const std::size_t m = dims.size();
  if (perm.size() != m || m == 0) throw std::invalid_argument("permute_factors: size mismatch");
  std::vector<bool> seen(m, false);
  for (auto p : perm) {
    if (p >= m || seen[p]) throw std::invalid_argument("permute_factors: not a permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> out_dims(m);
  for (std::size_t k = 0; k < m; ++k) out_dims[perm[k]] = dims[k];
  const std::size_t total =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());

  ComplexMatrix out = zeros(total);
  std::vector<std::size_t> digits(m, 0), out_digits(m, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t k = m; k-- > 0;) {
      digits[k] = rest % dims[k];
      rest /= dims[k];
    }
    for (std::size_t k = 0; k < m; ++k) out_digits[perm[k]] = digits[k];
    std::size_t target = 0;
    for (std::size_t k = 0; k < m; ++k) target = target * out_dims[k] + out_digits[k];
    out(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(idx)) = 1.0;
  }
  return out;
}

/// Interchange operator on C^n (x) C^n: u (x) v -> v (x) u.
inline ComplexMatrix swap_operator(std::size_t n) {
  if (n == 0) throw std::invalid_argument("swap_operator: n must be positive");
  const std::size_t dims[] = {n, n};
  const std::size_t perm[] = {1, 0};
  return permute_factors(dims, perm);
}

/// Cyclic shift on the fourfold tensor power of C^n:
/// u1 (x) u2 (x) u3 (x) u4 -> u2 (x) u3 (x) u4 (x) u1.
/// Satisfies tr((A (x) B (x) C (x) D) S) = tr(ABCD).
inline ComplexMatrix cyclic_shift_4(std::size_t n) {
  if (n == 0) throw std::invalid_argument("cyclic_shift_4: n must be positive");
  const std::size_t dims[] = {n, n, n, n};
  // factor k lands in slot k-1 (mod 4)
  const std::size_t perm[] = {3, 0, 1, 2};
  return permute_factors(dims, perm);
}

// ---------------------------------------------------------------------------
// Partial traces on a bipartite space A (x) B.

inline ComplexMatrix partial_trace_second(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b) {
  if (dim(m) != dim_a * dim_b) throw std::invalid_argument("partial_trace_second: dimension mismatch");
  const auto na = static_cast<Eigen::Index>(dim_a), nb = static_cast<Eigen::Index>(dim_b);
  ComplexMatrix out = ComplexMatrix::Zero(na, na);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) out(i, j) = m.block(i * nb, j * nb, nb, nb).trace();
  return out;
}

inline ComplexMatrix partial_trace_first(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b) {
  if (dim(m) != dim_a * dim_b) throw std::invalid_argument("partial_trace_first: dimension mismatch");
  const auto na = static_cast<Eigen::Index>(dim_a), nb = static_cast<Eigen::Index>(dim_b);
  ComplexMatrix out = ComplexMatrix::Zero(nb, nb);
  for (Eigen::Index i = 0; i < na; ++i) out += m.block(i * nb, i * nb, nb, nb);
  return out;
}

// ---------------------------------------------------------------------------
// Spectral decomposition

enum class EigenMode { grouped, rank_one };

struct HermitianEigensystem {
  std::vector<double> eigenvalues;          // descending
  std::vector<ComplexMatrix> eigenprojectors;
  std::vector<std::size_t> multiplicities;  // rank of each eigenprojector
};

/// Spectral decomposition of a Hermitian matrix. In grouped mode eigenvalues
/// within `group_rel_tol * max|lambda|` of their neighbour share one
/// projector; in rank_one mode every eigenvector gets its own projector.
inline HermitianEigensystem herm_eig(const ComplexMatrix& h, double tol = kDefaultTol,
                                     EigenMode mode = EigenMode::grouped,
                                     double group_rel_tol = kEigenGroupRelTol) {
  require_square(h, "herm_eig");
  if (!is_hermitian(h, tol))
    throw std::invalid_argument("herm_eig: matrix is not Hermitian within tolerance");

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(h));
  if (solver.info() != Eigen::Success) throw std::runtime_error("herm_eig: eigensolver failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();  // ascending
  const ComplexMatrix& vecs = solver.eigenvectors();
  const Eigen::Index n = vals.size();

  HermitianEigensystem out;
  const double scale = vals.cwiseAbs().maxCoeff();
  const double group_tol = group_rel_tol * scale;

  Eigen::Index k = n - 1;
  while (k >= 0) {
    Eigen::Index start = k;
    if (mode == EigenMode::grouped)
      while (start > 0 && std::abs(vals(start - 1) - vals(start)) <= group_tol) --start;
    const Eigen::Index count = k - start + 1;
    const auto block = vecs.middleCols(start, count);
    double mean = 0.0;
    for (Eigen::Index j = start; j <= k; ++j) mean += vals(j);
    out.eigenvalues.push_back(mean / static_cast<double>(count));
    out.eigenprojectors.push_back(block * block.adjoint());
    out.multiplicities.push_back(static_cast<std::size_t>(count));
    k = start - 1;
  }
  return out;
}

/// Orthonormal eigenvectors (columns) with eigenvalues sorted descending.
inline std::pair<Eigen::VectorXd, ComplexMatrix> herm_eigenvectors(const ComplexMatrix& h,
                                                                   double tol = kDefaultTol) {
  require_square(h, "herm_eigenvectors");
  if (!is_hermitian(h, tol))
    throw std::invalid_argument("herm_eigenvectors: matrix is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(h));
  return {solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

/// Scalar x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// -tr(K log K) for a positive semidefinite K (no trace condition).
inline double trace_entropy(const ComplexMatrix& k, double tol = kDefaultTol) {
  require_square(k, "trace_entropy");
  if (!is_hermitian(k, tol)) throw std::invalid_argument("trace_entropy: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(k), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double r = solver.eigenvalues()(i);
    if (r < -tol) throw std::domain_error("trace_entropy: negative eigenvalue " + std::to_string(r));
    s -= xlogx(r);
  }
  return s;
}

inline bool is_density_matrix(const ComplexMatrix& rho, double tol = kDefaultTol) {
  if (!is_square(rho) || !all_finite(rho) || !is_hermitian(rho, tol)) return false;
  if (std::abs(rho.trace() - 1.0) > tol) return false;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(rho), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

inline void require_density_matrix(const ComplexMatrix& rho, const char* what, double tol = kDefaultTol) {
  if (!is_density_matrix(rho, tol))
    throw std::invalid_argument(std::string(what) +
                                ": not a density matrix (Hermitian, positive, unit trace)");
}

/// Von Neumann entropy -tr(rho log rho) in nats.
inline double vn_entropy(const ComplexMatrix& rho, double tol = kDefaultTol) {
  require_square(rho, "vn_entropy");
  if (!is_hermitian(rho, tol)) throw std::invalid_argument("vn_entropy: matrix is not Hermitian");
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > tol)
    throw std::domain_error("vn_entropy: trace " + std::to_string(tr.real()) + " differs from 1");
  return trace_entropy(rho, tol);
}

// ---------------------------------------------------------------------------
// Projectors

inline bool is_projector(const ComplexMatrix& p, double tol = kDefaultTol) {
  if (!is_square(p) || !all_finite(p)) return false;
  return max_abs(p * p - p) <= tol && max_abs(p - p.adjoint()) <= tol;
}

/// Rank of a projector, read off its trace.
inline std::size_t proj_dim(const ComplexMatrix& p, double tol = kDefaultTol) {
  if (!is_projector(p, tol)) throw std::invalid_argument("proj_dim: matrix is not a projector");
  const double tr = p.trace().real();
  const double rounded = std::round(tr);
  if (std::abs(tr - rounded) > tol)
    throw std::invalid_argument("proj_dim: trace is not an integer within tolerance");
  return static_cast<std::size_t>(rounded);
}

/// Projector onto the span of the given (not necessarily orthonormal) columns.
inline ComplexMatrix projector_onto(const ComplexMatrix& columns) {
  Eigen::HouseholderQR<ComplexMatrix> qr(columns);
  const ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(columns.rows(), columns.cols());
  return q * q.adjoint();
}

/// Orthonormal basis (columns) of the range of a projector.
inline ComplexMatrix range_basis(const ComplexMatrix& p, double tol = kDefaultTol) {
  const std::size_t rank = proj_dim(p, tol);
  auto [vals, vecs] = herm_eigenvectors(p, tol);
  return vecs.leftCols(static_cast<Eigen::Index>(rank));
}

}  // namespace cohist
