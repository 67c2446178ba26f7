// Seeded generators for random matrices, unitaries, states and projectors.
#pragma once

#include "cohist/matrix.hpp"

#include <cstdint>
#include <random>

namespace cohist {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline ComplexMatrix random_ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

inline ComplexMatrix random_ginibre(std::size_t n, Rng& rng) { return random_ginibre(n, n, rng); }

inline ComplexMatrix random_hermitian(std::size_t n, Rng& rng) {
  return hermitian_part(random_ginibre(n, rng));
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal absorbed into Q.
inline ComplexMatrix random_unitary(std::size_t n, Rng& rng) {
  const ComplexMatrix g = random_ginibre(n, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

/// Density matrix from the induced (Hilbert-Schmidt) measure.
inline ComplexMatrix random_density(std::size_t n, Rng& rng) {
  const ComplexMatrix g = random_ginibre(n, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return hermitian_part(rho);
}

/// Density matrix with prescribed spectrum in a Haar-random eigenbasis.
inline ComplexMatrix random_density_with_spectrum(std::span<const double> spectrum, Rng& rng) {
  const std::size_t n = spectrum.size();
  const ComplexMatrix u = random_unitary(n, rng);
  ComplexMatrix d = zeros(n);
  for (std::size_t i = 0; i < n; ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = spectrum[i];
  return hermitian_part(u * d * u.adjoint());
}

inline ComplexVector random_unit_vector(std::size_t n, Rng& rng) {
  ComplexVector v = random_ginibre(n, 1, rng).col(0);
  return v / v.norm();
}

/// Haar-random rank-k projector on C^n.
inline ComplexMatrix random_projector(std::size_t n, std::size_t rank, Rng& rng) {
  if (rank > n) throw std::invalid_argument("random_projector: rank exceeds dimension");
  if (rank == 0) return zeros(n);
  const ComplexMatrix u = random_unitary(n, rng);
  const auto cols = u.leftCols(static_cast<Eigen::Index>(rank));
  return hermitian_part(cols * cols.adjoint());
}

inline std::size_t uniform_index(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(double lo, double hi, Rng& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace cohist
