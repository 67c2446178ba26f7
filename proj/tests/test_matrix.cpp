#include "cohist/matrix.hpp"
#include "cohist/random.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace cohist;
using Catch::Matchers::WithinAbs;

TEST_CASE("kron of identities and basis projectors", "[matrix][kron]") {
  CHECK(kron(identity(2), identity(3)) == identity(6));
  const ComplexMatrix d = kron(diag({1, 0}), diag({0, 1}));
  CHECK(d == diag({0, 1, 0, 0}));
}

TEST_CASE("kron agrees with index arithmetic and factorises traces", "[matrix][kron]") {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix a = random_ginibre(2, rng), b = random_ginibre(3, rng);
    const ComplexMatrix k = kron(a, b);
    CHECK(max_abs(k - oracle::kron(a, b)) == 0.0);
    CHECK(std::abs(k.trace() - a.trace() * b.trace()) < 1e-12);
  }
}

TEST_CASE("kron mixed-product identity", "[matrix][kron][property]") {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = uniform_index(1, 3, rng), m = uniform_index(1, 3, rng);
    const ComplexMatrix a = random_ginibre(n, rng), c = random_ginibre(n, rng);
    const ComplexMatrix b = random_ginibre(m, rng), d = random_ginibre(m, rng);
    const ComplexMatrix lhs = kron(a, b) * kron(c, d);
    const ComplexMatrix rhs = kron(a * c, b * d);
    CHECK(max_abs(lhs - rhs) < 1e-12 * static_cast<double>(n * m) * std::max(1.0, max_abs(rhs)));
  }
}

TEST_CASE("kron rejects non-square input", "[matrix][kron]") {
  ComplexMatrix r(2, 3);
  r.setZero();
  CHECK_THROWS_AS(kron(r, identity(2)), std::invalid_argument);
}

TEST_CASE("herm_eig small cases", "[matrix][eig]") {
  SECTION("diag(3,1)") {
    const auto es = herm_eig(diag({3, 1}));
    REQUIRE(es.eigenvalues.size() == 2);
    CHECK_THAT(es.eigenvalues[0], WithinAbs(3.0, 1e-14));
    CHECK_THAT(es.eigenvalues[1], WithinAbs(1.0, 1e-14));
    CHECK(max_abs(es.eigenprojectors[0] - diag({1, 0})) < 1e-14);
    CHECK(max_abs(es.eigenprojectors[1] - diag({0, 1})) < 1e-14);
  }
  SECTION("degenerate identity is one group") {
    const auto es = herm_eig(identity(2));
    REQUIRE(es.eigenvalues.size() == 1);
    CHECK(es.multiplicities[0] == 2);
    CHECK(max_abs(es.eigenprojectors[0] - identity(2)) < 1e-14);
  }
  SECTION("rank-one mode splits degenerate eigenspaces") {
    const auto es = herm_eig(identity(3), kDefaultTol, EigenMode::rank_one);
    CHECK(es.eigenvalues.size() == 3);
    for (auto m : es.multiplicities) CHECK(m == 1);
  }
  SECTION("non-Hermitian input is rejected") {
    ComplexMatrix m = diag({1, 2});
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(herm_eig(m), std::invalid_argument);
  }
}

TEST_CASE("herm_eig reconstruction and projector algebra", "[matrix][eig][property]") {
  Rng rng = make_rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = uniform_index(2, 16, rng);
    const ComplexMatrix h = random_hermitian(n, rng);
    const auto es = herm_eig(h);
    ComplexMatrix rebuilt = zeros(n), total = zeros(n);
    for (std::size_t i = 0; i < es.eigenvalues.size(); ++i) {
      rebuilt += es.eigenvalues[i] * es.eigenprojectors[i];
      total += es.eigenprojectors[i];
      if (i > 0) CHECK(es.eigenvalues[i - 1] >= es.eigenvalues[i]);
      for (std::size_t j = 0; j < i; ++j) CHECK(max_abs(es.eigenprojectors[i] * es.eigenprojectors[j]) < 1e-10);
    }
    CHECK(max_abs(rebuilt - h) < 1e-10 * static_cast<double>(n));
    CHECK(max_abs(total - identity(n)) < 1e-10);
  }
}

TEST_CASE("grouping threshold is relative to the spectrum", "[matrix][eig]") {
  const auto close = herm_eig(diag({1.0, 1.0 + 5e-9, 0.25}));
  CHECK(close.eigenvalues.size() == 2);
  const auto apart = herm_eig(diag({1.0, 1.0 + 5e-8, 0.25}));
  CHECK(apart.eigenvalues.size() == 3);
  const auto custom = herm_eig(diag({1.0, 1.0 + 5e-8, 0.25}), kDefaultTol, EigenMode::grouped, 1e-6);
  CHECK(custom.eigenvalues.size() == 2);
}

TEST_CASE("vn_entropy examples", "[matrix][entropy]") {
  CHECK(vn_entropy(diag({1, 0})) == 0.0);
  CHECK_THAT(vn_entropy(diag({0.5, 0.5})), WithinAbs(std::log(2.0), 1e-15));
  const double expected = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  CHECK_THAT(vn_entropy(diag({0.75, 0.25})), WithinAbs(expected, 1e-15));
  CHECK_THAT(vn_entropy(diag({0.75, 0.25})), WithinAbs(0.562335, 1e-6));
}

TEST_CASE("vn_entropy rejects invalid states", "[matrix][entropy]") {
  CHECK_THROWS_AS(vn_entropy(diag({0.6, 0.6})), std::domain_error);
  CHECK_THROWS_AS(vn_entropy(diag({1.2, -0.2})), std::domain_error);
}

TEST_CASE("vn_entropy is unitarily invariant and matches a general eigensolver", "[matrix][entropy][property]") {
  Rng rng = make_rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = uniform_index(2, 6, rng);
    const ComplexMatrix rho = random_density(n, rng);
    const ComplexMatrix u = random_unitary(n, rng);
    const double s = vn_entropy(rho);
    CHECK_THAT(vn_entropy(hermitian_part(u * rho * u.adjoint())), WithinAbs(s, 1e-10));
    CHECK_THAT(s, WithinAbs(oracle::entropy_of(rho), 1e-10));
  }
}

TEST_CASE("projector predicates", "[matrix][projector]") {
  CHECK(is_projector(diag({1, 1, 0})));
  CHECK(proj_dim(diag({1, 1, 0})) == 2);
  CHECK_FALSE(is_projector(diag({0.5, 0.5})));
  CHECK_THROWS_AS(proj_dim(diag({0.5, 0.5})), std::invalid_argument);

  const double a = 0.75;
  const Complex b = std::sqrt(3.0) / 4.0;
  CHECK_THAT(std::norm(b), WithinAbs(a * (1 - a), 1e-15));
  ComplexMatrix p(2, 2);
  p << a, b, std::conj(b), 1 - a;
  CHECK(is_projector(p));
  CHECK(proj_dim(p) == 1);
}

TEST_CASE("projector_onto and range_basis", "[matrix][projector]") {
  Rng rng = make_rng(15);
  const ComplexMatrix cols = random_ginibre(5, 2, rng);
  const ComplexMatrix p = projector_onto(cols);
  CHECK(is_projector(p, 1e-12));
  CHECK(proj_dim(p, 1e-12) == 2);
  CHECK(max_abs(p * cols - cols) < 1e-12);
  const ComplexMatrix basis = range_basis(p, 1e-10);
  CHECK(basis.cols() == 2);
  CHECK(max_abs(basis.adjoint() * basis - identity(2)) < 1e-12);
  CHECK(max_abs(basis * basis.adjoint() - p) < 1e-12);
}

TEST_CASE("swap operator", "[matrix][permutation]") {
  CHECK(swap_operator(1) == identity(1));
  for (std::size_t n : {2u, 3u}) {
    const ComplexMatrix m = swap_operator(n);
    CHECK(m == oracle::swap(n));
    CHECK(m * m == identity(n * n));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) CHECK((m(i, j) == Complex(0.0) || m(i, j) == Complex(1.0)));
  }
  Rng rng = make_rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = trial % 2 == 0 ? 2 : 3;
    const ComplexMatrix a = random_ginibre(n, rng), b = random_ginibre(n, rng);
    const Complex lhs = (swap_operator(n) * kron(a, b)).trace();
    const Complex rhs = (a * b).trace();
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("fourfold cyclic shift", "[matrix][permutation]") {
  const ComplexMatrix s = cyclic_shift_4(2);
  CHECK(s == oracle::shift4(2));
  CHECK(cyclic_shift_4(3) == oracle::shift4(3));
  CHECK(s * s * s * s == identity(16));
  CHECK(s * s != identity(16));
  CHECK(std::abs((kron_all({identity(2), identity(2), identity(2), identity(2)}) * s).trace() - 2.0) == 0.0);
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = trial % 2 == 0 ? 2 : 3;
    const ComplexMatrix a = random_ginibre(n, rng), b = random_ginibre(n, rng), c = random_ginibre(n, rng),
                        d = random_ginibre(n, rng);
    const Complex lhs = (kron_all({a, b, c, d}) * cyclic_shift_4(n)).trace();
    const Complex rhs = (a * b * c * d).trace();
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("permute_factors validates its permutation", "[matrix][permutation]") {
  const std::size_t dims[] = {2, 3};
  const std::size_t bad[] = {0, 0};
  CHECK_THROWS_AS(permute_factors(dims, bad), std::invalid_argument);
  const std::size_t perm[] = {1, 0};
  Rng rng = make_rng(18);
  const ComplexMatrix a = random_ginibre(2, rng), b = random_ginibre(3, rng);
  const ComplexMatrix p = permute_factors(dims, perm);
  CHECK(max_abs(p * kron(a, b) * p.adjoint() - kron(b, a)) < 1e-14);
}

TEST_CASE("partial traces", "[matrix][trace]") {
  Rng rng = make_rng(19);
  const ComplexMatrix a = random_ginibre(2, rng), b = random_ginibre(3, rng);
  const ComplexMatrix k = kron(a, b);
  CHECK(max_abs(partial_trace_second(k, 2, 3) - a * b.trace()) < 1e-12);
  CHECK(max_abs(partial_trace_first(k, 2, 3) - a.trace() * b) < 1e-12);
  const ComplexMatrix m = random_ginibre(6, rng);
  CHECK(max_abs(partial_trace_first(m, 2, 3) - oracle::trace_first(m, 2, 3)) < 1e-13);
}

TEST_CASE("random generators are seeded and well formed", "[matrix][random]") {
  Rng r1 = make_rng(5), r2 = make_rng(5);
  CHECK(random_unitary(4, r1) == random_unitary(4, r2));
  Rng rng = make_rng(6);
  CHECK(is_unitary(random_unitary(5, rng), 1e-12));
  CHECK(is_density_matrix(random_density(4, rng), 1e-12));
  const ComplexMatrix p = random_projector(5, 3, rng);
  CHECK(is_projector(p, 1e-12));
  CHECK(proj_dim(p, 1e-12) == 3);
  const double spec[] = {0.5, 0.3, 0.2};
  const ComplexMatrix rho = random_density_with_spectrum(spec, rng);
  CHECK_THAT(vn_entropy(rho, 1e-12), WithinAbs(-(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2)), 1e-12));
}
