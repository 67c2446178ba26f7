#include "cohist/decoherence.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace cohist;
using Catch::Matchers::WithinAbs;

namespace {

const ComplexMatrix kAlpha = diag({1, 0});
const ComplexMatrix kBeta = diag({0, 1});

DecoherenceFunction x1() { return from_operator({0.5 * (kron(kAlpha, kBeta) + kron(kBeta, kAlpha)), 2}); }
DecoherenceFunction x2() { return from_operator({kron(kAlpha, kAlpha), 2}); }

HistoryProposition prop(const ComplexMatrix& m) { return HistoryProposition(m, 1e-9); }

HistoryProposition random_homogeneous(std::size_t h, std::size_t n, Rng& rng) {
  std::vector<ComplexMatrix> per_time;
  for (std::size_t t = 0; t < n; ++t) per_time.push_back(random_projector(h, uniform_index(0, h, rng), rng));
  return homogeneous_to_proposition(HomogeneousHistory(per_time, 1e-9));
}

std::vector<ComplexMatrix> random_unitaries(std::size_t h, std::size_t count, Rng& rng) {
  std::vector<ComplexMatrix> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_unitary(h, rng));
  return out;
}

}  // namespace

TEST_CASE("operator_value matches the full Kronecker trace", "[decoherence]") {
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t v = uniform_index(1, 4, rng);
    const DecoherenceOperator op(random_ginibre(v * v, rng), v);
    const ComplexMatrix a = random_ginibre(v, rng), b = random_ginibre(v, rng);
    const Complex got = operator_value(op, a, b);
    const Complex want = oracle::pair_trace(a, b, op.x);
    CHECK(std::abs(got - want) < 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("normalisation for every backend", "[decoherence]") {
  Rng rng = make_rng(32);
  const ComplexMatrix rho = random_density(2, rng);
  const auto chain = from_chain(rho, random_unitaries(2, 3, rng), 2);
  const std::vector<DecoherenceFunction> all = {
      x1(), x2(), from_single_time(rho), from_two_time(rho), chain,
      convex_combine(chain, from_two_time(rho), 0.3)};
  for (const auto& d : all) {
    const auto one = unit_proposition(d);
    CHECK(std::abs(d(one, one) - 1.0) < 1e-10);
  }
}

TEST_CASE("X1 decoherence between P and 1-P", "[decoherence][example]") {
  const auto d = x1();
  for (double a = 0.0; a <= 1.0; a += 0.05)
    for (double phase : {0.0, 0.7, 2.5}) {
      const ComplexMatrix p = oracle::bloch_projector(a, phase);
      const Complex v = d(prop(p), prop(identity(2) - p));
      CHECK_THAT(v.real(), WithinAbs(0.5 * (a * a + (1 - a) * (1 - a)), 1e-12));
      CHECK_THAT(v.imag(), WithinAbs(0.0, 1e-12));
    }
  CHECK_THAT(d(prop(kAlpha), prop(kBeta)).real(), WithinAbs(0.5, 1e-15));
}

TEST_CASE("single-time values", "[decoherence][single-time]") {
  const auto d = from_single_time(diag({0.75, 0.25}));
  CHECK_THAT(d(prop(kAlpha), prop(kAlpha)).real(), WithinAbs(0.75, 1e-15));

  const auto pure = from_single_time(diag({1, 0}));
  CHECK_THAT(pure(prop(kAlpha), prop(kAlpha)).real(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(pure(prop(kBeta), prop(kBeta)).real(), WithinAbs(0.0, 1e-15));

  Rng rng = make_rng(33);
  const auto mixed = from_single_time(diag({0.5, 0.5}));
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = prop(random_projector(2, 1, rng));
    CHECK_THAT(mixed(p, p).real(), WithinAbs(0.5, 1e-12));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix rho = random_density(4, rng);
    const ComplexMatrix u = random_unitary(4, rng);
    const ComplexMatrix p1 = u.leftCols(2) * u.leftCols(2).adjoint();
    const ComplexMatrix p2 = u.col(3) * u.col(3).adjoint();
    CHECK(std::abs(from_single_time(rho)(prop(p1), prop(p2))) < 1e-12);
  }
}

TEST_CASE("single-time operator reproduces tr(P rho Q)", "[decoherence][single-time]") {
  Rng rng = make_rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = uniform_index(2, 4, rng);
    const ComplexMatrix rho = random_density(n, rng);
    const auto d = from_single_time(rho);
    const ComplexMatrix p = random_projector(n, uniform_index(1, n, rng), rng);
    const ComplexMatrix q = random_projector(n, uniform_index(1, n, rng), rng);
    CHECK(std::abs(d(prop(p), prop(q)) - (p * rho * q).trace()) < 1e-12);
  }
  CHECK_THROWS_AS(from_single_time(diag({0.7, 0.7})), std::invalid_argument);
}

TEST_CASE("validation of the operator conditions", "[decoherence][validate]") {
  const auto rx2 = validate(*x2().explicit_operator());
  CHECK(rx2.passed());
  CHECK(rx2.violations().empty());

  const auto bad = validate(DecoherenceOperator(0.9 * kron(kAlpha, kAlpha), 2));
  CHECK_FALSE(bad.passed());
  CHECK_FALSE(bad.trace_ok());
  REQUIRE(bad.violations().size() == 1);
  CHECK(bad.violations()[0].find("tr X = 1") != std::string::npos);

  ComplexMatrix asym = kron(kAlpha, kAlpha);
  asym(0, 1) = 0.3;
  CHECK_FALSE(validate(DecoherenceOperator(asym, 2)).swap_ok());

  const auto neg = validate(DecoherenceOperator(kron(kBeta, kBeta) * 2.0 - kron(kAlpha, kAlpha), 2));
  CHECK_FALSE(neg.positivity_ok());
  CHECK(neg.min_diagonal < 0.0);

  const auto r1 = validate(*x1().explicit_operator());
  CHECK(r1.passed());
  CHECK(r1.min_diagonal >= 0.0);
}

TEST_CASE("decoherence operators need not be positive", "[decoherence][validate]") {
  // X1 happens to be positive semidefinite: eigenvalues 0, 0, 1/2, 1/2
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> e1(x1().explicit_operator()->x);
  CHECK(e1.eigenvalues().minCoeff() >= 0.0);
  // the single-time operator M (1 (x) rho) contains the swap and is not
  const auto d = from_single_time(diag({0.75, 0.25}));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(d.explicit_operator()->x));
  CHECK(es.eigenvalues().minCoeff() < -0.1);
  CHECK(validate(*d.explicit_operator()).passed());
}

TEST_CASE("two-time operator", "[decoherence][two-time]") {
  Rng rng = make_rng(35);
  const ComplexMatrix rho = random_density(2, rng);
  const auto d = from_two_time(rho);
  const auto one = HistoryProposition::unit(4);
  CHECK(std::abs(d(one, one) - 1.0) < 1e-12);
  CHECK(validate(*d.explicit_operator(), 50).passed());

  for (std::size_t n : {2u, 3u}) {
    const auto mixed = from_two_time(identity(n) / static_cast<double>(n));
    const auto one_v = HistoryProposition::unit(n * n);
    for (int trial = 0; trial < 30; ++trial) {
      const ComplexVector v = random_unit_vector(n * n, rng);
      double antisym = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          antisym += std::norm(v(static_cast<Eigen::Index>(i * n + j)) - v(static_cast<Eigen::Index>(j * n + i)));
      const double expected = (1.0 - antisym) / static_cast<double>(n);
      const Complex got = mixed(one_v, prop(v * v.adjoint()));
      CHECK_THAT(got.real(), WithinAbs(expected, 1e-12));
      CHECK_THAT(got.imag(), WithinAbs(0.0, 1e-12));
    }
  }
}

TEST_CASE("two-time operator agrees with the chain backend", "[decoherence][two-time][chain]") {
  Rng rng = make_rng(36);
  for (std::size_t n : {2u, 3u}) {
    const ComplexMatrix rho = random_density(n, rng);
    const auto op = from_two_time(rho);
    const auto chain = from_chain(rho, std::vector<ComplexMatrix>(3, identity(n)), 2);
    const std::vector<ComplexMatrix> ids(3, identity(n));
    for (int trial = 0; trial < 50; ++trial) {
      const auto a = random_homogeneous(n, 2, rng), b = random_homogeneous(n, 2, rng);
      const Complex want = oracle::chain_value(rho, ids, a.components()[0].per_time(), b.components()[0].per_time());
      CHECK(std::abs(op(a, b) - want) < 1e-10);
      CHECK(std::abs(chain(a, b) - want) < 1e-12);
    }
  }
}

TEST_CASE("chain backend", "[decoherence][chain]") {
  Rng rng = make_rng(37);
  SECTION("one time with unitary evolution is a conjugated single-time theory") {
    const ComplexMatrix rho = random_density(3, rng);
    const auto u = random_unitaries(3, 2, rng);
    const auto chain = from_chain(rho, u, 1);
    const auto single = from_single_time(hermitian_part(u[0].adjoint() * rho * u[0]));
    for (int trial = 0; trial < 30; ++trial) {
      const auto a = random_homogeneous(3, 1, rng), b = random_homogeneous(3, 1, rng);
      CHECK(std::abs(chain(a, b) - single(a, b)) < 1e-12);
    }
  }
  SECTION("unit history has probability one") {
    const auto chain = from_chain(random_density(2, rng), random_unitaries(2, 4, rng), 3);
    const auto one = HistoryProposition::unit(2, 3);
    CHECK(std::abs(chain(one, one) - 1.0) < 1e-12);
  }
  SECTION("spectral histories carry the eigenvalues of rho") {
    const double spec[] = {0.6, 0.3, 0.1};
    const ComplexMatrix rho = random_density_with_spectrum(spec, rng);
    const auto u = random_unitaries(3, 3, rng);
    const auto chain = from_chain(rho, u, 2);
    auto [vals, vecs] = herm_eigenvectors(rho);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const ComplexMatrix q = vecs.col(i) * vecs.col(i).adjoint();
      const ComplexMatrix w1 = u[0], w2 = u[0] * u[1];
      const HomogeneousHistory h({hermitian_part(w1.adjoint() * q * w1), hermitian_part(w2.adjoint() * q * w2)}, 1e-9);
      const auto p = homogeneous_to_proposition(h);
      CHECK_THAT(chain(p, p).real(), WithinAbs(vals(i), 1e-12));
    }
  }
  SECTION("length mismatch and raw projectors are rejected") {
    CHECK_THROWS_AS(from_chain(diag({1, 0}), {identity(2)}, 1), std::invalid_argument);
    const auto chain = from_chain(diag({1, 0}), {identity(2), identity(2)}, 1);
    CHECK_THROWS_AS(chain(prop(kAlpha), prop(kAlpha)), std::invalid_argument);
  }
  SECTION("non-unitary evolution is accepted without renormalisation") {
    const auto chain = from_chain(diag({0.5, 0.5}), {0.5 * identity(2), identity(2)}, 1);
    const auto one = unit_proposition(chain);
    CHECK_THAT(chain(one, one).real(), WithinAbs(0.25, 1e-15));
    CHECK_FALSE(validate(materialize_operator(chain)).trace_ok());
  }
  SECTION("full windows of homogeneous histories sum to one") {
    const auto chain = from_chain(random_density(2, rng), random_unitaries(2, 4, rng), 3);
    std::vector<std::vector<ComplexMatrix>> res;
    for (int t = 0; t < 3; ++t) {
      const ComplexMatrix u = random_unitary(2, rng);
      res.push_back({u.col(0) * u.col(0).adjoint(), u.col(1) * u.col(1).adjoint()});
    }
    const Window w = product_window(res, 1e-9);
    double total = 0.0;
    for (const auto& b : w.blocks()) total += chain(b, b).real();
    CHECK_THAT(total, WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("materialised chain operator reproduces the chain values", "[decoherence][chain]") {
  Rng rng = make_rng(38);
  for (std::size_t n_times : {1u, 2u, 3u}) {
    std::vector<ComplexMatrix> u = random_unitaries(2, n_times + 1, rng);
    u[1] = 0.8 * random_ginibre(2, rng);  // non-unitary is fine too
    const auto chain = from_chain(random_density(2, rng), u, n_times);
    const auto op = materialize_operator(chain);
    CHECK(op.dim_v == chain.dim_v());
    for (int trial = 0; trial < 30; ++trial) {
      const auto a = random_homogeneous(2, n_times, rng), b = random_homogeneous(2, n_times, rng);
      CHECK(std::abs(operator_value(op, a.matrix(), b.matrix()) - chain(a, b)) < 1e-12);
    }
  }
}

TEST_CASE("trivial time insertion in a recipe", "[decoherence][chain]") {
  Rng rng = make_rng(39);
  const auto r = ChainRecipe{random_density(2, rng), random_unitaries(2, 3, rng), 2};
  for (std::size_t pos = 0; pos <= 2; ++pos) {
    const auto ext = from_chain(insert_trivial_time(r, pos));
    const auto base = from_chain(r);
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_homogeneous(2, 2, rng), b = random_homogeneous(2, 2, rng);
      const auto ea = homogeneous_to_proposition(insert_trivial_time(a.components()[0], pos));
      const auto eb = homogeneous_to_proposition(insert_trivial_time(b.components()[0], pos));
      CHECK(std::abs(ext(ea, eb) - base(a, b)) < 1e-12);
    }
  }
}

TEST_CASE("Hermiticity and additivity for every backend", "[decoherence][property]") {
  Rng rng = make_rng(40);
  const ComplexMatrix rho = random_density(2, rng);
  const std::vector<DecoherenceFunction> explicit_backends = {x1(), x2(), from_single_time(random_density(4, rng)),
                                                              from_two_time(rho)};
  for (const auto& d : explicit_backends) {
    const std::size_t v = d.dim_v();
    for (int trial = 0; trial < 200; ++trial) {
      const ComplexMatrix u = random_unitary(v, rng);
      auto rank1 = [&](Eigen::Index j) { return prop(u.col(j) * u.col(j).adjoint()); };
      const auto a = rank1(0), b = rank1(1);
      const auto g = prop(random_projector(v, uniform_index(1, v, rng), rng));
      CHECK(std::abs(d(a, g) - std::conj(d(g, a))) < 1e-10);
      CHECK(std::abs(d(oplus(a, b), g) - d(a, g) - d(b, g)) < 1e-10);
    }
  }
  const auto chain = from_chain(rho, random_unitaries(2, 3, rng), 2);
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexMatrix u = random_unitary(2, rng);
    const ComplexMatrix p0 = u.col(0) * u.col(0).adjoint(), p1 = u.col(1) * u.col(1).adjoint();
    const ComplexMatrix q = random_projector(2, 1, rng);
    const auto a = homogeneous_to_proposition(HomogeneousHistory({p0, q}, 1e-9));
    const auto b = homogeneous_to_proposition(HomogeneousHistory({p1, q}, 1e-9));
    const auto g = random_homogeneous(2, 2, rng);
    CHECK(std::abs(chain(a, g) - std::conj(chain(g, a))) < 1e-10);
    CHECK(std::abs(chain(oplus(a, b, 1e-9), g) - chain(a, g) - chain(b, g)) < 1e-10);
  }
}

TEST_CASE("convex combinations", "[decoherence][convex]") {
  Rng rng = make_rng(41);
  const auto d1 = x2();
  const ComplexMatrix m = swap_operator(2);
  const auto d2 = from_operator({m * x2().explicit_operator()->x * m, 2});
  const auto d3 = from_single_time(random_density(2, rng));
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = prop(random_projector(2, 1, rng)), b = prop(random_projector(2, 1, rng));
    CHECK(std::abs(convex_combine(d1, d3, 1.0)(a, b) - d1(a, b)) < 1e-15);
    CHECK(std::abs(convex_combine(d1, d3, 0.0)(a, b) - d3(a, b)) < 1e-15);
    CHECK(std::abs(convex_combine(d1, d2, 0.5)(a, b) - 0.5 * (d1(a, b) + d2(a, b))) < 1e-15);
    CHECK(std::abs(convex_combine(d1, d3, 0.25)(a, b) - (0.25 * d1(a, b) + 0.75 * d3(a, b))) < 1e-15);
  }
  CHECK_THROWS_AS(convex_combine(d1, d2, 1.5), std::domain_error);
  CHECK_THROWS_AS(convex_combine(d1, d2, -0.1), std::domain_error);

  const ComplexMatrix rho = random_density(2, rng);
  const auto chain = from_chain(rho, random_unitaries(2, 3, rng), 2);
  const auto two = from_two_time(rho);
  const auto mix = convex_combine(chain, two, 0.4);
  CHECK(mix.explicit_operator() == nullptr);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_homogeneous(2, 2, rng), b = random_homogeneous(2, 2, rng);
    CHECK(std::abs(mix(a, b) - (0.4 * chain(a, b) + 0.6 * two(a, b))) < 1e-14);
    CHECK(std::abs(operator_value(materialize_operator(mix), a.matrix(), b.matrix()) - mix(a, b)) < 1e-12);
  }
}

TEST_CASE("impurity splitting", "[decoherence][impurity]") {
  Rng rng = make_rng(42);
  const auto op = *from_single_time(random_density(2, rng)).explicit_operator();
  SECTION("equal inputs give Y = 0") {
    const ComplexMatrix s = random_hermitian(2, rng);
    const auto split = impurity_split(op, s, s);
    CHECK(split.y == zeros(4));
    CHECK(split.plus.x == op.x);
    CHECK(split.minus.x == op.x);
  }
  SECTION("Y has vanishing diagonal, halves validate, values average") {
    for (int trial = 0; trial < 20; ++trial) {
      const ComplexMatrix s1 = random_hermitian(2, rng), s2 = random_hermitian(2, rng);
      const auto split = impurity_split(op, s1, s2);
      const DecoherenceOperator y(split.y, 2);
      const ComplexMatrix m = swap_operator(2);
      CHECK(max_abs(m * split.y * m - split.y.adjoint()) == 0.0);
      CHECK(std::abs(split.y.trace()) < 1e-15);
      for (int s = 0; s < 20; ++s) {
        const ComplexMatrix a = random_projector(2, uniform_index(0, 2, rng), rng);
        CHECK(std::abs(operator_value(y, a, a)) < 1e-12);
        const ComplexMatrix b = random_projector(2, uniform_index(0, 2, rng), rng);
        const Complex avg = 0.5 * operator_value(split.plus, a, b) + 0.5 * operator_value(split.minus, a, b);
        CHECK(std::abs(avg - operator_value(op, a, b)) < 1e-12);
      }
      CHECK(validate(split.plus, 50).passed());
      CHECK(validate(split.minus, 50).passed());
      const double eps = std::numeric_limits<double>::epsilon();
      CHECK(max_abs(0.5 * split.plus.x + 0.5 * split.minus.x - op.x) <=
            2 * eps * std::max(max_abs(op.x), max_abs(split.y)));
    }
  }
  SECTION("non-Hermitian inputs are rejected") {
    CHECK_THROWS_AS(impurity_split(op, random_ginibre(2, rng), identity(2)), std::invalid_argument);
    CHECK_THROWS_AS(impurity_split(op, identity(3), identity(3)), std::invalid_argument);
  }
}

TEST_CASE("canonical operator", "[decoherence][canonical]") {
  Rng rng = make_rng(43);
  SECTION("trivial window") {
    const auto c = canonical_operator(from_single_time(random_density(3, rng)), trivial_window(3));
    CHECK(max_abs(c.x - identity(9) / 9.0) < 1e-15);
    CHECK(validate(c).passed());
  }
  SECTION("X2 on {alpha, beta} is X2 itself") {
    const auto c = canonical_operator(x2(), make_window({kAlpha, kBeta}));
    CHECK(max_abs(c.x - kron(kAlpha, kAlpha)) < 1e-15);
  }
  SECTION("spectral window of a single-time theory") {
    for (int trial = 0; trial < 20; ++trial) {
      const ComplexMatrix rho = random_density(3, rng);
      const auto d = from_single_time(rho);
      auto [vals, vecs] = herm_eigenvectors(rho);
      const Window w = window_from_basis(vecs, 1e-9);
      const auto c = canonical_operator(d, w);
      const auto cd = from_operator(c);
      for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < w.size(); ++j)
          CHECK(std::abs(cd(w[i], w[j]) - d(w[i], w[j])) < 1e-10);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(c.x));
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
      CHECK(w_equivalent(d, cd, w));
    }
  }
  SECTION("inconsistent windows are rejected") {
    CHECK_THROWS_AS(canonical_operator(x1(), make_window({kAlpha, kBeta})), InconsistentWindow);
  }
}

TEST_CASE("W-purity", "[decoherence][purity]") {
  const Window w = make_window({kAlpha, kBeta});
  CHECK(is_w_pure(w_class(x2(), w)));
  CHECK_FALSE(is_w_pure(w_class(from_single_time(diag({0.5, 0.5})), w)));
  CHECK_FALSE(w_equivalent(x2(), from_single_time(diag({0.5, 0.5})), w));
  CHECK(w_equivalent(x2(), from_single_time(diag({1, 0})), w));
  CHECK_FALSE(w_equivalent(x1(), x2(), w));
}

TEST_CASE("tensor product of decoherence functions", "[decoherence][tensor]") {
  Rng rng = make_rng(44);
  const auto d1 = from_single_time(random_density(2, rng));
  const auto d2 = from_two_time(random_density(2, rng));
  const auto d = tensor_product(d1, d2);
  CHECK(d.dim_v() == 8);
  CHECK(validate(*d.explicit_operator(), 20).passed());
  for (int trial = 0; trial < 30; ++trial) {
    const ComplexMatrix a1 = random_projector(2, uniform_index(0, 2, rng), rng);
    const ComplexMatrix b1 = random_projector(2, uniform_index(0, 2, rng), rng);
    const ComplexMatrix a2 = random_projector(4, uniform_index(0, 4, rng), rng);
    const ComplexMatrix b2 = random_projector(4, uniform_index(0, 4, rng), rng);
    const Complex lhs = d(prop(kron(a1, a2)), prop(kron(b1, b2)));
    const Complex rhs = d1(prop(a1), prop(b1)) * d2(prop(a2), prop(b2));
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}
