// Strategies for the minimum of the renormalised entropy over consistent
// windows. Only the spectral strategy has a proven optimality guarantee
// (single-time theories, and homogeneous windows of unitary n-time
// theories); the others report upper bounds.
#pragma once

#include "cohist/entropy.hpp"

#include <numbers>
#include <string_view>

namespace cohist {

enum class Strategy { spectral, parametrized_1d, greedy_refinement, exhaustive };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::spectral: return "spectral";
    case Strategy::parametrized_1d: return "param1d";
    case Strategy::greedy_refinement: return "greedy";
    case Strategy::exhaustive: return "exhaustive";
  }
  return "unknown";
}

/// What a search result claims about the true minimum.
enum class BoundKind {
  homogeneous_minimum,  // proven minimum over consistent homogeneous windows
  family_minimum,       // exact minimum over the supplied family
  upper_bound,
};

inline std::string_view to_string(BoundKind b) {
  switch (b) {
    case BoundKind::homogeneous_minimum: return "homogeneous_minimum";
    case BoundKind::family_minimum: return "family_minimum";
    case BoundKind::upper_bound: return "upper_bound";
  }
  return "unknown";
}

struct SearchResult {
  double best_value;
  Window best_window;
  Strategy strategy = Strategy::spectral;
  BoundKind bound = BoundKind::upper_bound;
  std::uint64_t evaluations = 0;  // windows evaluated
  std::uint64_t seed = 0;
  // parametrized search only: least consistency residual over the
  // rank-one candidate windows of the initial grid or sample
  double min_rank1_residual = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Spectral strategy

/// Homogeneous window whose time-k projectors are the eigenprojectors of rho
/// pulled back through the accumulated evolution W_k = U(t0,t1)...U(t_{k-1},t_k),
/// so that chain operators reduce to products of spectral projectors.
/// Degenerate eigenspaces are split along the eigensolver's basis.
inline Window spectral_window(const ChainRecipe& r, double tol = kDefaultTol) {
  if (!r.unitary(tol))
    throw std::invalid_argument("spectral window: evolution operators are not unitary, conjugated projectors "
                                "would not be projectors");
  auto [vals, vecs] = herm_eigenvectors(r.rho, tol);
  std::vector<ComplexMatrix> spectral;
  for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
    const ComplexVector c = vecs.col(j);
    spectral.push_back(hermitian_part(c * c.adjoint()));
  }
  std::vector<std::vector<ComplexMatrix>> per_time;
  ComplexMatrix accumulated = r.evolutions[0];
  for (std::size_t t = 0; t < r.n_times; ++t) {
    std::vector<ComplexMatrix> slot;
    for (const auto& q : spectral) slot.push_back(hermitian_part(accumulated.adjoint() * q * accumulated));
    per_time.push_back(std::move(slot));
    accumulated = accumulated * r.evolutions[t + 1];
  }
  // conjugation by a unitary keeps projectors exact only up to roundoff
  return product_window(per_time, std::max(tol, 1e-8));
}

inline SearchResult minimize_spectral(const DecoherenceFunction& d, double tol = kDefaultTol) {
  const ChainRecipe* r = d.recipe();
  if (!r) throw std::invalid_argument("minimize_spectral: decoherence function has no state/evolution recipe");
  Window w = spectral_window(*r, tol);
  const double value = i_norm(d, w, tol);
  return {value, std::move(w), Strategy::spectral, BoundKind::homogeneous_minimum, 1, 0};
}

// ---------------------------------------------------------------------------
// Parametrized rank-one search

struct Param1dOptions {
  std::size_t theta_steps = 64;  // Bloch grid on C^2
  std::size_t phi_steps = 64;
  std::size_t samples = 256;     // Haar bases when dim V > 2
  std::size_t refine_steps = 40;
  double initial_step = 0.25;
  double tol = kDefaultTol;
  std::uint64_t seed = 0;
};

namespace detail {

inline ComplexMatrix bloch_basis(double theta, double phi) {
  ComplexMatrix u(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const Complex e = std::polar(1.0, phi);
  u(0, 0) = c;
  u(1, 0) = e * s;
  u(0, 1) = -std::conj(e) * s;
  u(1, 1) = c;
  return u;
}

/// Hermitian basis of n x n matrices: symmetric and antisymmetric pairs,
/// then diagonal units.
inline std::vector<ComplexMatrix> hermitian_generators(std::size_t n) {
  std::vector<ComplexMatrix> out;
  const auto ni = static_cast<Eigen::Index>(n);
  for (Eigen::Index a = 0; a < ni; ++a)
    for (Eigen::Index b = a + 1; b < ni; ++b) {
      ComplexMatrix sym = ComplexMatrix::Zero(ni, ni), asym = ComplexMatrix::Zero(ni, ni);
      sym(a, b) = sym(b, a) = 1.0;
      asym(a, b) = Complex(0, -1);
      asym(b, a) = Complex(0, 1);
      out.push_back(std::move(sym));
      out.push_back(std::move(asym));
    }
  for (Eigen::Index a = 0; a < ni; ++a) {
    ComplexMatrix e = ComplexMatrix::Zero(ni, ni);
    e(a, a) = 1.0;
    out.push_back(std::move(e));
  }
  return out;
}

/// exp(i t G) for Hermitian G.
inline ComplexMatrix unitary_exp(const ComplexMatrix& g, double t) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(g);
  const auto& vals = solver.eigenvalues();
  ComplexVector phases(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) phases(i) = std::polar(1.0, t * vals(i));
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

/// Residual and renormalised entropy of the rank-one window on the columns
/// of u, computed straight from the operator.
struct BasisScore {
  double residual = 0.0;
  double value = std::numeric_limits<double>::infinity();
};

inline BasisScore score_basis(const DecoherenceOperator& op, const ComplexMatrix& u, double tol) {
  const auto n = u.cols();
  std::vector<ComplexMatrix> proj;
  proj.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const ComplexVector c = u.col(j);
    proj.push_back(c * c.adjoint());
  }
  BasisScore s;
  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex v = operator_value(op, proj[static_cast<std::size_t>(i)], proj[static_cast<std::size_t>(j)]);
      if (i == j) probs[static_cast<std::size_t>(i)] = v.real();
      else s.residual = std::max(s.residual, std::abs(v));
    }
  if (s.residual <= tol) {
    const std::vector<std::size_t> dims(static_cast<std::size_t>(n), 1);
    if (std::all_of(probs.begin(), probs.end(), [&](double p) { return p >= -tol; }))
      s.value = i_x_from(probs, dims, static_cast<std::size_t>(n), 2.0, tol);
  }
  return s;
}

inline DecoherenceOperator operator_backend(const DecoherenceFunction& d, const char* who) {
  if (d.is_chain())
    throw std::invalid_argument(std::string(who) +
                                ": needs an operator backend; expand the chain recipe with materialize_operator");
  return materialize_operator(d);
}

}  // namespace detail

/// Searches rank-one windows given by the columns of unitaries: a Bloch
/// grid on C^2, the standard basis plus seeded Haar bases above that,
/// followed by coordinate descent on the best unitary's generators. Only
/// consistent windows count; falls back to the trivial window.
inline SearchResult minimize_parametrized_1d(const DecoherenceFunction& d, const Param1dOptions& opt = {}) {
  const DecoherenceOperator op = detail::operator_backend(d, "minimize_parametrized_1d");
  const std::size_t n = op.dim_v;
  std::uint64_t evaluations = 0;
  double min_residual = std::numeric_limits<double>::infinity();

  double best = std::numeric_limits<double>::infinity();
  ComplexMatrix best_u;
  auto consider = [&](const ComplexMatrix& u, bool initial) {
    const auto s = detail::score_basis(op, u, opt.tol);
    ++evaluations;
    if (initial) min_residual = std::min(min_residual, s.residual);
    if (s.value < best) {
      best = s.value;
      best_u = u;
    }
  };

  if (n == 2) {
    for (std::size_t i = 0; i <= opt.theta_steps; ++i)
      for (std::size_t j = 0; j < std::max<std::size_t>(opt.phi_steps, 1); ++j) {
        const double theta = std::numbers::pi * static_cast<double>(i) / static_cast<double>(opt.theta_steps);
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(opt.phi_steps);
        consider(detail::bloch_basis(theta, phi), true);
      }
  } else {
    Rng rng = make_rng(opt.seed);
    consider(identity(n), true);
    for (std::size_t s = 0; s < opt.samples; ++s) consider(random_unitary(n, rng), true);
  }

  if (std::isfinite(best) && opt.refine_steps > 0) {
    const auto gens = detail::hermitian_generators(n);
    double step = opt.initial_step;
    for (std::size_t it = 0; it < opt.refine_steps; ++it) {
      bool improved = false;
      for (const auto& g : gens)
        for (double sign : {1.0, -1.0}) {
          const ComplexMatrix u = detail::unitary_exp(g, sign * step) * best_u;
          const double before = best;
          consider(u, false);
          if (best < before - 1e-15) improved = true;
        }
      if (!improved) step *= 0.5;
    }
  }

  Window w = std::isfinite(best) ? window_from_basis(best_u, 1e-8) : trivial_window(d);
  double value = i_norm(d, w, opt.tol);
  if (value > 0.0) {
    w = trivial_window(d);
    value = i_norm(d, w, opt.tol);
  }
  return {value, std::move(w), Strategy::parametrized_1d, BoundKind::upper_bound, evaluations, opt.seed, min_residual};
}

struct Rank1ProbabilityResult {
  double value = 0.0;
  ComplexVector v;
  std::uint64_t evaluations = 0;
};

/// Largest d(1, P_v) over unit vectors v found by seeded sampling and
/// coordinate ascent. If P_v belongs to a consistent window then
/// d(P_v, P_v) = d(1, P_v), so this bounds the probability any rank-one
/// proposition can carry in a consistent window.
inline Rank1ProbabilityResult max_rank1_probability(const DecoherenceFunction& d, std::size_t samples = 64,
                                                    std::size_t refine_steps = 200, std::uint64_t seed = 0) {
  const DecoherenceOperator op = detail::operator_backend(d, "max_rank1_probability");
  const std::size_t n = op.dim_v;
  const ComplexMatrix one = identity(n);
  Rank1ProbabilityResult out;
  auto score = [&](const ComplexVector& v) {
    ++out.evaluations;
    return operator_value(op, one, v * v.adjoint()).real();
  };
  Rng rng = make_rng(seed);
  out.v = random_unit_vector(n, rng);
  out.value = score(out.v);
  for (std::size_t s = 1; s < samples; ++s) {
    ComplexVector v = random_unit_vector(n, rng);
    const double val = score(v);
    if (val > out.value) out.value = val, out.v = std::move(v);
  }
  double step = 0.25;
  for (std::size_t it = 0; it < refine_steps && step > 1e-12; ++it) {
    bool improved = false;
    for (std::size_t k = 0; k < n; ++k)
      for (Complex dir : {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)}) {
        ComplexVector v = out.v;
        v(static_cast<Eigen::Index>(k)) += step * dir;
        v.normalize();
        const double val = score(v);
        if (val > out.value + 1e-16) out.value = val, out.v = std::move(v), improved = true;
      }
    if (!improved) step *= 0.5;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy refinement

struct GreedyOptions {
  std::size_t max_rounds = 32;
  std::size_t candidates_per_block = 8;
  double tol = kDefaultTol;
  std::uint64_t seed = 0;
};

namespace detail {

/// Hermitian part of the operator K_a with d(A, a) = tr(A K_a), compressed
/// onto the range of a (columns of `basis`).
inline ComplexMatrix block_contraction(const DecoherenceOperator& op, const ComplexMatrix& block,
                                       const ComplexMatrix& basis) {
  const std::size_t v = op.dim_v;
  const ComplexMatrix k = partial_trace_second(kron(identity(v), block) * op.x, v, v);
  return basis.adjoint() * hermitian_part(k) * basis;
}

}  // namespace detail

/// Starts from the trivial window and repeatedly applies the consistent
/// binary split with the largest entropy decrease. Candidate splits of a
/// block come from eigenvector thresholds of its contracted operator plus
/// seeded random splits.
inline SearchResult minimize_greedy_refinement(const DecoherenceFunction& d, const GreedyOptions& opt = {}) {
  const DecoherenceOperator op = detail::operator_backend(d, "minimize_greedy_refinement");
  const std::size_t v = op.dim_v;
  Rng rng = make_rng(opt.seed);
  std::uint64_t evaluations = 0;

  std::vector<ComplexMatrix> blocks{identity(v)};
  std::vector<std::size_t> dims{v};
  ComplexMatrix values(1, 1);
  values(0, 0) = operator_value(op, blocks[0], blocks[0]);
  double current = i_x_from(diagonal_probabilities(values), dims, v, 2.0, opt.tol);

  for (std::size_t round = 0; round < opt.max_rounds; ++round) {
    double best_value = current - 1e-12;
    std::optional<std::tuple<std::size_t, ComplexMatrix, ComplexMatrix>> best_split;

    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::size_t m = dims[b];
      if (m < 2) continue;
      const ComplexMatrix basis = range_basis(blocks[b], 1e-8);
      std::vector<ComplexMatrix> sub_bases;  // m x m unitaries; first t columns span beta
      std::vector<std::size_t> ranks;
      const ComplexMatrix vecs = herm_eigenvectors(detail::block_contraction(op, blocks[b], basis), 1e-6).second;
      for (std::size_t t = 1; t < m; ++t) sub_bases.push_back(vecs), ranks.push_back(t);
      for (std::size_t c = 0; c < opt.candidates_per_block; ++c) {
        sub_bases.push_back(random_unitary(m, rng));
        ranks.push_back(uniform_index(1, m - 1, rng));
      }

      for (std::size_t c = 0; c < sub_bases.size(); ++c) {
        const auto cols = (basis * sub_bases[c]).leftCols(static_cast<Eigen::Index>(ranks[c])).eval();
        const ComplexMatrix beta = hermitian_part(cols * cols.adjoint());
        const ComplexMatrix gamma = blocks[b] - beta;
        ++evaluations;

        // values of the split window: old blocks except b, then beta, gamma
        std::vector<const ComplexMatrix*> cand;
        std::vector<std::size_t> cdims;
        for (std::size_t i = 0; i < blocks.size(); ++i)
          if (i != b) cand.push_back(&blocks[i]), cdims.push_back(dims[i]);
        cand.push_back(&beta), cdims.push_back(ranks[c]);
        cand.push_back(&gamma), cdims.push_back(m - ranks[c]);
        const auto k = static_cast<Eigen::Index>(cand.size());
        ComplexMatrix cv(k, k);
        Eigen::Index oi = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          if (i == b) continue;
          Eigen::Index oj = 0;
          for (std::size_t j = 0; j < blocks.size(); ++j) {
            if (j == b) continue;
            cv(oi, oj++) = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          }
          ++oi;
        }
        bool consistent = true;
        for (Eigen::Index i = k - 2; i < k && consistent; ++i)
          for (Eigen::Index j = 0; j < k; ++j) {
            cv(i, j) = operator_value(op, *cand[static_cast<std::size_t>(i)], *cand[static_cast<std::size_t>(j)]);
            if (j < k - 2)
              cv(j, i) = operator_value(op, *cand[static_cast<std::size_t>(j)], *cand[static_cast<std::size_t>(i)]);
            if (i != j && (std::abs(cv(i, j)) > opt.tol || (j < k - 2 && std::abs(cv(j, i)) > opt.tol))) {
              consistent = false;
              break;
            }
          }
        if (!consistent) continue;
        const auto probs = diagonal_probabilities(cv);
        if (std::any_of(probs.begin(), probs.end(), [&](double p) { return p < -opt.tol; })) continue;
        const double value = i_x_from(probs, cdims, v, 2.0, opt.tol);
        if (value < best_value) {
          best_value = value;
          best_split.emplace(b, beta, gamma);
        }
      }
    }

    if (!best_split) break;
    auto& [b, beta, gamma] = *best_split;
    const std::size_t rank_beta = proj_dim(beta, 1e-8);
    const std::size_t m = dims[b];
    blocks[b] = beta;
    dims[b] = rank_beta;
    blocks.push_back(gamma);
    dims.push_back(m - rank_beta);
    const auto k = static_cast<Eigen::Index>(blocks.size());
    values.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        values(i, j) = operator_value(op, blocks[static_cast<std::size_t>(i)], blocks[static_cast<std::size_t>(j)]);
    current = best_value;
  }

  std::vector<HistoryProposition> props;
  for (const auto& b : blocks) props.emplace_back(b, 1e-8);
  Window w = blocks.size() == 1 ? trivial_window(d) : Window(std::move(props), 1e-8);
  const double value = i_norm(d, w, opt.tol);
  return {value, std::move(w), Strategy::greedy_refinement, BoundKind::upper_bound, evaluations, opt.seed};
}

// ---------------------------------------------------------------------------
// Exhaustive search over a finite family

/// Every coarse-graining of a window, materialised.
inline std::vector<Window> coarse_graining_family(const Window& w) {
  std::vector<Window> out;
  for (auto& c : coarse_grainings(w)) out.push_back(c);
  return out;
}

/// Exact minimum over the consistent members of `family`; the trivial
/// window stands in when no member is consistent.
inline SearchResult minimize_exhaustive(const DecoherenceFunction& d, std::span<const Window> family,
                                        double tol = kDefaultTol) {
  if (family.empty()) throw std::invalid_argument("minimize_exhaustive: empty candidate family");
  std::optional<std::size_t> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const ComplexMatrix values = window_values(d, family[i]);
    if (off_diagonal_residual(values) > tol) continue;
    const double value = i_norm(d, family[i], tol);
    if (value < best_value) best_value = value, best = i;
  }
  Window w = best ? family[*best] : trivial_window(d);
  const double value = i_norm(d, w, tol);
  return {value, std::move(w), Strategy::exhaustive, BoundKind::family_minimum, family.size(), 0};
}

}  // namespace cohist
