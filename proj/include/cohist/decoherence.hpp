// Decoherence functions on the projector lattice of V: the operator form
// d(a, b) = tr_{V(x)V}((a (x) b) X), the chain-operator form of n-time
// quantum mechanics, convex mixtures, and the constructions built on them.
#pragma once

#include "cohist/histories.hpp"
#include "cohist/random.hpp"

#include <memory>
#include <optional>
#include <variant>

namespace cohist {

/// Operator X on V (x) V; conditions on it are checked by validate().
struct DecoherenceOperator {
  ComplexMatrix x;
  std::size_t dim_v = 0;

  DecoherenceOperator() = default;
  DecoherenceOperator(ComplexMatrix op, std::size_t v) : x(std::move(op)), dim_v(v) {
    if (v == 0 || !is_square(x) || dim(x) != v * v)
      throw std::invalid_argument("DecoherenceOperator: expected a " + std::to_string(v * v) + "x" +
                                  std::to_string(v * v) + " matrix");
    if (!all_finite(x)) throw std::invalid_argument("DecoherenceOperator: non-finite entries");
  }

  /// Infers dim V from the matrix size.
  static DecoherenceOperator from_matrix(ComplexMatrix op) {
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(op.rows()))));
    return DecoherenceOperator(std::move(op), n);
  }
};

/// tr((a (x) b) X) without forming the Kronecker product.
inline Complex operator_value(const DecoherenceOperator& op, const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto n = static_cast<Eigen::Index>(op.dim_v);
  if (a.rows() != n || b.rows() != n) throw std::invalid_argument("decoherence: proposition dimension mismatch");
  // tr((A (x) B) X) = sum A_ij B_kl X_{(j,l),(i,k)}
  Complex total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex(0.0)) continue;
      Complex inner = 0.0;
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) inner += b(k, l) * op.x(j * n + l, i * n + k);
      total += aij * inner;
    }
  return total;
}

/// Initial state plus the evolution operators U(t0,t1), U(t1,t2), ...,
/// U(t_{n-1},t_n), U(t_n,t0) of an n-time history theory on H.
struct ChainRecipe {
  ComplexMatrix rho;
  std::vector<ComplexMatrix> evolutions;
  std::size_t n_times = 0;

  std::size_t h_dim() const { return dim(rho); }
  std::size_t dim_v() const {
    std::size_t d = 1;
    for (std::size_t t = 0; t < n_times; ++t) d *= h_dim();
    return d;
  }
  bool unitary(double tol = kDefaultTol) const {
    return std::all_of(evolutions.begin(), evolutions.end(), [&](const auto& u) { return is_unitary(u, tol); });
  }

  /// Recipe with identity evolutions throughout.
  static ChainRecipe trivial(ComplexMatrix rho, std::size_t n_times) {
    const std::size_t h = dim(rho);
    return ChainRecipe{std::move(rho), std::vector<ComplexMatrix>(n_times + 1, identity(h)), n_times};
  }
};

/// Chain operator U0 P1 U1 P2 ... Pn Un of a homogeneous history.
inline ComplexMatrix chain_operator(const ChainRecipe& r, const HomogeneousHistory& h) {
  if (h.n_times() != r.n_times || h.h_dim() != r.h_dim())
    throw std::invalid_argument("chain_operator: history does not match the recipe's time slots");
  ComplexMatrix c = r.evolutions[0];
  for (std::size_t t = 0; t < r.n_times; ++t) c = c * h.at(t) * r.evolutions[t + 1];
  return c;
}

/// Same theory with an extra time slot at `position` across which the
/// evolution is trivial. Histories that put the unit projector there get
/// the same values as before.
inline ChainRecipe insert_trivial_time(const ChainRecipe& r, std::size_t position) {
  if (position > r.n_times) throw std::out_of_range("insert_trivial_time: bad position");
  ChainRecipe out = r;
  // U(t_p, s) = U(t_p, t_{p+1}) and U(s, t_{p+1}) = 1
  out.evolutions.insert(out.evolutions.begin() + static_cast<std::ptrdiff_t>(position) + 1,
                        identity(r.h_dim()));
  ++out.n_times;
  return out;
}

/// Thrown when an entropy or canonical-form computation meets a window
/// that is not consistent for the given decoherence function.
class InconsistentWindow : public std::runtime_error {
 public:
  explicit InconsistentWindow(double residual)
      : std::runtime_error("window is not consistent (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class DecoherenceFunction {
 public:
  struct Explicit {
    DecoherenceOperator op;
  };
  struct Chain {
    ChainRecipe recipe;
  };
  struct Mixture {
    std::shared_ptr<const DecoherenceFunction> first;
    std::shared_ptr<const DecoherenceFunction> second;
    double lambda = 1.0;
  };
  using Backend = std::variant<Explicit, Chain, Mixture>;

  DecoherenceFunction(Backend backend, std::optional<ChainRecipe> provenance = std::nullopt)
      : backend_(std::move(backend)), provenance_(std::move(provenance)) {}

  const Backend& backend() const { return backend_; }

  std::size_t dim_v() const {
    return std::visit(
        [](const auto& b) -> std::size_t {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, Explicit>) return b.op.dim_v;
          else if constexpr (std::is_same_v<T, Chain>) return b.recipe.dim_v();
          else return b.first->dim_v();
        },
        backend_);
  }

  /// The state and evolutions this function was built from, when known.
  const ChainRecipe* recipe() const {
    if (const auto* c = std::get_if<Chain>(&backend_)) return &c->recipe;
    return provenance_ ? &*provenance_ : nullptr;
  }

  const DecoherenceOperator* explicit_operator() const {
    const auto* e = std::get_if<Explicit>(&backend_);
    return e ? &e->op : nullptr;
  }

  bool is_chain() const { return std::holds_alternative<Chain>(backend_); }

  Complex operator()(const HistoryProposition& a, const HistoryProposition& b) const {
    if (a.dim_v() != dim_v() || b.dim_v() != dim_v())
      throw std::invalid_argument("decoherence function: proposition lives on a space of dimension " +
                                  std::to_string(a.dim_v()) + ", expected " + std::to_string(dim_v()));
    return std::visit(
        [&](const auto& be) -> Complex {
          using T = std::decay_t<decltype(be)>;
          if constexpr (std::is_same_v<T, Explicit>) {
            return operator_value(be.op, a.matrix(), b.matrix());
          } else if constexpr (std::is_same_v<T, Chain>) {
            if (!a.has_components() || !b.has_components())
              throw std::invalid_argument(
                  "chain-operator decoherence function needs propositions given as sums of homogeneous histories");
            Complex total = 0.0;
            const auto& rho = be.recipe.rho;
            for (const auto& ha : a.components()) {
              const ComplexMatrix left = chain_operator(be.recipe, ha).adjoint() * rho;
              for (const auto& hb : b.components())
                total += (left * chain_operator(be.recipe, hb)).trace();
            }
            return total;
          } else {
            return be.lambda * (*be.first)(a, b) + (1.0 - be.lambda) * (*be.second)(a, b);
          }
        },
        backend_);
  }

 private:
  Backend backend_;
  std::optional<ChainRecipe> provenance_;
};

inline Complex eval(const DecoherenceFunction& d, const HistoryProposition& a, const HistoryProposition& b) {
  return d(a, b);
}

/// Unit proposition in the form a function of this backend can evaluate.
inline HistoryProposition unit_proposition(const DecoherenceFunction& d) {
  if (d.is_chain()) return HistoryProposition::unit(d.recipe()->h_dim(), d.recipe()->n_times);
  if (const auto* mix = std::get_if<DecoherenceFunction::Mixture>(&d.backend())) {
    auto first = unit_proposition(*mix->first);
    if (first.has_components()) return first;
    return unit_proposition(*mix->second);
  }
  return HistoryProposition::unit(d.dim_v());
}

inline Window trivial_window(const DecoherenceFunction& d) { return Window({unit_proposition(d)}); }

// ---------------------------------------------------------------------------
// Constructors

inline DecoherenceFunction from_operator(DecoherenceOperator op) {
  return DecoherenceFunction(DecoherenceFunction::Explicit{std::move(op)});
}

/// Single-time theory d(P, Q) = tr(P rho Q), realised as X = M (1 (x) rho).
inline DecoherenceFunction from_single_time(const ComplexMatrix& rho, double tol = kDefaultTol) {
  require_square(rho, "from_single_time");
  require_density_matrix(rho, "from_single_time", tol);
  const std::size_t n = dim(rho);
  ComplexMatrix x = swap_operator(n) * kron(identity(n), rho);
  return DecoherenceFunction(DecoherenceFunction::Explicit{DecoherenceOperator(std::move(x), n)},
                             ChainRecipe::trivial(rho, 1));
}

/// Two-time theory with trivial evolution on V = H (x) H:
/// X = [R (x) 1] S4 [1 (x) (rho (x) 1)] [R (x) 1], R the time reversal on V.
inline DecoherenceFunction from_two_time(const ComplexMatrix& rho, double tol = kDefaultTol) {
  require_square(rho, "from_two_time");
  require_density_matrix(rho, "from_two_time", tol);
  const std::size_t n = dim(rho);
  const std::size_t v = n * n;
  const ComplexMatrix r_ext = kron(swap_operator(n), identity(v));
  const ComplexMatrix middle = kron(identity(v), kron(rho, identity(n)));
  ComplexMatrix x = r_ext * cyclic_shift_4(n) * middle * r_ext;
  return DecoherenceFunction(DecoherenceFunction::Explicit{DecoherenceOperator(std::move(x), v)},
                             ChainRecipe::trivial(rho, 2));
}

/// Chain-operator theory d(a, b) = tr(C_a^dagger rho C_b). Evolutions need
/// not be unitary and are not renormalised.
inline DecoherenceFunction from_chain(const ComplexMatrix& rho, std::vector<ComplexMatrix> evolutions,
                                      std::size_t n_times, double tol = kDefaultTol) {
  require_square(rho, "from_chain");
  require_density_matrix(rho, "from_chain", tol);
  if (n_times == 0) throw std::invalid_argument("from_chain: n_times must be positive");
  if (evolutions.size() != n_times + 1)
    throw std::invalid_argument("from_chain: expected " + std::to_string(n_times + 1) + " evolution operators, got " +
                                std::to_string(evolutions.size()));
  for (const auto& u : evolutions)
    if (!is_square(u) || dim(u) != dim(rho))
      throw std::invalid_argument("from_chain: evolution operator has the wrong shape");
  return DecoherenceFunction(DecoherenceFunction::Chain{ChainRecipe{rho, std::move(evolutions), n_times}});
}

inline DecoherenceFunction from_chain(const ChainRecipe& r, double tol = kDefaultTol) {
  return from_chain(r.rho, r.evolutions, r.n_times, tol);
}

/// lambda d1 + (1 - lambda) d2. Two operator backends combine their X's.
inline DecoherenceFunction convex_combine(const DecoherenceFunction& d1, const DecoherenceFunction& d2,
                                          double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::domain_error("convex_combine: lambda outside [0, 1]");
  if (d1.dim_v() != d2.dim_v()) throw std::invalid_argument("convex_combine: dimension mismatch");
  const auto* x1 = d1.explicit_operator();
  const auto* x2 = d2.explicit_operator();
  if (x1 && x2)
    return from_operator(DecoherenceOperator(lambda * x1->x + (1.0 - lambda) * x2->x, x1->dim_v));
  return DecoherenceFunction(DecoherenceFunction::Mixture{std::make_shared<const DecoherenceFunction>(d1),
                                                          std::make_shared<const DecoherenceFunction>(d2), lambda});
}

/// Largest history space for which a chain recipe is expanded into an
/// explicit operator (X then has dim_v^2 rows).
inline constexpr std::size_t kMaxMaterializeDimV = 32;

/// Explicit operator reproducing any backend on all projector pairs. Chain
/// recipes are expanded entry by entry through the sesquilinear extension
/// d(E_ij, E_kl) on matrix units.
inline DecoherenceOperator materialize_operator(const DecoherenceFunction& d) {
  return std::visit(
      [&](const auto& be) -> DecoherenceOperator {
        using T = std::decay_t<decltype(be)>;
        if constexpr (std::is_same_v<T, DecoherenceFunction::Explicit>) {
          return be.op;
        } else if constexpr (std::is_same_v<T, DecoherenceFunction::Mixture>) {
          const auto a = materialize_operator(*be.first);
          const auto b = materialize_operator(*be.second);
          return DecoherenceOperator(be.lambda * a.x + (1.0 - be.lambda) * b.x, a.dim_v);
        } else {
          const auto& r = be.recipe;
          const std::size_t v = r.dim_v();
          if (v > kMaxMaterializeDimV)
            throw std::length_error("materialize_operator: history space of dimension " + std::to_string(v) +
                                    " is too large");
          const std::size_t h = r.h_dim();
          // digits of a V index in base h, most significant time first
          auto unit_factor = [&](std::size_t row, std::size_t col, std::size_t t) {
            std::size_t shift = 1;
            for (std::size_t s = t + 1; s < r.n_times; ++s) shift *= h;
            ComplexMatrix e = zeros(h);
            e(static_cast<Eigen::Index>((row / shift) % h), static_cast<Eigen::Index>((col / shift) % h)) = 1.0;
            return e;
          };
          std::vector<ComplexMatrix> left(v * v), right(v * v);
          for (std::size_t i = 0; i < v; ++i)
            for (std::size_t j = 0; j < v; ++j) {
              // linear extension of C^dagger: U_n^dagger A_n ... U_1^dagger A_1 U_0^dagger
              ComplexMatrix l = r.evolutions[0].adjoint();
              ComplexMatrix c = r.evolutions[0];
              for (std::size_t t = 0; t < r.n_times; ++t) {
                const ComplexMatrix e = unit_factor(i, j, t);
                l = r.evolutions[t + 1].adjoint() * e * l;
                c = c * e * r.evolutions[t + 1];
              }
              left[i * v + j] = l * r.rho;
              right[i * v + j] = c.transpose();
            }
          const auto vi = static_cast<Eigen::Index>(v);
          ComplexMatrix x(vi * vi, vi * vi);
          for (std::size_t i = 0; i < v; ++i)
            for (std::size_t j = 0; j < v; ++j)
              for (std::size_t k = 0; k < v; ++k)
                for (std::size_t l = 0; l < v; ++l) {
                  // X_{(j,l),(i,k)} = tr(L(E_ij) rho C(E_kl))
                  const Complex value = left[i * v + j].cwiseProduct(right[k * v + l]).sum();
                  x(static_cast<Eigen::Index>(j * v + l), static_cast<Eigen::Index>(i * v + k)) = value;
                }
          return DecoherenceOperator(std::move(x), v);
        }
      },
      d.backend());
}

/// Decoherence function of two independent subsystems on V1 (x) V2:
/// d(a1 (x) a2, b1 (x) b2) = d1(a1, b1) d2(a2, b2).
inline DecoherenceFunction tensor_product(const DecoherenceFunction& d1, const DecoherenceFunction& d2) {
  const auto x1 = materialize_operator(d1);
  const auto x2 = materialize_operator(d2);
  const std::size_t dims[] = {x1.dim_v, x1.dim_v, x2.dim_v, x2.dim_v};
  const std::size_t perm[] = {0, 2, 1, 3};
  const ComplexMatrix p = permute_factors(dims, perm);
  return from_operator(DecoherenceOperator(p * kron(x1.x, x2.x) * p.adjoint(), x1.dim_v * x2.dim_v));
}

// ---------------------------------------------------------------------------
// Window data

/// Full matrix of values d(a_i, a_j) over the blocks of a window.
inline ComplexMatrix window_values(const DecoherenceFunction& d, const Window& w) {
  const auto k = static_cast<Eigen::Index>(w.size());
  ComplexMatrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = d(w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(j)]);
  return out;
}

/// max_{i != j} |d(a_i, a_j)|.
inline double off_diagonal_residual(const ComplexMatrix& values) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (i != j) worst = std::max(worst, std::abs(values(i, j)));
  return worst;
}

inline std::vector<double> diagonal_probabilities(const ComplexMatrix& values) {
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) p.push_back(values(i, i).real());
  return p;
}

/// Canonical representative sum_i d(a_i,a_i)/(dim a_i)^2 a_i (x) a_i of the
/// W-equivalence class of d. Requires W to be d-consistent.
inline DecoherenceOperator canonical_operator(const DecoherenceFunction& d, const Window& w,
                                              double tol = kDefaultTol) {
  if (w.dim_v() != d.dim_v()) throw std::invalid_argument("canonical_operator: dimension mismatch");
  const ComplexMatrix values = window_values(d, w);
  const double residual = off_diagonal_residual(values);
  if (residual > tol) throw InconsistentWindow(residual);
  const std::size_t v = w.dim_v();
  ComplexMatrix x = zeros(v * v);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = std::max(0.0, values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real());
    if (p == 0.0) continue;
    const double dm = static_cast<double>(w[i].dimension());
    x += (p / (dm * dm)) * kron(w[i].matrix(), w[i].matrix());
  }
  return DecoherenceOperator(std::move(x), v);
}

/// A W-equivalence class, held as its window and diagonal probabilities.
struct WEquivalenceClass {
  Window window;
  std::vector<double> diagonal;
};

inline WEquivalenceClass w_class(const DecoherenceFunction& d, const Window& w, double tol = kDefaultTol) {
  const ComplexMatrix values = window_values(d, w);
  const double residual = off_diagonal_residual(values);
  if (residual > tol) throw InconsistentWindow(residual);
  return WEquivalenceClass{w, diagonal_probabilities(values)};
}

/// Both functions are consistent on W and agree on its diagonal.
inline bool w_equivalent(const DecoherenceFunction& d1, const DecoherenceFunction& d2, const Window& w,
                         double tol = kDefaultTol) {
  const ComplexMatrix v1 = window_values(d1, w);
  const ComplexMatrix v2 = window_values(d2, w);
  if (off_diagonal_residual(v1) > tol || off_diagonal_residual(v2) > tol) return false;
  for (Eigen::Index i = 0; i < v1.rows(); ++i)
    if (std::abs(v1(i, i) - v2(i, i)) > tol) return false;
  return true;
}

/// Pure iff exactly one block carries nonzero probability.
inline bool is_w_pure(const WEquivalenceClass& cls, double tol = kDefaultTol) {
  const auto nonzero = std::count_if(cls.diagonal.begin(), cls.diagonal.end(),
                                     [&](double p) { return std::abs(p) > tol; });
  return nonzero == 1;
}

// ---------------------------------------------------------------------------
// Validation of the operator conditions

struct ValidationReport {
  double swap_residual = 0.0;     // max |MXM - X^dagger|
  Complex trace = 0.0;            // tr X
  double min_diagonal = 0.0;      // min Re tr((a (x) a) X) over checked projectors
  double max_diagonal_imag = 0.0; // max |Im tr((a (x) a) X)|
  std::size_t projectors_checked = 0;
  ComplexMatrix worst_projector;
  double tol = kDefaultTol;

  bool swap_ok() const { return swap_residual <= tol; }
  bool trace_ok() const { return std::abs(trace - 1.0) <= tol; }
  bool positivity_ok() const { return min_diagonal >= -tol; }
  bool passed() const { return swap_ok() && trace_ok() && positivity_ok(); }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!swap_ok()) out.emplace_back("swap symmetry MXM = X^dagger");
    if (!positivity_ok()) out.emplace_back("diagonal positivity tr((a (x) a) X) >= 0");
    if (!trace_ok()) out.emplace_back("normalisation tr X = 1");
    return out;
  }
};

/// Checks swap symmetry and normalisation exactly and diagonal positivity
/// on standard-basis projectors, any caller-supplied projectors, and
/// `sample_count` random projectors of every rank.
inline ValidationReport validate(const DecoherenceOperator& op, std::size_t sample_count = 200,
                                 double tol = kDefaultTol, std::uint64_t seed = 0,
                                 std::span<const ComplexMatrix> extra_projectors = {}) {
  ValidationReport rep;
  rep.tol = tol;
  const std::size_t v = op.dim_v;
  const ComplexMatrix m = swap_operator(v);
  rep.swap_residual = max_abs(m * op.x * m - op.x.adjoint());
  rep.trace = op.x.trace();
  rep.min_diagonal = std::numeric_limits<double>::infinity();

  auto check = [&](const ComplexMatrix& p) {
    const Complex val = operator_value(op, p, p);
    ++rep.projectors_checked;
    rep.max_diagonal_imag = std::max(rep.max_diagonal_imag, std::abs(val.imag()));
    if (val.real() < rep.min_diagonal) {
      rep.min_diagonal = val.real();
      rep.worst_projector = p;
    }
  };

  for (std::size_t i = 0; i < v; ++i) {
    ComplexMatrix e = zeros(v);
    e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    check(e);
  }
  for (const auto& p : extra_projectors) check(p);
  Rng rng = make_rng(seed);
  for (std::size_t rank = 1; rank <= v; ++rank) {
    const std::size_t count = rank == v ? 1 : sample_count;
    for (std::size_t s = 0; s < count; ++s) check(random_projector(v, rank, rng));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Impurity splitting

/// Y = i (s1 (x) s2 - s2 (x) s1); satisfies MYM = Y^dagger and has vanishing
/// diagonal tr((a (x) a) Y) for every a.
inline ComplexMatrix impurity_operator(const ComplexMatrix& s1, const ComplexMatrix& s2, double tol = kDefaultTol) {
  if (!is_hermitian(s1, tol) || !is_hermitian(s2, tol))
    throw std::invalid_argument("impurity_operator: s1 and s2 must be Hermitian");
  if (dim(s1) != dim(s2)) throw std::invalid_argument("impurity_operator: s1 and s2 differ in dimension");
  return Complex(0.0, 1.0) * (kron(s1, s2) - kron(s2, s1));
}

struct ImpuritySplit {
  DecoherenceOperator plus;
  DecoherenceOperator minus;
  ComplexMatrix y;
};

/// X = (X + Y)/2 + (X - Y)/2 with both halves again decoherence operators.
inline ImpuritySplit impurity_split(const DecoherenceOperator& op, const ComplexMatrix& s1, const ComplexMatrix& s2,
                                    double tol = kDefaultTol) {
  if (dim(s1) != op.dim_v) throw std::invalid_argument("impurity_split: s1, s2 must act on V");
  ComplexMatrix y = impurity_operator(s1, s2, tol);
  return ImpuritySplit{DecoherenceOperator(op.x + y, op.dim_v), DecoherenceOperator(op.x - y, op.dim_v),
                       std::move(y)};
}

}  // namespace cohist
