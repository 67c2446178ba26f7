// Entropy functionals of a decoherence function on a consistent window.
// All values are in nats.
#pragma once

#include "cohist/decoherence.hpp"

#include <cmath>
#include <limits>

namespace cohist {

struct ConsistencyCheck {
  bool consistent = false;
  double residual = 0.0;  // max_{i != j} |d(a_i, a_j)|
  explicit operator bool() const { return consistent; }
};

inline ConsistencyCheck is_consistent(const DecoherenceFunction& d, const Window& w, double tol = kDefaultTol) {
  if (w.dim_v() != d.dim_v()) throw std::invalid_argument("is_consistent: dimension mismatch");
  const double r = off_diagonal_residual(window_values(d, w));
  return {r <= tol, r};
}

namespace detail {

/// Probabilities within -tol of zero are clamped; anything more negative
/// means d is not a decoherence function on this window.
inline double clamp_probability(double p, double tol) {
  if (p < -tol) throw std::domain_error("negative probability " + std::to_string(p) + " on a consistent window");
  return p < 0.0 ? 0.0 : p;
}

}  // namespace detail

/// -sum p_i log(p_i / (dim a_i)^2).
inline double i_hat_from(std::span<const double> probabilities, std::span<const std::size_t> dims,
                         double tol = kDefaultTol) {
  double s = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = detail::clamp_probability(probabilities[i], tol);
    if (p == 0.0) continue;
    s -= p * (std::log(p) - 2.0 * std::log(static_cast<double>(dims[i])));
  }
  return s;
}

/// -sum p_i log(p_i / (dim a_i / dim V)^x).
inline double i_x_from(std::span<const double> probabilities, std::span<const std::size_t> dims, std::size_t dim_v,
                       double x, double tol = kDefaultTol) {
  if (!(x >= 0.0)) throw std::domain_error("i_x: exponent must be non-negative");
  const double log_v = std::log(static_cast<double>(dim_v));
  double s = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = detail::clamp_probability(probabilities[i], tol);
    if (p == 0.0) continue;
    s -= p * (std::log(p) - x * (std::log(static_cast<double>(dims[i])) - log_v));
  }
  return s;
}

struct EntropyReport {
  std::vector<std::size_t> window_block_dims;
  std::vector<double> probabilities;
  double i_hat = 0.0;
  double i_norm = 0.0;  // i_hat - 2 log dim V
  double consistency_residual = 0.0;
  std::size_t dim_v = 0;
  std::vector<std::pair<double, double>> i_x;  // (exponent, value)
};

/// Everything about d on a window; throws InconsistentWindow when the
/// residual exceeds tol.
inline EntropyReport entropy_report(const DecoherenceFunction& d, const Window& w, double tol = kDefaultTol,
                                    std::span<const double> exponents = {}) {
  if (w.dim_v() != d.dim_v()) throw std::invalid_argument("entropy_report: dimension mismatch");
  const ComplexMatrix values = window_values(d, w);
  EntropyReport rep;
  rep.dim_v = w.dim_v();
  rep.window_block_dims = w.block_dims();
  rep.consistency_residual = off_diagonal_residual(values);
  if (rep.consistency_residual > tol) throw InconsistentWindow(rep.consistency_residual);
  rep.probabilities = diagonal_probabilities(values);
  rep.i_hat = i_hat_from(rep.probabilities, rep.window_block_dims, tol);
  rep.i_norm = rep.i_hat - 2.0 * std::log(static_cast<double>(rep.dim_v));
  for (double x : exponents)
    rep.i_x.emplace_back(x, i_x_from(rep.probabilities, rep.window_block_dims, rep.dim_v, x, tol));
  return rep;
}

namespace detail {

inline std::vector<double> consistent_probabilities(const DecoherenceFunction& d, const Window& w, double tol) {
  if (w.dim_v() != d.dim_v()) throw std::invalid_argument("entropy: dimension mismatch");
  const ComplexMatrix values = window_values(d, w);
  const double r = off_diagonal_residual(values);
  if (r > tol) throw InconsistentWindow(r);
  return diagonal_probabilities(values);
}

}  // namespace detail

inline double i_hat(const DecoherenceFunction& d, const Window& w, double tol = kDefaultTol) {
  const auto p = detail::consistent_probabilities(d, w, tol);
  return i_hat_from(p, w.block_dims(), tol);
}

/// I^x family; x = 0 is the plain Shannon entropy of the window's
/// distribution, x = 1 minus the Kullback information relative to the
/// relative-dimension distribution, x = 2 the renormalised entropy.
/// Monotone under refinement for x >= 1.
inline double i_x(const DecoherenceFunction& d, const Window& w, double x, double tol = kDefaultTol) {
  const auto p = detail::consistent_probabilities(d, w, tol);
  return i_x_from(p, w.block_dims(), w.dim_v(), x, tol);
}

/// Renormalised entropy, zero on the trivial window and at least
/// -2 log dim V.
inline double i_norm(const DecoherenceFunction& d, const Window& w, double tol = kDefaultTol) {
  return i_x(d, w, 2.0, tol);
}

inline double trial_entropy(const DecoherenceFunction& d, const Window& w, double tol = kDefaultTol) {
  return i_x(d, w, 0.0, tol);
}

/// a log(a/b^2) - (1+a) log((1+a)/(1+b)^2), non-negative for a >= 0, b >= 1.
/// Equals the entropy drop when a block splits into parts whose
/// probabilities have ratio a and dimensions ratio b, per unit probability
/// of the first part.
inline double monotonicity_gap(double a, double b) {
  if (!(a >= 0.0) || !(b >= 1.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("monotonicity_gap: need a >= 0 and b >= 1");
  const double first = a > 0.0 ? a * (std::log(a) - 2.0 * std::log(b)) : 0.0;
  return first - (1.0 + a) * (std::log1p(a) - 2.0 * std::log1p(b));
}

struct LocalizedEntropy {
  double value = 0.0;
  Window window;
  std::uint64_t candidates = 0;  // coarse-grainings enumerated
  std::uint64_t consistent = 0;  // of which d-consistent
};

/// Minimum of i_norm over the d-consistent coarse-grainings of w0, with the
/// first minimiser in enumeration order. Values on merged blocks come from
/// additivity of d over the blocks of w0.
inline LocalizedEntropy localized_i(const DecoherenceFunction& d, const Window& w0, double tol = kDefaultTol) {
  if (w0.size() > kMaxCoarseGrainBlocks)
    throw std::length_error("localized_i: window has more than " + std::to_string(kMaxCoarseGrainBlocks) + " blocks");
  if (w0.dim_v() != d.dim_v()) throw std::invalid_argument("localized_i: dimension mismatch");
  const ComplexMatrix base = window_values(d, w0);
  const auto dims = w0.block_dims();
  const std::size_t k = w0.size();

  LocalizedEntropy best{std::numeric_limits<double>::infinity(), w0, 0, 0};
  std::vector<std::size_t> best_labels;
  std::vector<double> probs;
  std::vector<std::size_t> cell_dims;
  ComplexMatrix merged;
  for (SetPartitions parts(k); !parts.done(); parts.advance()) {
    const auto& labels = parts.labels();
    const std::size_t cells = *std::max_element(labels.begin(), labels.end()) + 1;
    merged = ComplexMatrix::Zero(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(cells));
    cell_dims.assign(cells, 0);
    for (std::size_t i = 0; i < k; ++i) {
      cell_dims[labels[i]] += dims[i];
      for (std::size_t j = 0; j < k; ++j)
        merged(static_cast<Eigen::Index>(labels[i]), static_cast<Eigen::Index>(labels[j])) +=
            base(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    ++best.candidates;
    if (off_diagonal_residual(merged) > tol) continue;
    ++best.consistent;
    probs = diagonal_probabilities(merged);
    const double value = i_x_from(probs, cell_dims, w0.dim_v(), 2.0, tol);
    if (value < best.value) {
      best.value = value;
      best_labels = labels;
    }
  }
  best.window = merge_blocks(w0, best_labels);
  return best;
}

}  // namespace cohist
