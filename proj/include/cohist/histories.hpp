// History propositions as projectors on the history space V, homogeneous
// n-time histories, windows (resolutions of the identity) and their
// coarse-grainings.
#pragma once

#include "cohist/matrix.hpp"

#include <cstdint>
#include <iterator>
#include <optional>
#include <utility>
#include <vector>

namespace cohist {

/// A time-ordered list of projectors on the single-time space H; as a
/// proposition it is their tensor product on V = H (x) ... (x) H.
class HomogeneousHistory {
 public:
  HomogeneousHistory(std::vector<ComplexMatrix> per_time, double tol = kDefaultTol)
      : per_time_(std::move(per_time)) {
    if (per_time_.empty()) throw std::invalid_argument("HomogeneousHistory: no time slots");
    h_dim_ = dim(per_time_.front());
    for (const auto& p : per_time_) {
      if (!is_square(p) || dim(p) != h_dim_)
        throw std::invalid_argument("HomogeneousHistory: per-time operators must share one dimension");
      if (!is_projector(p, tol))
        throw std::invalid_argument("HomogeneousHistory: per-time entry is not a projector");
    }
  }

  /// The unit history (1, ..., 1).
  static HomogeneousHistory unit(std::size_t h_dim, std::size_t n_times) {
    return HomogeneousHistory(std::vector<ComplexMatrix>(n_times, identity(h_dim)));
  }

  const std::vector<ComplexMatrix>& per_time() const { return per_time_; }
  const ComplexMatrix& at(std::size_t t) const { return per_time_.at(t); }
  std::size_t n_times() const { return per_time_.size(); }
  std::size_t h_dim() const { return h_dim_; }

  std::size_t dim_v() const {
    std::size_t d = 1;
    for (std::size_t t = 0; t < n_times(); ++t) d *= h_dim_;
    return d;
  }

  std::size_t dimension() const {
    std::size_t d = 1;
    for (const auto& p : per_time_) d *= static_cast<std::size_t>(std::llround(p.trace().real()));
    return d;
  }

  ComplexMatrix matrix() const { return kron_all(std::span<const ComplexMatrix>(per_time_)); }

 private:
  std::vector<ComplexMatrix> per_time_;
  std::size_t h_dim_ = 0;
};

/// A projector on V, optionally remembering an explicit decomposition into
/// a disjoint sum of homogeneous histories (needed by chain-operator
/// decoherence functions).
class HistoryProposition {
 public:
  explicit HistoryProposition(ComplexMatrix m, double tol = kDefaultTol) : matrix_(std::move(m)) {
    if (!is_projector(matrix_, tol))
      throw std::invalid_argument("HistoryProposition: matrix is not a projector");
    dimension_ = proj_dim(matrix_, tol);
  }

  HistoryProposition(ComplexMatrix m, std::vector<HomogeneousHistory> components, double tol = kDefaultTol)
      : HistoryProposition(std::move(m), tol) {
    components_ = std::move(components);
  }

  static HistoryProposition unit(std::size_t dim_v) {
    return HistoryProposition(identity(dim_v));
  }

  /// The unit proposition carrying its homogeneous form (1, ..., 1).
  static HistoryProposition unit(std::size_t h_dim, std::size_t n_times) {
    auto h = HomogeneousHistory::unit(h_dim, n_times);
    return HistoryProposition(h.matrix(), {h});
  }

  const ComplexMatrix& matrix() const { return matrix_; }
  std::size_t dim_v() const { return dim(matrix_); }
  std::size_t dimension() const { return dimension_; }
  double relative_dimension() const {
    return static_cast<double>(dimension_) / static_cast<double>(dim_v());
  }
  bool is_zero() const { return dimension_ == 0; }

  bool has_components() const { return components_.has_value(); }
  const std::vector<HomogeneousHistory>& components() const {
    if (!components_) throw std::logic_error("HistoryProposition: no homogeneous decomposition");
    return *components_;
  }
  const std::optional<std::vector<HomogeneousHistory>>& maybe_components() const { return components_; }

 private:
  ComplexMatrix matrix_;
  std::size_t dimension_ = 0;
  std::optional<std::vector<HomogeneousHistory>> components_;
};

inline HistoryProposition homogeneous_to_proposition(const HomogeneousHistory& h) {
  return HistoryProposition(h.matrix(), {h});
}

/// Unit projector inserted at time slot `position` (0 <= position <= n).
inline HomogeneousHistory insert_trivial_time(const HomogeneousHistory& h, std::size_t position) {
  if (position > h.n_times())
    throw std::out_of_range("insert_trivial_time: position " + std::to_string(position) +
                            " outside [0, " + std::to_string(h.n_times()) + "]");
  auto slots = h.per_time();
  slots.insert(slots.begin() + static_cast<std::ptrdiff_t>(position), identity(h.h_dim()));
  return HomogeneousHistory(std::move(slots));
}

/// Orthocomplement 1 - p. The homogeneous decomposition is not carried over.
inline HistoryProposition negation(const HistoryProposition& p) {
  return HistoryProposition(identity(p.dim_v()) - p.matrix());
}

inline bool disjoint(const HistoryProposition& p, const HistoryProposition& q, double tol = kDefaultTol) {
  return p.dim_v() == q.dim_v() && max_abs(p.matrix() * q.matrix()) <= tol;
}

/// Disjoint sum p (+) q; defined only when pq = 0.
inline HistoryProposition oplus(const HistoryProposition& p, const HistoryProposition& q,
                                double tol = kDefaultTol) {
  if (p.dim_v() != q.dim_v()) throw std::invalid_argument("oplus: propositions live on different spaces");
  if (!disjoint(p, q, tol)) throw std::invalid_argument("oplus: propositions are not disjoint");
  ComplexMatrix sum = p.matrix() + q.matrix();
  if (p.has_components() && q.has_components()) {
    auto comps = p.components();
    comps.insert(comps.end(), q.components().begin(), q.components().end());
    return HistoryProposition(std::move(sum), std::move(comps), tol);
  }
  return HistoryProposition(std::move(sum), tol);
}

/// True iff p <= q in the projector order, i.e. qp = p.
inline bool coarser_eq(const HistoryProposition& p, const HistoryProposition& q, double tol = kDefaultTol) {
  if (p.dim_v() != q.dim_v()) throw std::invalid_argument("coarser_eq: dimension mismatch");
  return max_abs(q.matrix() * p.matrix() - p.matrix()) <= tol;
}

/// Product proposition on V1 (x) V2. Homogeneous decompositions are
/// concatenated time-wise when both factors carry one on the same H.
inline HistoryProposition tensor_product(const HistoryProposition& a, const HistoryProposition& b) {
  ComplexMatrix m = kron(a.matrix(), b.matrix());
  if (a.has_components() && b.has_components() && !a.components().empty() && !b.components().empty() &&
      a.components().front().h_dim() == b.components().front().h_dim()) {
    std::vector<HomogeneousHistory> comps;
    for (const auto& ha : a.components())
      for (const auto& hb : b.components()) {
        auto slots = ha.per_time();
        slots.insert(slots.end(), hb.per_time().begin(), hb.per_time().end());
        comps.emplace_back(std::move(slots));
      }
    return HistoryProposition(std::move(m), std::move(comps));
  }
  return HistoryProposition(std::move(m));
}

// ---------------------------------------------------------------------------
// Windows

/// Exclusive and exhaustive set of nonzero propositions.
class Window {
 public:
  Window(std::vector<HistoryProposition> blocks, double tol = kDefaultTol) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("Window: no blocks");
    dim_v_ = blocks_.front().dim_v();
    ComplexMatrix total = zeros(dim_v_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      if (b.dim_v() != dim_v_) throw std::invalid_argument("Window: blocks live on different spaces");
      if (b.is_zero()) throw std::invalid_argument("Window: zero block at index " + std::to_string(i));
      for (std::size_t j = 0; j < i; ++j)
        if (!disjoint(b, blocks_[j], tol))
          throw std::invalid_argument("Window: blocks " + std::to_string(j) + " and " + std::to_string(i) +
                                      " are not orthogonal");
      total += b.matrix();
    }
    if (max_abs(total - identity(dim_v_)) > tol)
      throw std::invalid_argument("Window: blocks do not sum to the identity");
  }

  const std::vector<HistoryProposition>& blocks() const { return blocks_; }
  const HistoryProposition& operator[](std::size_t i) const { return blocks_.at(i); }
  std::size_t size() const { return blocks_.size(); }
  std::size_t dim_v() const { return dim_v_; }

  std::vector<std::size_t> block_dims() const {
    std::vector<std::size_t> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b.dimension());
    return out;
  }

  /// Blocks produced by merging cells of an already valid window skip the
  /// orthogonality and completeness checks.
  struct Trusted {};
  Window(Trusted, std::vector<HistoryProposition> blocks)
      : blocks_(std::move(blocks)), dim_v_(blocks_.front().dim_v()) {}

 private:
  std::vector<HistoryProposition> blocks_;
  std::size_t dim_v_ = 0;
};

inline Window make_window(std::vector<HistoryProposition> blocks, double tol = kDefaultTol) {
  return Window(std::move(blocks), tol);
}

inline Window make_window(const std::vector<ComplexMatrix>& blocks, double tol = kDefaultTol) {
  std::vector<HistoryProposition> props;
  props.reserve(blocks.size());
  for (const auto& m : blocks) props.emplace_back(m, tol);
  return Window(std::move(props), tol);
}

inline Window trivial_window(std::size_t dim_v) { return Window({HistoryProposition::unit(dim_v)}); }

inline Window trivial_window(std::size_t h_dim, std::size_t n_times) {
  return Window({HistoryProposition::unit(h_dim, n_times)});
}

/// Window of rank-one projectors onto the columns of a unitary.
inline Window window_from_basis(const ComplexMatrix& u, double tol = kDefaultTol) {
  std::vector<HistoryProposition> blocks;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const ComplexVector c = u.col(j);
    blocks.emplace_back(hermitian_part(c * c.adjoint()), tol);
  }
  return Window(std::move(blocks), tol);
}

/// Window of all time-ordered products of per-time resolutions.
inline Window product_window(const std::vector<std::vector<ComplexMatrix>>& per_time_resolutions,
                             double tol = kDefaultTol) {
  if (per_time_resolutions.empty()) throw std::invalid_argument("product_window: no time slots");
  std::vector<std::vector<ComplexMatrix>> tuples{{}};
  for (const auto& resolution : per_time_resolutions) {
    std::vector<std::vector<ComplexMatrix>> next;
    for (const auto& prefix : tuples)
      for (const auto& p : resolution) {
        auto t = prefix;
        t.push_back(p);
        next.push_back(std::move(t));
      }
    tuples = std::move(next);
  }
  std::vector<HistoryProposition> blocks;
  for (auto& t : tuples) {
    HomogeneousHistory h(std::move(t), tol);
    if (h.dimension() == 0) continue;
    blocks.push_back(homogeneous_to_proposition(h));
  }
  return Window(std::move(blocks), tol);
}

/// Product window on V1 (x) V2.
inline Window tensor_product(const Window& a, const Window& b, double tol = kDefaultTol) {
  std::vector<HistoryProposition> blocks;
  for (const auto& x : a.blocks())
    for (const auto& y : b.blocks()) blocks.push_back(tensor_product(x, y));
  return Window(std::move(blocks), tol);
}

/// Merges the blocks of `w` cell by cell; `labels[i]` names the cell of
/// block i and labels must be 0..k-1.
inline Window merge_blocks(const Window& w, std::span<const std::size_t> labels) {
  if (labels.size() != w.size()) throw std::invalid_argument("merge_blocks: label count mismatch");
  const std::size_t cells = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<ComplexMatrix> sums(cells, zeros(w.dim_v()));
  std::vector<std::optional<std::vector<HomogeneousHistory>>> comps(cells, std::vector<HomogeneousHistory>{});
  std::vector<bool> used(cells, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = labels[i];
    used[c] = true;
    sums[c] += w[i].matrix();
    if (comps[c] && w[i].has_components())
      comps[c]->insert(comps[c]->end(), w[i].components().begin(), w[i].components().end());
    else
      comps[c].reset();
  }
  std::vector<HistoryProposition> blocks;
  for (std::size_t c = 0; c < cells; ++c) {
    if (!used[c]) throw std::invalid_argument("merge_blocks: labels are not contiguous");
    // merged sums of valid blocks are projectors up to roundoff
    const double loose = 1e-7;
    if (comps[c])
      blocks.emplace_back(std::move(sums[c]), std::move(*comps[c]), loose);
    else
      blocks.emplace_back(std::move(sums[c]), loose);
  }
  return Window(Window::Trusted{}, std::move(blocks));
}

/// True iff every block of `fine` lies under a block of `coarse` and each
/// coarse block is exactly the sum of the fine blocks beneath it.
inline bool is_refinement(const Window& fine, const Window& coarse, double tol = kDefaultTol) {
  if (fine.dim_v() != coarse.dim_v()) throw std::invalid_argument("is_refinement: dimension mismatch");
  std::vector<ComplexMatrix> sums(coarse.size(), zeros(coarse.dim_v()));
  for (const auto& f : fine.blocks()) {
    bool placed = false;
    for (std::size_t c = 0; c < coarse.size(); ++c)
      if (coarser_eq(f, coarse[c], tol)) {
        sums[c] += f.matrix();
        placed = true;
        break;
      }
    if (!placed) return false;
  }
  for (std::size_t c = 0; c < coarse.size(); ++c)
    if (max_abs(sums[c] - coarse[c].matrix()) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Set partitions and coarse-graining enumeration

inline constexpr std::size_t kMaxCoarseGrainBlocks = 12;

/// Bell number B(n) via the Bell triangle.
inline std::uint64_t bell_number(std::size_t n) {
  std::vector<std::uint64_t> row{1};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

/// Restricted growth strings of length n in lexicographic order: the first
/// is all zeros (one cell), the last is 0,1,...,n-1 (singletons).
class SetPartitions {
 public:
  explicit SetPartitions(std::size_t n) : labels_(n, 0), prefix_max_(n, 0), done_(n == 0) {}

  const std::vector<std::size_t>& labels() const { return labels_; }
  bool done() const { return done_; }

  void advance() {
    const std::size_t n = labels_.size();
    for (std::size_t i = n; i-- > 1;) {
      if (labels_[i] <= prefix_max_[i - 1]) {
        ++labels_[i];
        prefix_max_[i] = std::max(prefix_max_[i - 1], labels_[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
          labels_[j] = 0;
          prefix_max_[j] = prefix_max_[i];
        }
        return;
      }
    }
    done_ = true;
  }

 private:
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> prefix_max_;
  bool done_;
};

/// Lazily enumerates every coarse-graining of a window, one per set
/// partition of its blocks, starting with the trivial window and ending
/// with the window itself.
class CoarseGrainings {
 public:
  explicit CoarseGrainings(Window w) : window_(std::move(w)), partitions_(window_.size()) {
    if (window_.size() > kMaxCoarseGrainBlocks)
      throw std::length_error("coarse_grainings: " + std::to_string(window_.size()) +
                              " blocks exceed the cap of " + std::to_string(kMaxCoarseGrainBlocks));
  }

  std::optional<Window> next() {
    if (partitions_.done()) return std::nullopt;
    Window out = merge_blocks(window_, partitions_.labels());
    partitions_.advance();
    return out;
  }

  std::uint64_t count() const { return bell_number(window_.size()); }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Window;
    using difference_type = std::ptrdiff_t;
    using pointer = const Window*;
    using reference = const Window&;

    iterator() = default;
    explicit iterator(CoarseGrainings* owner) : owner_(owner) { ++*this; }
    reference operator*() const { return *current_; }
    pointer operator->() const { return &*current_; }
    iterator& operator++() {
      current_ = owner_->next();
      if (!current_) owner_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(const iterator& o) const { return owner_ == o.owner_; }

   private:
    CoarseGrainings* owner_ = nullptr;
    std::optional<Window> current_;
  };

  iterator begin() { return iterator(this); }
  iterator end() { return iterator(); }

 private:
  Window window_;
  SetPartitions partitions_;
};

inline CoarseGrainings coarse_grainings(const Window& w) { return CoarseGrainings(w); }

}  // namespace cohist
