// JSON problem files and reports. Complex numbers are [re, im] pairs (a
// bare number is read as real), matrices are row-major nested arrays.
#pragma once

#include "cohist/search.hpp"

#include "json.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace cohist {

using json = nlohmann::json;

inline constexpr const char* kVersion = "cohist 0.1.0";

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalars and matrices

inline json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ParseError("expected a number or [re, im], got " + j.dump());
}

inline json to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ParseError(what + ": rows must be non-empty arrays");
  ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ParseError(what + ": ragged row " + std::to_string(i));
    for (std::size_t k = 0; k < cols; ++k) {
      try {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = complex_from_json(j[i][k]);
      } catch (const ParseError& e) {
        throw ParseError(what + "[" + std::to_string(i) + "][" + std::to_string(k) + "]: " + e.what());
      }
    }
  }
  if (!all_finite(m)) throw ParseError(what + ": non-finite entry");
  return m;
}

/// A bare matrix or {"matrix": [...]}.
inline ComplexMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (j.is_object()) {
    if (!j.contains("matrix")) throw ParseError(path + ": object without a \"matrix\" field");
    return matrix_from_json(j["matrix"], path);
  }
  return matrix_from_json(j, path);
}

// ---------------------------------------------------------------------------
// Problem files

enum class ProblemKind { explicit_x, single_time, n_time, two_time };

inline std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::explicit_x: return "explicit_x";
    case ProblemKind::single_time: return "single_time";
    case ProblemKind::n_time: return "n_time";
    case ProblemKind::two_time: return "two_time";
  }
  return "unknown";
}

inline ProblemKind problem_kind_from(const std::string& s) {
  if (s == "explicit_x") return ProblemKind::explicit_x;
  if (s == "single_time") return ProblemKind::single_time;
  if (s == "n_time") return ProblemKind::n_time;
  if (s == "two_time") return ProblemKind::two_time;
  throw ParseError("unknown kind '" + s + "'");
}

/// A window block as written in the file: either a matrix on V or a list
/// of homogeneous histories (one projector per time) whose sum it is.
struct BlockSpec {
  ComplexMatrix matrix;
  std::vector<std::vector<ComplexMatrix>> homogeneous;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::explicit_x;
  std::size_t dim_h = 0;
  std::size_t n_times = 1;
  std::optional<ComplexMatrix> rho;
  std::vector<ComplexMatrix> evolutions;
  std::optional<ComplexMatrix> x;
  std::map<std::string, std::vector<BlockSpec>> windows;
  double tolerance = kDefaultTol;
  std::uint64_t seed = 0;

  std::size_t dim_v() const {
    std::size_t v = 1;
    for (std::size_t t = 0; t < n_times; ++t) v *= dim_h;
    return v;
  }
};

namespace detail {

inline std::size_t positive_size(const json& j, const char* field) {
  if (!j.is_number_integer() || j.get<long long>() <= 0)
    throw ParseError(std::string(field) + ": expected a positive integer");
  return j.get<std::size_t>();
}

inline void require_shape(const ComplexMatrix& m, std::size_t n, const std::string& what) {
  if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n)
    throw ParseError(what + ": expected " + std::to_string(n) + "x" + std::to_string(n) + ", got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline BlockSpec block_from_json(const json& j, const std::string& what) {
  BlockSpec b;
  if (j.is_object()) {
    if (!j.contains("homogeneous") || !j["homogeneous"].is_array())
      throw ParseError(what + ": block object needs a \"homogeneous\" list");
    for (std::size_t h = 0; h < j["homogeneous"].size(); ++h) {
      const json& hist = j["homogeneous"][h];
      if (!hist.is_array() || hist.empty()) throw ParseError(what + ": homogeneous history must list projectors");
      std::vector<ComplexMatrix> per_time;
      for (std::size_t t = 0; t < hist.size(); ++t)
        per_time.push_back(matrix_from_json(hist[t], what + ".homogeneous[" + std::to_string(h) + "][" +
                                                         std::to_string(t) + "]"));
      b.homogeneous.push_back(std::move(per_time));
    }
    if (b.homogeneous.empty()) throw ParseError(what + ": empty homogeneous list");
  } else {
    b.matrix = matrix_from_json(j, what);
  }
  return b;
}

inline json block_to_json(const BlockSpec& b) {
  if (b.homogeneous.empty()) return to_json(b.matrix);
  json hs = json::array();
  for (const auto& h : b.homogeneous) {
    json per_time = json::array();
    for (const auto& p : h) per_time.push_back(to_json(p));
    hs.push_back(std::move(per_time));
  }
  return json{{"homogeneous", std::move(hs)}};
}

}  // namespace detail

inline ProblemSpec problem_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("problem: expected a JSON object");
  ProblemSpec p;
  if (!j.contains("kind") || !j["kind"].is_string()) throw ParseError("problem: missing \"kind\"");
  p.kind = problem_kind_from(j["kind"].get<std::string>());

  if (j.contains("tolerance")) {
    if (!j["tolerance"].is_number() || !(j["tolerance"].get<double>() > 0.0))
      throw ParseError("tolerance: expected a positive number");
    p.tolerance = j["tolerance"].get<double>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ParseError("seed: expected a non-negative integer");
    p.seed = j["seed"].get<std::uint64_t>();
  }

  if (p.kind == ProblemKind::explicit_x) {
    if (!j.contains("x")) throw ParseError("explicit_x problem needs \"x\"");
    p.x = matrix_from_json(j["x"], "x");
    if (p.x->rows() != p.x->cols()) throw ParseError("x: not square");
    const auto vv = static_cast<std::size_t>(p.x->rows());
    const auto v = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(vv))));
    if (v * v != vv) throw ParseError("x: dimension " + std::to_string(vv) + " is not a square");
    p.n_times = j.contains("n_times") ? detail::positive_size(j["n_times"], "n_times") : 1;
    if (j.contains("dim_h")) {
      p.dim_h = detail::positive_size(j["dim_h"], "dim_h");
      if (p.dim_v() != v) throw ParseError("x: dim_h^n_times does not match the operator dimension");
    } else {
      if (p.n_times != 1) throw ParseError("explicit_x with n_times > 1 needs dim_h");
      p.dim_h = v;
    }
  } else {
    if (!j.contains("rho")) throw ParseError(std::string(to_string(p.kind)) + " problem needs \"rho\"");
    p.rho = matrix_from_json(j["rho"], "rho");
    if (p.rho->rows() != p.rho->cols()) throw ParseError("rho: not square");
    p.dim_h = j.contains("dim_h") ? detail::positive_size(j["dim_h"], "dim_h") : static_cast<std::size_t>(p.rho->rows());
    detail::require_shape(*p.rho, p.dim_h, "rho");
    if (p.kind == ProblemKind::single_time) p.n_times = 1;
    if (p.kind == ProblemKind::two_time) p.n_times = 2;
    if (j.contains("n_times")) {
      const std::size_t n = detail::positive_size(j["n_times"], "n_times");
      if (p.kind != ProblemKind::n_time && n != p.n_times)
        throw ParseError("n_times: " + std::string(to_string(p.kind)) + " fixes it to " + std::to_string(p.n_times));
      p.n_times = n;
    } else if (p.kind == ProblemKind::n_time) {
      throw ParseError("n_time problem needs \"n_times\"");
    }
    if (j.contains("evolutions")) {
      if (p.kind != ProblemKind::n_time) throw ParseError("evolutions are only read for n_time problems");
      if (!j["evolutions"].is_array()) throw ParseError("evolutions: expected a list of matrices");
      for (std::size_t k = 0; k < j["evolutions"].size(); ++k) {
        p.evolutions.push_back(matrix_from_json(j["evolutions"][k], "evolutions[" + std::to_string(k) + "]"));
        detail::require_shape(p.evolutions.back(), p.dim_h, "evolutions[" + std::to_string(k) + "]");
      }
      if (p.evolutions.size() != p.n_times + 1)
        throw ParseError("evolutions: need n_times + 1 = " + std::to_string(p.n_times + 1) + " matrices");
    }
  }

  if (j.contains("windows")) {
    if (!j["windows"].is_object()) throw ParseError("windows: expected an object of named block lists");
    for (const auto& [name, blocks] : j["windows"].items()) {
      if (!blocks.is_array() || blocks.empty()) throw ParseError("windows." + name + ": expected a list of blocks");
      std::vector<BlockSpec> bs;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string what = "windows." + name + "[" + std::to_string(i) + "]";
        bs.push_back(detail::block_from_json(blocks[i], what));
        const BlockSpec& b = bs.back();
        if (b.homogeneous.empty()) {
          detail::require_shape(b.matrix, p.dim_v(), what);
        } else {
          for (const auto& h : b.homogeneous) {
            if (h.size() != p.n_times) throw ParseError(what + ": history length differs from n_times");
            for (const auto& m : h) detail::require_shape(m, p.dim_h, what);
          }
        }
      }
      p.windows.emplace(name, std::move(bs));
    }
  }
  return p;
}

inline json problem_to_json(const ProblemSpec& p) {
  json j;
  j["kind"] = std::string(to_string(p.kind));
  j["dim_h"] = p.dim_h;
  j["n_times"] = p.n_times;
  if (p.rho) j["rho"] = to_json(*p.rho);
  if (!p.evolutions.empty()) {
    j["evolutions"] = json::array();
    for (const auto& u : p.evolutions) j["evolutions"].push_back(to_json(u));
  }
  if (p.x) j["x"] = to_json(*p.x);
  if (!p.windows.empty()) {
    j["windows"] = json::object();
    for (const auto& [name, blocks] : p.windows) {
      json bs = json::array();
      for (const auto& b : blocks) bs.push_back(detail::block_to_json(b));
      j["windows"][name] = std::move(bs);
    }
  }
  j["tolerance"] = p.tolerance;
  j["seed"] = p.seed;
  return j;
}

inline ProblemSpec read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return problem_from_json(j);
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

/// 64-bit FNV-1a of the canonical serialisation.
inline std::string problem_digest(const ProblemSpec& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : problem_to_json(p).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Building library objects from a problem

/// Throws std::invalid_argument / std::domain_error when rho or the
/// evolutions are not acceptable.
inline DecoherenceFunction build_decoherence(const ProblemSpec& p) {
  switch (p.kind) {
    case ProblemKind::explicit_x: return from_operator(DecoherenceOperator(*p.x, p.dim_v()));
    case ProblemKind::single_time: return from_single_time(*p.rho, p.tolerance);
    case ProblemKind::two_time: return from_two_time(*p.rho, p.tolerance);
    case ProblemKind::n_time: {
      std::vector<ComplexMatrix> evolutions = p.evolutions;
      if (evolutions.empty()) evolutions.assign(p.n_times + 1, identity(p.dim_h));
      return from_chain(*p.rho, std::move(evolutions), p.n_times, p.tolerance);
    }
  }
  throw std::logic_error("unhandled problem kind");
}

inline Window build_window(const std::vector<BlockSpec>& blocks, double tol) {
  std::vector<HistoryProposition> props;
  for (const auto& b : blocks) {
    if (b.homogeneous.empty()) {
      props.emplace_back(b.matrix, tol);
      continue;
    }
    std::optional<HistoryProposition> sum;
    for (const auto& h : b.homogeneous) {
      auto q = homogeneous_to_proposition(HomogeneousHistory(h, tol));
      sum = sum ? oplus(*sum, q, tol) : q;
    }
    props.push_back(std::move(*sum));
  }
  return Window(std::move(props), tol);
}

// ---------------------------------------------------------------------------
// Report fragments

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline double to_bits(double nats) { return nats / std::log(2.0); }

inline json to_json(const EntropyReport& r, bool bits) {
  json j;
  j["dim_v"] = r.dim_v;
  j["block_dims"] = r.window_block_dims;
  j["probabilities"] = r.probabilities;
  j["consistency_residual"] = r.consistency_residual;
  j["i_hat"] = r.i_hat;
  j["i_norm"] = r.i_norm;
  json xs = json::array();
  for (const auto& [x, v] : r.i_x) {
    json e{{"x", x}, {"value", v}};
    if (bits) e["value_bits"] = to_bits(v);
    xs.push_back(std::move(e));
  }
  j["i_x"] = std::move(xs);
  if (bits) {
    j["i_hat_bits"] = to_bits(r.i_hat);
    j["i_norm_bits"] = to_bits(r.i_norm);
  }
  return j;
}

inline json to_json(const Window& w) {
  json blocks = json::array();
  for (const auto& b : w.blocks()) blocks.push_back(to_json(b.matrix()));
  return blocks;
}

inline json to_json(const SearchResult& r, bool bits) {
  json j;
  j["strategy"] = std::string(to_string(r.strategy));
  j["bound"] = std::string(to_string(r.bound));
  j["best_value"] = r.best_value;
  if (bits) j["best_value_bits"] = to_bits(r.best_value);
  j["evaluations"] = r.evaluations;
  j["seed"] = r.seed;
  j["window_block_dims"] = r.best_window.block_dims();
  j["window"] = to_json(r.best_window);
  if (std::isfinite(r.min_rank1_residual)) j["min_rank1_residual"] = r.min_rank1_residual;
  return j;
}

inline json to_json(const ValidationReport& v) {
  json j;
  j["passed"] = v.passed();
  j["swap_residual"] = v.swap_residual;
  j["trace"] = to_json(v.trace);
  j["min_diagonal"] = v.min_diagonal;
  j["max_diagonal_imag"] = v.max_diagonal_imag;
  j["projectors_checked"] = v.projectors_checked;
  j["tolerance"] = v.tol;
  j["violations"] = v.violations();
  return j;
}

}  // namespace cohist
