// Subcommands of the cohist tool. run() is the whole program so tests can
// drive it in-process with string streams.
#pragma once

#include "cohist/io.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace cohist::cli {

enum ExitCode : int {
  kOk = 0,
  kParse = 1,
  kValidation = 2,
  kInconsistent = 3,
  kStrategy = 4,
  kInputMatrix = 5,
};

struct Failure : std::runtime_error {
  Failure(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  int code;
};

struct Options {
  std::string file;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::size_t sample_count = 200;
  std::string strategy = "spectral";
  std::string window;
  std::vector<double> exponents;
  bool bits = false;
  std::optional<std::size_t> budget;
  std::string out;
  std::string s1, s2, plus, minus;
};

namespace detail {

struct Loaded {
  ProblemSpec problem;
  double tol;
  std::uint64_t seed;
};

inline Loaded load(const Options& o) {
  Loaded l{read_problem_file(o.file), 0.0, 0};
  l.tol = o.tol.value_or(l.problem.tolerance);
  l.seed = o.seed.value_or(l.problem.seed);
  return l;
}

inline DecoherenceFunction build(const ProblemSpec& p) {
  try {
    return build_decoherence(p);
  } catch (const std::invalid_argument& e) {
    throw Failure(kInputMatrix, e.what());
  } catch (const std::domain_error& e) {
    throw Failure(kInputMatrix, e.what());
  }
}

inline Window named_window(const ProblemSpec& p, const std::string& name, double tol) {
  const auto it = p.windows.find(name);
  if (it == p.windows.end()) throw Failure(kParse, "no window named '" + name + "' in the problem file");
  try {
    return build_window(it->second, std::max(tol, 1e-8));
  } catch (const std::invalid_argument& e) {
    throw Failure(kInputMatrix, "window '" + name + "': " + e.what());
  }
}

/// Chain recipes evaluate only propositions that carry their homogeneous
/// decomposition; anything else goes through the expanded operator.
inline DecoherenceFunction operator_view(const DecoherenceFunction& d) {
  if (!d.is_chain()) return d;
  if (d.dim_v() > kMaxMaterializeDimV)
    throw Failure(kStrategy, "history space of dimension " + std::to_string(d.dim_v()) + " is too large to expand");
  return from_operator(materialize_operator(d));
}

inline DecoherenceFunction view_for(const DecoherenceFunction& d, const Window& w) {
  const bool all_components =
      std::all_of(w.blocks().begin(), w.blocks().end(), [](const auto& b) { return b.has_components(); });
  return all_components ? d : operator_view(d);
}

inline json header(const std::string& command, const Loaded& l) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["timestamp"] = utc_timestamp();
  j["problem_digest"] = problem_digest(l.problem);
  j["kind"] = std::string(to_string(l.problem.kind));
  j["dim_v"] = l.problem.dim_v();
  j["tolerance"] = l.tol;
  j["seed"] = l.seed;
  return j;
}

inline void emit(const json& report, const Options& o, std::ostream& out) {
  if (o.out.empty()) out << report.dump(2) << '\n';
  else write_json_file(o.out, report);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_validate(const Options& o, std::ostream& out) {
  const auto l = detail::load(o);
  const auto d = detail::build(l.problem);
  if (d.dim_v() > kMaxMaterializeDimV) throw Failure(kStrategy, "history space too large to expand");
  const DecoherenceOperator op = materialize_operator(d);
  const ValidationReport rep = validate(op, o.sample_count, l.tol, l.seed);

  json report = detail::header("validate", l);
  report["validation"] = to_json(rep);

  Rng rng = make_rng(l.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t v = d.dim_v();
  if (l.problem.kind == ProblemKind::single_time) {
    const ComplexMatrix& rho = *l.problem.rho;
    double residual = 0.0;
    for (std::size_t s = 0; s < o.sample_count; ++s) {
      const ComplexMatrix p = random_projector(v, uniform_index(1, v, rng), rng);
      const ComplexMatrix q = random_projector(v, uniform_index(1, v, rng), rng);
      residual = std::max(residual, std::abs(operator_value(op, p, q) - (p * rho * q).trace()));
    }
    report["cross_check"] = {{"reference", "tr(P rho Q)"}, {"pairs", o.sample_count}, {"residual", residual}};
  } else if (const ChainRecipe* r = d.recipe()) {
    const auto chain = from_chain(*r, l.tol);
    const std::size_t h = r->h_dim();
    double residual = 0.0;
    for (std::size_t s = 0; s < o.sample_count; ++s) {
      auto random_history = [&] {
        std::vector<ComplexMatrix> per_time;
        for (std::size_t t = 0; t < r->n_times; ++t) per_time.push_back(random_projector(h, uniform_index(1, h, rng), rng));
        return homogeneous_to_proposition(HomogeneousHistory(per_time, 1e-8));
      };
      const auto a = random_history(), b = random_history();
      residual = std::max(residual, std::abs(operator_value(op, a.matrix(), b.matrix()) - eval(chain, a, b)));
    }
    report["cross_check"] = {{"reference", "tr(C_a^dagger rho C_b)"}, {"pairs", o.sample_count}, {"residual", residual}};
  }
  detail::emit(report, o, out);
  return rep.passed() ? kOk : kValidation;
}

inline int cmd_entropy(const Options& o, std::ostream& out) {
  const auto l = detail::load(o);
  const auto d = detail::build(l.problem);
  const Window w = o.window.empty() ? trivial_window(d) : detail::named_window(l.problem, o.window, l.tol);
  if (w.dim_v() != d.dim_v()) throw Failure(kInputMatrix, "window and problem live on different spaces");
  EntropyReport rep;
  try {
    rep = entropy_report(detail::view_for(d, w), w, l.tol, o.exponents);
  } catch (const InconsistentWindow& e) {
    throw Failure(kInconsistent, "window '" + (o.window.empty() ? std::string("trivial") : o.window) +
                                     "' is inconsistent: residual " + json(e.residual()).dump() + " > tolerance " +
                                     json(l.tol).dump());
  } catch (const std::domain_error& e) {
    throw Failure(kValidation, e.what());
  }
  json report = detail::header("entropy", l);
  report["window"] = o.window.empty() ? "trivial" : o.window;
  report["entropy"] = to_json(rep, o.bits);
  detail::emit(report, o, out);
  return kOk;
}

inline int cmd_minimize(const Options& o, std::ostream& out) {
  const auto l = detail::load(o);
  const auto d = detail::build(l.problem);
  json report = detail::header("minimize", l);

  std::optional<SearchResult> result;
  DecoherenceFunction view = d;
  try {
    if (o.strategy == "spectral") {
      if (!d.recipe()) throw Failure(kStrategy, "spectral strategy needs a state/evolution problem, not explicit_x");
      try {
        result = minimize_spectral(d, l.tol);
      } catch (const std::invalid_argument& e) {
        throw Failure(kStrategy, e.what());
      }
      const ChainRecipe& r = *d.recipe();
      report["formula_value"] = vn_entropy(r.rho, std::max(l.tol, 1e-8)) - 2.0 * std::log(static_cast<double>(d.dim_v()));
    } else if (o.strategy == "param1d") {
      view = detail::operator_view(d);
      if (view.dim_v() > 16) throw Failure(kStrategy, "param1d supports dim V <= 16");
      Param1dOptions opt;
      opt.tol = l.tol;
      opt.seed = l.seed;
      if (o.budget) {
        if (view.dim_v() == 2) opt.theta_steps = opt.phi_steps = std::max<std::size_t>(*o.budget, 1);
        else opt.samples = *o.budget;
      }
      result = minimize_parametrized_1d(view, opt);
    } else if (o.strategy == "greedy") {
      view = detail::operator_view(d);
      GreedyOptions opt;
      opt.tol = l.tol;
      opt.seed = l.seed;
      if (o.budget) opt.max_rounds = *o.budget;
      result = minimize_greedy_refinement(view, opt);
    } else if (o.strategy == "exhaustive") {
      std::vector<Window> family;
      if (!o.window.empty()) {
        const Window w = detail::named_window(l.problem, o.window, l.tol);
        if (w.size() > kMaxCoarseGrainBlocks)
          throw Failure(kStrategy, "window '" + o.window + "' has more blocks than the enumeration cap");
        family = coarse_graining_family(w);
      } else {
        for (const auto& [name, blocks] : l.problem.windows) family.push_back(detail::named_window(l.problem, name, l.tol));
      }
      if (family.empty()) throw Failure(kStrategy, "exhaustive strategy needs --window or named windows in the file");
      bool components = true;
      for (const auto& w : family)
        for (const auto& b : w.blocks()) components = components && b.has_components();
      if (!components) view = detail::operator_view(d);
      if (o.budget && family.size() > *o.budget) family.erase(family.begin() + static_cast<std::ptrdiff_t>(*o.budget), family.end());
      result = minimize_exhaustive(view, family, l.tol);
    } else {
      throw Failure(kStrategy, "unknown strategy '" + o.strategy + "'");
    }
  } catch (const std::domain_error& e) {
    throw Failure(kValidation, e.what());
  }

  report["result"] = to_json(*result, o.bits);
  report["result"]["consistency_residual"] = is_consistent(view, result->best_window, l.tol).residual;
  detail::emit(report, o, out);
  return kOk;
}

inline int cmd_split(const Options& o, std::ostream& out) {
  const auto l = detail::load(o);
  const auto d = detail::build(l.problem);
  if (d.dim_v() > kMaxMaterializeDimV) throw Failure(kStrategy, "history space too large to expand");
  const DecoherenceOperator op = materialize_operator(d);
  if (o.s1.empty() || o.s2.empty()) throw Failure(kParse, "split needs --s1 and --s2");
  const ComplexMatrix s1 = read_matrix_file(o.s1);
  const ComplexMatrix s2 = read_matrix_file(o.s2);
  for (const auto* s : {&s1, &s2}) {
    if (!is_square(*s) || dim(*s) != op.dim_v)
      throw Failure(kInputMatrix, "s1 and s2 must be " + std::to_string(op.dim_v) + "x" + std::to_string(op.dim_v));
    if (!is_hermitian(*s, l.tol)) throw Failure(kInputMatrix, "s1 and s2 must be Hermitian");
  }
  const ImpuritySplit split = impurity_split(op, s1, s2, l.tol);

  const std::size_t v = op.dim_v;
  const DecoherenceOperator y_op(split.y, v);
  Rng rng = make_rng(l.seed);
  double y_diagonal = 0.0;
  for (std::size_t s = 0; s < o.sample_count; ++s) {
    const ComplexMatrix a = random_projector(v, uniform_index(1, v, rng), rng);
    y_diagonal = std::max(y_diagonal, std::abs(operator_value(y_op, a, a)));
  }

  const auto vp = validate(split.plus, o.sample_count, l.tol, l.seed);
  const auto vm = validate(split.minus, o.sample_count, l.tol, l.seed);

  auto half = [&](const DecoherenceOperator& x) {
    ProblemSpec p;
    p.kind = ProblemKind::explicit_x;
    p.dim_h = l.problem.dim_h;
    p.n_times = l.problem.n_times;
    p.x = x.x;
    p.windows = l.problem.windows;
    p.tolerance = l.problem.tolerance;
    p.seed = l.problem.seed;
    return problem_to_json(p);
  };
  const std::string plus_path = o.plus.empty() ? o.file + ".plus.json" : o.plus;
  const std::string minus_path = o.minus.empty() ? o.file + ".minus.json" : o.minus;
  write_json_file(plus_path, half(split.plus));
  write_json_file(minus_path, half(split.minus));

  json report = detail::header("split", l);
  report["plus_file"] = plus_path;
  report["minus_file"] = minus_path;
  report["reconstruction_residual"] = max_abs(0.5 * split.plus.x + 0.5 * split.minus.x - op.x);
  report["y_diagonal_max"] = y_diagonal;
  report["y_diagonal_samples"] = o.sample_count;
  report["plus_validation"] = to_json(vp);
  report["minus_validation"] = to_json(vm);
  detail::emit(report, o, out);
  return vp.passed() && vm.passed() ? kOk : kValidation;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Consistent-histories entropy toolkit", "cohist"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("file", o.file, "Problem file (JSON)")->required();
    sub->add_option("--tol", o.tol, "Tolerance; overrides the problem file");
    sub->add_option("--seed", o.seed, "Seed; overrides the problem file");
    sub->add_option("--out", o.out, "Write the report here instead of stdout");
    sub->add_option("--sample-count", o.sample_count, "Random projectors per check")->check(CLI::PositiveNumber);
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check the decoherence operator conditions");
  common(validate_cmd);

  auto* entropy_cmd = app.add_subcommand("entropy", "Entropy of d on a named window");
  common(entropy_cmd);
  entropy_cmd->add_option("--window", o.window, "Window name from the problem file (default: trivial)");
  entropy_cmd->add_option("--x", o.exponents, "Exponents of the I^x family to report")->check(CLI::NonNegativeNumber);
  entropy_cmd->add_flag("--bits", o.bits, "Also report values in bits");

  auto* minimize_cmd = app.add_subcommand("minimize", "Search consistent windows for the least entropy");
  common(minimize_cmd);
  minimize_cmd->add_option("--strategy", o.strategy, "spectral | param1d | greedy | exhaustive");
  minimize_cmd->add_option("--window", o.window, "Base window for the exhaustive strategy");
  minimize_cmd->add_option("--budget", o.budget, "Grid steps, samples, rounds or family size, per strategy");
  minimize_cmd->add_flag("--bits", o.bits, "Also report values in bits");

  auto* split_cmd = app.add_subcommand("split", "Impurity split X = (X+ + X-)/2");
  common(split_cmd);
  split_cmd->add_option("--s1", o.s1, "Hermitian matrix file")->required();
  split_cmd->add_option("--s2", o.s2, "Hermitian matrix file")->required();
  split_cmd->add_option("--plus", o.plus, "Output problem file for X+");
  split_cmd->add_option("--minus", o.minus, "Output problem file for X-");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (*validate_cmd) return cmd_validate(o, out);
    if (*entropy_cmd) return cmd_entropy(o, out);
    if (*minimize_cmd) return cmd_minimize(o, out);
    if (*split_cmd) return cmd_split(o, out);
  } catch (const Failure& f) {
    err << "cohist: " << f.what() << '\n';
    return f.code;
  } catch (const ParseError& e) {
    err << "cohist: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception& e) {
    err << "cohist: " << e.what() << '\n';
    return kInputMatrix;
  }
  return kParse;
}

}  // namespace cohist::cli
