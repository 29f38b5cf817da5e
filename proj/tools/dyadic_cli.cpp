// Command-line front end: gen | eval | verify | counterexample.
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or input error.

#include <dyadic/experiments.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace dyadic;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void emit(const std::string& text, const std::string& out) {
  std::string body = text;
  if (body.empty() || body.back() != '\n') body += '\n';
  if (out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + out + "'");
  f << body;
}

Json read_json(const std::string& path) {
  try {
    if (path == "-") return Json::parse(std::cin);
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read '" + path + "'");
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw UsageError(std::string("malformed JSON: ") + e.what());
  }
}

/// Comma-separated leaf values; empty means the constant function 1.
LeafFunction parse_function(const std::string& s, std::size_t n) {
  if (s.empty()) return LeafFunction(n, 1.0);
  LeafFunction f;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      f.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  if (f.size() != n) throw UsageError("function needs " + std::to_string(n) + " leaf values");
  return f;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("not an integer: '" + item + "'");
    }
  }
  return out;
}

struct EvalOptions {
  std::string instance, what, kind;
  double p = 2, q = 2;
  double p1 = 4, p2 = 4, p3 = 4;
  std::string strategy = "stopping", side = "direct", variant = "shared", perm = "123", method = "alternating";
  std::string f, f2;
  std::uint64_t seed = 0;
  std::string out, format = "json";
};

Json eval_operator(const Instance& in, const EvalOptions& o) {
  const auto& t = in.tree;
  auto f = parse_function(o.f, t.num_leaves());
  std::string kind = o.kind.empty() ? "linear" : o.kind;
  LeafFunction v;
  if (kind == "linear") {
    v = apply_linear(t, in.lambda, f, in.sigma);
  } else if (kind == "adjoint") {
    v = apply_adjoint(t, in.lambda, f, in.omega);
  } else if (kind == "bilinear") {
    auto ms = in.bilinear_measures();
    v = apply_bilinear(t, in.lambda, f, ms[0], parse_function(o.f2, t.num_leaves()), ms[1]);
  } else if (kind == "maximal") {
    v = apply_maximal_star(t, in.lambda, f, in.sigma);
  } else if (kind == "dyadic-maximal") {
    v = apply_dyadic_maximal(t, f, in.sigma);
  } else {
    throw UsageError("unknown operator kind '" + kind + "' (linear, adjoint, bilinear, maximal, dyadic-maximal)");
  }
  return {{"values", v}};
}

Json eval_potential(const Instance& in, const EvalOptions& o) {
  const auto& t = in.tree;
  std::string kind = o.kind.empty() ? "discrete" : o.kind;
  std::array<double, 3> p3{o.p1, o.p2, o.p3};
  if (kind == "discrete") return to_json(discrete_wolff(t, in.lambda, in.sigma, in.omega, o.q));
  if (kind == "abstract") return to_json(abstract_wolff(t, in.lambda, in.sigma, in.omega, o.q));
  if (kind == "comparison") {
    auto c = wolff_norm_comparison(t, in.lambda, in.sigma, in.omega, o.p, o.q);
    return {{"abstract", c.abstract_raw}, {"discrete", c.discrete_raw}, {"ratio", c.ratio}};
  }
  if (kind == "two-measure")
    return to_json(two_measure_wolff(t, in.lambda, in.bilinear_measures(), p3, parse_permutation(o.perm)));
  if (kind == "bilinear-abstract")
    return to_json(bilinear_abstract_wolff(t, in.lambda, in.bilinear_measures(), p3, parse_permutation(o.perm)));
  throw UsageError("unknown potential kind '" + kind +
                   "' (discrete, abstract, comparison, two-measure, bilinear-abstract)");
}

Json eval_testing(const Instance& in, const EvalOptions& o) {
  const auto& t = in.tree;
  std::string kind = o.kind.empty() ? "sequential" : o.kind;
  auto strategy = parse_strategy(o.strategy);
  if (kind == "sawyer") {
    auto [a, b] = sawyer(t, in.lambda, in.sigma, in.omega, o.p, o.q);
    return {{"sawyer", a}, {"sawyer_dual", b}};
  }
  if (kind == "sequential") {
    if (o.side != "direct" && o.side != "adjoint") throw UsageError("side must be direct or adjoint");
    Side side = o.side == "direct" ? Side::Direct : Side::Adjoint;
    return to_json(t, sequential(t, in.lambda, in.sigma, in.omega, o.p, o.q, side, strategy));
  }
  if (kind == "bilinear") {
    if (o.variant != "shared" && o.variant != "per-cube") throw UsageError("variant must be shared or per-cube");
    auto variant = o.variant == "shared" ? BilinearVariant::Shared : BilinearVariant::PerCube;
    return to_json(t, bilinear_sequential(t, in.lambda, in.bilinear_measures(), {o.p1, o.p2, o.p3},
                                          parse_permutation(o.perm), variant, strategy));
  }
  if (kind == "maximal") {
    auto f = parse_function(o.f, t.num_leaves());
    auto e = linearize_maximal(t, in.lambda, f, in.sigma);
    return to_json(t, maximal_sequential(t, in.lambda, e, in.sigma, in.omega, o.p, o.q, strategy));
  }
  throw UsageError("unknown testing kind '" + kind + "' (sawyer, sequential, bilinear, maximal)");
}

Json eval_norm(const Instance& in, const EvalOptions& o) {
  const auto& t = in.tree;
  std::string kind = o.kind.empty() ? "linear" : o.kind;
  NormOptions opt;
  opt.seed = o.seed;
  if (kind == "linear") {
    if (o.method != "alternating" && o.method != "grid") throw UsageError("method must be alternating or grid");
    auto m = o.method == "grid" ? NormMethod::Grid : NormMethod::Alternating;
    return to_json(linear_norm(t, in.lambda, in.sigma, in.omega, o.p, o.q, m, opt));
  }
  if (kind == "bilinear") return to_json(bilinear_norm(t, in.lambda, in.bilinear_measures(), {o.p1, o.p2, o.p3}, opt));
  if (kind == "maximal") return to_json(maximal_norm_sup(t, in.lambda, in.sigma, in.omega, o.p, o.q, opt));
  throw UsageError("unknown norm kind '" + kind + "' (linear, bilinear, maximal)");
}

int run_eval(const EvalOptions& o) {
  if (o.format != "json") throw UsageError("eval only writes JSON");
  auto in = instance_from_json(read_json(o.instance));
  Json result;
  if (o.what == "operator") {
    result = eval_operator(in, o);
  } else if (o.what == "potential") {
    result = eval_potential(in, o);
  } else if (o.what == "testing") {
    result = eval_testing(in, o);
  } else if (o.what == "norm") {
    result = eval_norm(in, o);
  } else {
    throw UsageError("unknown evaluation '" + o.what + "' (operator, potential, testing, norm)");
  }
  Json j;
  j["what"] = o.what;
  if (!o.kind.empty()) j["kind"] = o.kind;
  j["result"] = result;
  emit(j.dump(2), o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic positive operators: instances, testing constants, potentials, norm estimates"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a random instance as JSON");
  std::uint64_t gen_seed = 0;
  int gen_depth = 2, gen_branching = 2;
  bool gen_bilinear = false;
  std::string gen_out, gen_format = "json";
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--depth", gen_depth, "tree depth");
  gen->add_option("--branching", gen_branching, "children per cube");
  gen->add_flag("--bilinear", gen_bilinear, "also draw sigma2 and sigma3");
  gen->add_option("--out", gen_out, "output path (default stdout)");
  gen->add_option("--format", gen_format, "json")->check(CLI::IsMember({"json"}));

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate one quantity on an instance");
  EvalOptions eo;
  ev->add_option("instance", eo.instance, "instance JSON file, or - for stdin")->required();
  ev->add_option("what", eo.what, "operator | potential | testing | norm")->required();
  ev->add_option("--kind", eo.kind, "variant of the quantity (see --help of each what)");
  ev->add_option("--p", eo.p, "source exponent");
  ev->add_option("--q", eo.q, "target exponent");
  ev->add_option("--p1", eo.p1, "first bilinear exponent");
  ev->add_option("--p2", eo.p2, "second bilinear exponent");
  ev->add_option("--p3", eo.p3, "third bilinear exponent");
  ev->add_option("--strategy", eo.strategy, "stopping | exhaustive");
  ev->add_option("--side", eo.side, "direct | adjoint");
  ev->add_option("--variant", eo.variant, "shared | per-cube");
  ev->add_option("--perm", eo.perm, "permutation such as 123 or 213");
  ev->add_option("--f", eo.f, "comma-separated leaf values (default 1)");
  ev->add_option("--f2", eo.f2, "second input for bilinear operators");
  ev->add_option("--method", eo.method, "alternating | grid");
  ev->add_option("--seed", eo.seed, "seed for the norm oracle");
  ev->add_option("--out", eo.out, "output path (default stdout)");
  ev->add_option("--format", eo.format, "json");

  // verify
  auto* ver = app.add_subcommand("verify", "run a randomized verification sweep");
  std::string theorem;
  ver->add_option("theorem", theorem, "target")->required()->check(CLI::IsMember(theorem_names()));
  std::optional<int> v_trials, v_depth, v_min_depth, v_branching, v_threads;
  std::optional<std::uint64_t> v_seed;
  std::optional<double> v_p, v_q, v_p1, v_p2, v_p3;
  std::optional<std::string> v_strategy;
  std::string v_out, v_format = "json";
  ver->add_option("--trials", v_trials, "number of random trials");
  ver->add_option("--seed", v_seed, "sweep seed");
  ver->add_option("--depth", v_depth, "maximum tree depth");
  ver->add_option("--min-depth", v_min_depth, "minimum tree depth");
  ver->add_option("--branching", v_branching, "children per cube");
  ver->add_option("--p", v_p, "fix p");
  ver->add_option("--q", v_q, "fix q");
  ver->add_option("--p1", v_p1, "fix p1 (with --p2, --p3)");
  ver->add_option("--p2", v_p2, "fix p2");
  ver->add_option("--p3", v_p3, "fix p3");
  ver->add_option("--strategy", v_strategy, "stopping | exhaustive");
  ver->add_option("--threads", v_threads, "worker threads (0: all cores)");
  ver->add_option("--out", v_out, "output path (default stdout)");
  ver->add_option("--format", v_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  // counterexample
  auto* ce = app.add_subcommand("counterexample", "growth of the chain construction");
  double ce_p = 4, ce_q = 2;
  std::string ce_n = "4,8,16,32,64", ce_out, ce_format = "csv";
  std::uint64_t ce_seed = 0;
  ce->add_option("--p", ce_p, "source exponent");
  ce->add_option("--q", ce_q, "target exponent (must be below p)");
  ce->add_option("--N", ce_n, "comma-separated chain lengths");
  ce->add_option("--seed", ce_seed, "seed for the norm oracle");
  ce->add_option("--out", ce_out, "output path (default stdout)");
  ce->add_option("--format", ce_format, "csv | json")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      SweepConfig c;
      std::mt19937_64 rng(trial_seed(gen_seed, 0));
      auto t = DyadicTree::full(gen_depth, gen_branching);
      emit(to_json(random_instance(t, rng, c, gen_bilinear)).dump(2), gen_out);
      return 0;
    }
    if (*ev) return run_eval(eo);
    if (*ver) {
      auto c = default_config(theorem);
      if (v_trials) c.trials = *v_trials;
      if (v_seed) c.seed = *v_seed;
      if (v_depth) {
        c.max_depth = *v_depth;
        c.min_depth = std::min(c.min_depth, c.max_depth);
      }
      if (v_min_depth) c.min_depth = *v_min_depth;
      if (v_branching) c.branching = *v_branching;
      if (v_threads) c.threads = *v_threads;
      if (v_p) c.p = *v_p;
      if (v_q) c.q = *v_q;
      if (v_p1 || v_p2 || v_p3) {
        if (!(v_p1 && v_p2 && v_p3)) throw UsageError("--p1, --p2 and --p3 go together");
        c.p3 = std::array<double, 3>{*v_p1, *v_p2, *v_p3};
      }
      if (v_strategy) c.strategy = parse_strategy(*v_strategy);
      auto r = verify(theorem, c);
      emit(v_format == "csv" ? to_csv(r) : to_json(r).dump(2), v_out);
      std::cerr << theorem << ": " << (r.pass() ? "pass" : "FAIL") << (r.vacuous ? " (vacuous)" : "") << ", "
                << r.trials.size() << " trials, " << r.violations() << " violations\n";
      return r.pass() ? 0 : kExitViolation;
    }
    if (*ce) {
      NormOptions opt;
      opt.seed = ce_seed;
      auto st = growth_study(ce_p, ce_q, parse_int_list(ce_n), opt);
      if (ce_format == "json") {
        Json j;
        j["p"] = st.p;
        j["q"] = st.q;
        Json rows = Json::array();
        for (const auto& r : st.rows)
          rows.push_back({{"N", r.N},
                          {"norm_est", r.norm_est},
                          {"sawyer", r.sawyer},
                          {"sequential", r.sequential},
                          {"ratio", r.ratio},
                          {"ratio_sequential", r.ratio_sequential},
                          {"norm_warning", r.norm_warning}});
        j["rows"] = rows;
        j["slope"] = number_or_null(st.slope);
        emit(j.dump(2), ce_out);
      } else {
        std::ostringstream os;
        os.precision(17);
        os << "N,norm_est,sawyer,sequential,ratio,slope\n";
        for (std::size_t k = 0; k < st.rows.size(); ++k) {
          const auto& r = st.rows[k];
          os << r.N << "," << r.norm_est << "," << r.sawyer << "," << r.sequential << "," << r.ratio << ",";
          if (k + 1 == st.rows.size() && std::isfinite(st.slope)) os << st.slope;
          os << "\n";
        }
        emit(os.str(), ce_out);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
