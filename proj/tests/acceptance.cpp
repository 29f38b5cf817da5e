// Runs every acceptance sweep and prints one [PASS]/[FAIL] line per criterion.

#include <dyadic/counterexample.hpp>
#include <dyadic/experiments.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

using namespace dyadic;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED: " << what << ";";
    }
  }
};

VerifyReport run(const std::string& th, Outcome& o, int min_trials = 0) {
  auto c = default_config(th);
  c.trials = std::max(c.trials, min_trials);
  auto r = verify(th, c);
  o.require(r.pass(), th + " checks");
  o.require(r.violations() == 0, th + " violations");
  o.require(static_cast<int>(r.trials.size()) >= min_trials, th + " trial count");
  o.detail << " " << th << ": " << r.trials.size() << " trials, " << r.violations() << " violations";
  for (const auto& [k, v] : r.recorded) o.detail << ", " << k << "=" << v;
  o.detail << ";";
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria;

  criteria.push_back({"1 linear necessity constant 3p", [](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    run("cor3.2", o, 200);
    o.require(seconds_since(t0) <= 120, "runtime within 2 min");
  }});
  criteria.push_back({"2 bilinear necessity constant 9pjpk", [](Outcome& o) { run("sec4.1", o, 200); }});
  criteria.push_back({"3 maximal, Carleson and Pythagoras lemmas", [](Outcome& o) {
    for (const char* th : {"lemma2.1", "lemma2.2", "lemma2.3"}) run(th, o, 500);
  }});
  criteria.push_back({"4 sequential testing two-sided", [](Outcome& o) { run("thm1.3", o, 200); }});
  criteria.push_back({"5 abstract vs discrete Wolff norms", [](Outcome& o) {
    run("prop1.5", o, 200);
    auto f0 = fixture_f0(2.0, 3.0, 1.5);
    for (auto [p, q] : {std::pair{4.0, 2.0}, {3.0, 1.5}, {2.0, 1.5}}) {
      double ratio = wolff_norm_comparison(f0.tree, f0.lambda, f0.sigma, f0.omega, p, q).ratio;
      o.require(std::abs(ratio - 1.0) <= 1e-12, "single cube ratio equals 1");
    }
  }});
  criteria.push_back({"6 stopping, exhaustive and psi squeeze", [](Outcome& o) { run("lemma2.4", o); }});
  criteria.push_back({"7 nested chain counterexample", [](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    auto g = growth_study(4, 2, {4, 8, 16, 32, 64});
    double slo = kInf, shi = 0, qlo = kInf, qhi = 0;
    for (const auto& row : g.rows) {
      slo = std::min(slo, row.sawyer);
      shi = std::max(shi, row.sawyer);
      qlo = std::min(qlo, row.ratio_sequential);
      qhi = std::max(qhi, row.ratio_sequential);
    }
    o.require(shi / slo <= 2, "Sawyer constants within factor 2");
    o.require(std::abs(g.slope - 0.25) <= 0.10, "slope 0.25 +- 0.10");
    o.require(qhi / qlo <= 3, "sequential ratio within factor 3");
    o.require(seconds_since(t0) <= 300, "runtime within 5 min");
    o.detail << " sawyer spread=" << shi / slo << ", slope=" << g.slope << ", sequential spread=" << qhi / qlo << ";";
  }});
  criteria.push_back({"8 two-measure Wolff potential", [](Outcome& o) { run("thm1.9", o, 100); }});
  criteria.push_back({"9 abstract Wolff vs nested testing", [](Outcome& o) {
    run("ge1", o);
    run("ge2", o);
  }});
  criteria.push_back({"10 maximal operators", [](Outcome& o) {
    run("thm5.2", o);
    run("thm5.4", o);
  }});
  criteria.push_back({"11 deterministic reports", [](Outcome& o) {
    for (const char* th : {"cor3.2", "ge2", "thm1.9"}) {
      auto c = default_config(th);
      c.trials = 50;
      c.seed = 7;
      auto a = to_json(verify(th, c)).dump(2);
      auto b = to_json(verify(th, c)).dump(2);
      c.threads = 1;
      auto d = to_json(verify(th, c)).dump(2);
      o.require(a == b && a == d, std::string(th) + " byte-identical");
      o.detail << " " << th << ": " << a.size() << " bytes, 3 runs;";
    }
  }});

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << " |" << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
