#pragma once

// Sparse cube families: certification by fractional flow, stopping
// constructions, exact maximization over sparse families, and the
// embedding lemmas that hold on sparse families.

#include <dyadic/operators.hpp>

#include <memory>
#include <queue>

namespace dyadic {

/// A set of cubes (tree indices, ascending) with an optional sparseness witness.
struct CubeFamily {
  std::vector<std::size_t> cubes;
  std::optional<EAssignment> witness;

  CubeFamily() = default;
  explicit CubeFamily(std::vector<std::size_t> c) : cubes(std::move(c)) { normalize(); }

  void normalize() {
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
  }
  bool contains(std::size_t c) const { return std::binary_search(cubes.begin(), cubes.end(), c); }
  std::size_t size() const { return cubes.size(); }
  bool empty() const { return cubes.empty(); }

  std::vector<std::string> addresses(const DyadicTree& t) const {
    std::vector<std::string> out;
    for (auto c : cubes) out.push_back(t.id(c).str());
    return out;
  }

  static CubeFamily from_ids(const DyadicTree& t, const std::vector<CubeId>& ids) {
    std::vector<std::size_t> c;
    for (const auto& id : ids) c.push_back(t.at(id));
    return CubeFamily(std::move(c));
  }
};

enum class SparseMode { Exact, ChildrenSum };

struct SparseCheck {
  bool sparse = false;
  std::optional<EAssignment> witness;
};

namespace detail {

/// Dinic max flow on real capacities.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : adj_(n), level_(n), it_(n) {}

  std::size_t add_edge(std::size_t u, std::size_t v, double cap) {
    adj_[u].push_back(edges_.size());
    edges_.push_back({v, cap, 0.0});
    adj_[v].push_back(edges_.size());
    edges_.push_back({u, 0.0, 0.0});
    return edges_.size() - 2;
  }

  double run(std::size_t s, std::size_t t) {
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      while (double f = dfs(s, t, kInf)) total += f;
    }
    return total;
  }

  double flow(std::size_t edge) const { return edges_[edge].flow; }

 private:
  struct Edge {
    std::size_t to;
    double cap, flow;
  };
  static constexpr double kEps = 1e-15;

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto e : adj_[u]) {
        const auto& ed = edges_[e];
        if (level_[ed.to] < 0 && ed.cap - ed.flow > kEps) {
          level_[ed.to] = level_[u] + 1;
          q.push(ed.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(std::size_t u, std::size_t t, double pushed) {
    if (u == t) return pushed;
    for (; it_[u] < adj_[u].size(); ++it_[u]) {
      auto e = adj_[u][it_[u]];
      auto& ed = edges_[e];
      if (level_[ed.to] != level_[u] + 1 || ed.cap - ed.flow <= kEps) continue;
      double got = dfs(ed.to, t, std::min(pushed, ed.cap - ed.flow));
      if (got > 0.0) {
        ed.flow += got;
        edges_[e ^ 1].flow -= got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

inline void check_family(const DyadicTree& t, const CubeFamily& fam) {
  for (auto c : fam.cubes)
    if (c >= t.num_cubes()) throw std::out_of_range("family cube outside tree");
}

}  // namespace detail

/// Decides whether disjoint fractional E(F) ⊆ F with σ(E(F)) ≥ σ(F)/2 exist.
/// Exact mode solves the leaf→member flow problem; children-sum mode checks
/// Σ_{F' ∈ ch(F)} σ(F') ≤ σ(F)/2.
inline SparseCheck is_sparse(const DyadicTree& t, const CubeFamily& fam, const Measure& sigma,
                             SparseMode mode = SparseMode::Exact, double slack = 1e-9) {
  detail::check_family(t, fam);
  auto m = cube_masses(t, sigma);
  if (mode == SparseMode::ChildrenSum) {
    for (auto F : fam.cubes) {
      double s = 0.0;
      // maximal members strictly inside F
      for (auto G : fam.cubes) {
        if (G == F || !t.contains(F, G)) continue;
        bool maximal = true;
        for (auto H : fam.cubes)
          if (H != F && H != G && t.contains(F, H) && t.contains(H, G)) maximal = false;
        if (maximal) s += m[G];
      }
      if (s > 0.5 * m[F] + slack * std::max(1.0, m[F])) return {false, std::nullopt};
    }
    return {true, std::nullopt};
  }

  std::size_t L = t.num_leaves(), K = fam.size();
  std::size_t source = L + K, sink = L + K + 1;
  detail::MaxFlow flow(L + K + 2);
  double demand = 0.0;
  for (std::size_t l = 0; l < L; ++l) flow.add_edge(source, l, sigma[l]);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> arcs(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t F = fam.cubes[k];
    for (std::size_t l = t.leaf_begin(F); l < t.leaf_end(F); ++l)
      arcs[k].push_back({l, flow.add_edge(l, L + k, kInf)});
    flow.add_edge(L + k, sink, 0.5 * m[F]);
    demand += 0.5 * m[F];
  }
  double got = flow.run(source, sink);
  if (got < demand - slack * std::max(1.0, demand)) return {false, std::nullopt};
  EAssignment e(t);
  for (std::size_t k = 0; k < K; ++k)
    for (auto [l, edge] : arcs[k])
      if (sigma[l] > 0.0) e.set(fam.cubes[k], l, std::clamp(flow.flow(edge) / sigma[l], 0.0, 1.0));
  return {true, std::move(e)};
}

/// Links of a family below a root: family children, E_𝓕(F) masses, π_𝓕(Q).
struct StoppingStructure {
  CubeFamily family;
  std::size_t root = 0;
  std::map<std::size_t, std::vector<std::size_t>> children;
  std::map<std::size_t, double> e_mass;  // σ(F) − Σ σ(ch(F))
  std::vector<std::size_t> parent;       // π_𝓕(Q) per cube, kNone when undefined

  std::optional<std::size_t> pi(std::size_t q) const {
    if (parent[q] == kNone) return std::nullopt;
    return parent[q];
  }
};

inline StoppingStructure structure(const DyadicTree& t, const CubeFamily& fam, const Measure& sigma,
                                   std::size_t root = 0) {
  detail::check_family(t, fam);
  auto m = cube_masses(t, sigma);
  StoppingStructure s;
  s.family = fam;
  s.root = root;
  s.parent.assign(t.num_cubes(), kNone);
  for (std::size_t c = 0; c < t.num_cubes(); ++c) {
    if (c != t.root()) s.parent[c] = s.parent[t.parent(c)];
    if (fam.contains(c) && t.contains(root, c)) s.parent[c] = c;
  }
  for (auto F : fam.cubes) {
    if (!t.contains(root, F)) continue;
    s.children[F];
    s.e_mass[F] = m[F];
  }
  for (auto F : fam.cubes) {
    if (!t.contains(root, F) || F == root || t.parent(F) == kNone) continue;
    std::size_t up = s.parent[t.parent(F)];
    if (up == kNone) continue;
    s.children[up].push_back(F);
    s.e_mass[up] -= m[F];
  }
  return s;
}

namespace detail {
/// Stopping recursion: from F, add the maximal F' ⊊ F with value(F') > 2 value(F).
inline void stop_below(const DyadicTree& t, std::size_t F, const std::vector<double>& value,
                       std::vector<std::size_t>& out) {
  out.push_back(F);
  double threshold = 2.0 * value[F];
  std::vector<std::size_t> stack(t.children(F).begin(), t.children(F).end());
  while (!stack.empty()) {
    auto c = stack.back();
    stack.pop_back();
    if (value[c] > threshold) {
      stop_below(t, c, value, out);
    } else {
      for (auto k : t.children(c)) stack.push_back(k);
    }
  }
}
}  // namespace detail

/// Principal cubes of f: maximal F' ⊊ F with ⟨f⟩_{F'} > 2⟨f⟩_F, recursively.
inline CubeFamily build_principal_cubes(const DyadicTree& t, std::span<const double> f,
                                        const Measure& sigma, std::size_t root = 0) {
  detail::check_nonnegative(f);
  auto I = cube_integrals(t, f, sigma);
  auto m = cube_masses(t, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] = safe_div(I[c], m[c]);
  std::vector<std::size_t> out;
  detail::stop_below(t, root, I, out);
  return CubeFamily(std::move(out));
}

/// Stopping family for a superadditive τ: maximal F' ⊊ F with
/// τ_{F'}/σ(F') > 2 τ_F/σ(F), recursively.
inline CubeFamily build_superadditive_stopping(const DyadicTree& t, std::span<const double> tau,
                                               const std::vector<double>& sigma_cubes,
                                               std::size_t root = 0) {
  std::vector<double> ratio(t.num_cubes());
  for (std::size_t c = 0; c < ratio.size(); ++c) ratio[c] = safe_div(tau[c], sigma_cubes[c]);
  std::vector<std::size_t> out;
  detail::stop_below(t, root, ratio, out);
  return CubeFamily(std::move(out));
}

inline CubeFamily build_superadditive_stopping(const DyadicTree& t, std::span<const double> tau,
                                               const Measure& sigma, std::size_t root = 0) {
  return build_superadditive_stopping(t, tau, cube_masses(t, sigma), root);
}

/// Throws unless Σ over children of τ ≤ τ(Q) for every cube (which gives
/// superadditivity over all disjoint subcubes).
inline void check_superadditive(const DyadicTree& t, std::span<const double> tau, double tol = 1e-9) {
  for (std::size_t c = 0; c < t.num_cubes(); ++c) {
    if (tau[c] < 0.0) throw std::domain_error("τ must be nonnegative");
    double s = 0.0;
    for (auto k : t.children(c)) s += tau[k];
    if (s > tau[c] + tol * std::max(s, tau[c]))
      throw std::domain_error("τ is not superadditive at cube " + t.id(c).str());
  }
}

inline constexpr std::uint64_t kEnumerationLimit = std::uint64_t{1} << 20;

namespace detail {
inline double binomial_sum(std::size_t n, std::size_t k) {
  double total = 0.0, term = 1.0;
  for (std::size_t i = 0; i <= std::min(n, k); ++i) {
    total += term;
    term = term * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return total;
}
}  // namespace detail

/// Calls `visit` with every exact-sparse family (with witness) of at most
/// max_size cubes, in lexicographic order of the ascending cube lists.
/// Subfamilies of sparse families are sparse, so non-sparse prefixes are cut.
inline void for_each_sparse_family(const DyadicTree& t, const Measure& sigma,
                                   const std::function<void(const CubeFamily&)>& visit,
                                   std::size_t max_size = kNone) {
  std::size_t n = t.num_cubes();
  if (detail::binomial_sum(n, max_size) > static_cast<double>(kEnumerationLimit))
    throw std::length_error("sparse family enumeration exceeds 2^20 subsets");
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t next) {
    CubeFamily fam(cur);
    auto check = is_sparse(t, fam, sigma);
    if (!check.sparse) return;
    fam.witness = std::move(check.witness);
    visit(fam);
    if (cur.size() >= max_size) return;
    for (std::size_t c = next; c < n; ++c) {
      cur.push_back(c);
      rec(c + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

inline std::vector<CubeFamily> enumerate_sparse_families(const DyadicTree& t, const Measure& sigma,
                                                         std::size_t max_size = kNone) {
  std::vector<CubeFamily> out;
  for_each_sparse_family(t, sigma, [&](const CubeFamily& f) { out.push_back(f); }, max_size);
  return out;
}

struct SparseOptimum {
  double value = 0.0;  // Σ_{F∈𝓕} w_F
  CubeFamily family;
};

namespace detail {
struct Trace {
  std::size_t cube = kNone;
  std::shared_ptr<const Trace> a, b;
};
using TracePtr = std::shared_ptr<const Trace>;

inline TracePtr join(TracePtr a, TracePtr b) {
  if (!a) return b;
  if (!b) return a;
  return std::make_shared<const Trace>(Trace{kNone, std::move(a), std::move(b)});
}

inline void collect(const TracePtr& p, std::vector<std::size_t>& out) {
  std::vector<const Trace*> stack;
  if (p) stack.push_back(p.get());
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    if (n->cube != kNone) out.push_back(n->cube);
    if (n->a) stack.push_back(n->a.get());
    if (n->b) stack.push_back(n->b.get());
  }
}

struct Point {
  double load, weight;
  TracePtr trace;
};

inline void prune(std::vector<Point>& pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& x, const Point& y) {
    return x.load < y.load || (x.load == y.load && x.weight > y.weight);
  });
  std::vector<Point> kept;
  double best = -kInf;
  for (auto& p : pts)
    if (p.weight > best) {
      best = p.weight;
      kept.push_back(std::move(p));
    }
  pts = std::move(kept);
}
}  // namespace detail

/// Exact max of Σ_{F∈𝓕} w_F over σ-sparse families of cubes inside `root`.
///
/// For nested families the flow problem is feasible iff every member F
/// carries Σ_{G∈𝓕, G⊆F} σ(G)/2 ≤ σ(F); the tree recursion keeps the Pareto
/// frontier of (load, weight) per subtree. Cubes with w ≤ 0 or σ = 0 are
/// never selected.
inline SparseOptimum best_sparse_family(const DyadicTree& t, std::span<const double> w,
                                        const std::vector<double>& sigma_cubes,
                                        std::size_t root = 0, double slack = 1e-9) {
  std::vector<std::vector<detail::Point>> frontier(t.num_cubes());
  for (std::size_t c = t.subtree_end(root); c-- > root;) {
    std::vector<detail::Point> pts{{0.0, 0.0, nullptr}};
    for (auto k : t.children(c)) {
      std::vector<detail::Point> next;
      next.reserve(pts.size() * frontier[k].size());
      for (const auto& a : pts)
        for (const auto& b : frontier[k])
          next.push_back({a.load + b.load, a.weight + b.weight, detail::join(a.trace, b.trace)});
      detail::prune(next);
      pts = std::move(next);
      frontier[k].clear();
      frontier[k].shrink_to_fit();
    }
    double m = sigma_cubes[c];
    if (w[c] > 0.0 && m > 0.0) {
      auto node = std::make_shared<const detail::Trace>(detail::Trace{c, nullptr, nullptr});
      std::size_t n = pts.size();
      for (std::size_t i = 0; i < n; ++i) {
        double load = pts[i].load + 0.5 * m;
        if (load <= m * (1.0 + slack))
          pts.push_back({load, pts[i].weight + w[c], detail::join(node, pts[i].trace)});
      }
      detail::prune(pts);
    }
    frontier[c] = std::move(pts);
  }
  const auto& top = frontier[root];
  auto best = std::max_element(top.begin(), top.end(),
                               [](const auto& a, const auto& b) { return a.weight < b.weight; });
  SparseOptimum out;
  out.value = best->weight;
  std::vector<std::size_t> cubes;
  detail::collect(best->trace, cubes);
  out.family = CubeFamily(std::move(cubes));
  return out;
}

/// (Σ_{F∈𝓕} (⟨f⟩^σ_F)^p σ(F))^{1/p}.
inline double carleson_lhs(const DyadicTree& t, const CubeFamily& fam, std::span<const double> f,
                           const Measure& sigma, double p) {
  check_exponent(p, "p");
  detail::check_nonnegative(f);
  if (!is_sparse(t, fam, sigma).sparse) throw std::invalid_argument("family is not sparse");
  auto I = cube_integrals(t, f, sigma);
  auto m = cube_masses(t, sigma);
  double s = 0.0;
  for (auto F : fam.cubes)
    if (m[F] > 0.0) s += std::pow(I[F] / m[F], p) * m[F];
  return std::pow(s, 1.0 / p);
}

/// ‖Σ_S a_S‖_p / (Σ_S ‖a_S‖_p^p)^{1/p}; a[k] belongs to fam.cubes[k].
/// Each a_S must vanish outside S and be constant on every family child of S.
inline double pythagoras_ratio(const DyadicTree& t, const CubeFamily& fam,
                               const std::vector<LeafFunction>& a, const Measure& sigma, double p,
                               double tol = 1e-12) {
  check_exponent(p, "p");
  if (a.size() != fam.size()) throw std::invalid_argument("one function per family member required");
  auto st = structure(t, fam, sigma, t.root());
  LeafFunction total(t.num_leaves(), 0.0);
  double denom = 0.0;
  for (std::size_t k = 0; k < fam.size(); ++k) {
    std::size_t S = fam.cubes[k];
    const auto& f = a[k];
    detail::check_function(t, f, "a_S");
    detail::check_nonnegative(f, "a_S");
    for (std::size_t l = 0; l < f.size(); ++l) {
      if (!t.leaf_in(l, S) && f[l] != 0.0)
        throw std::invalid_argument("a_S is not supported on S = " + t.id(S).str());
      total[l] += f[l];
    }
    auto it = st.children.find(S);
    if (it != st.children.end())
      for (auto child : it->second)
        for (std::size_t l = t.leaf_begin(child); l < t.leaf_end(child); ++l)
          if (std::abs(f[l] - f[t.leaf_begin(child)]) > tol * std::max(1.0, std::abs(f[l])))
            throw std::invalid_argument("a_S is not constant on child " + t.id(child).str());
    denom += std::pow(lp_norm(f, sigma, p), p);
  }
  double num = lp_norm(total, sigma, p);
  if (denom == 0.0) return 1.0;
  return num / std::pow(denom, 1.0 / p);
}

struct Lemma24Quantities {
  double psi_norm = 0.0;    // ‖sup_Q 1_Q τ_Q/σ(Q)‖_{L^s(σ)}
  double stopping = 0.0;    // (Σ_{F∈stop} (τ_F/σ(F))^s σ(F))^{1/s}
  double exhaustive = 0.0;  // max of the same sum over all sparse families
  LeafFunction psi;
  CubeFamily stopping_family;
  CubeFamily exhaustive_family;
};

inline Lemma24Quantities lemma24_quantities(const DyadicTree& t, std::span<const double> tau,
                                            const Measure& sigma, double s) {
  check_exponent(s, "s");
  if (tau.size() != t.num_cubes()) throw std::invalid_argument("τ must have one value per cube");
  check_superadditive(t, tau);
  auto m = cube_masses(t, sigma);
  std::vector<double> ratio(t.num_cubes());
  for (std::size_t c = 0; c < ratio.size(); ++c) ratio[c] = safe_div(tau[c], m[c]);
  Lemma24Quantities out;
  out.psi = detail::max_over_ancestors(t, ratio);
  out.psi_norm = lp_norm(out.psi, sigma, s);
  out.stopping_family = build_superadditive_stopping(t, tau, m);
  double acc = 0.0;
  for (auto F : out.stopping_family.cubes)
    if (m[F] > 0.0) acc += std::pow(ratio[F], s) * m[F];
  out.stopping = std::pow(acc, 1.0 / s);
  std::vector<double> w(t.num_cubes());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = m[c] > 0.0 ? std::pow(ratio[c], s) * m[c] : 0.0;
  auto best = best_sparse_family(t, w, m);
  out.exhaustive = std::pow(best.value, 1.0 / s);
  out.exhaustive_family = best.family;
  return out;
}

}  // namespace dyadic
