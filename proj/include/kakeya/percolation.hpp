#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"
#include "kakeya/sticky.hpp"
#include "kakeya/tree.hpp"

namespace kakeya {

// Rooted tree with a retention probability on the edge into each non-root vertex.
class PercTree {
 public:
  PercTree() : parent_{-1}, children_(1), height_{0}, p_{Rational(1)} {}

  int add_child(int parent, const Rational& p = Rational(1, 2)) {
    if (p < 0 || p >= 1) throw ConfigError("edge probability must lie in [0, 1)");
    int v = static_cast<int>(parent_.size());
    parent_.push_back(parent);
    children_.emplace_back();
    children_[parent].push_back(v);
    height_.push_back(height_[parent] + 1);
    p_.push_back(p);
    return v;
  }

  std::size_t size() const { return parent_.size(); }
  std::size_t edges() const { return parent_.size() - 1; }
  int parent(int v) const { return parent_[v]; }
  int height(int v) const { return height_[v]; }
  const std::vector<int>& children(int v) const { return children_[v]; }
  const Rational& p(int v) const { return p_[v]; }
  void set_p(int v, const Rational& p) { p_[v] = p; }

  int max_height() const {
    int h = 0;
    for (int x : height_) h = std::max(h, x);
    return h;
  }

  // Vertex counts per height 0..max_height.
  std::vector<std::uint64_t> level_counts() const {
    std::vector<std::uint64_t> n(max_height() + 1, 0);
    for (int x : height_) ++n[x];
    return n;
  }

  // True when every childless vertex sits at the maximal height.
  bool leaves_level() const {
    int H = max_height();
    for (std::size_t v = 0; v < size(); ++v)
      if (children_[v].empty() && height_[v] != H) return false;
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> height_;
  std::vector<Rational> p_;
};

inline PercTree full_tree(int branching, int height) {
  PercTree t;
  std::vector<int> frontier{0};
  for (int k = 0; k < height; ++k) {
    std::vector<int> next;
    for (int v : frontier)
      for (int i = 0; i < branching; ++i) next.push_back(t.add_child(v));
    frontier.swap(next);
  }
  return t;
}

inline PercTree single_ray(int height) { return full_tree(1, height); }

// Prefix closure T_N(E) of a set of leaves of a LeafTree.
inline PercTree tree_from_leaves(const LeafTree& lt, std::vector<std::uint64_t> leaves) {
  std::sort(leaves.begin(), leaves.end());
  leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
  PercTree t;
  if (leaves.empty()) return t;
  std::vector<std::pair<std::uint64_t, int>> level{{0, 0}};
  for (int k = 1; k <= lt.depth(); ++k) {
    std::vector<std::pair<std::uint64_t, int>> next;
    std::size_t j = 0;
    for (auto leaf : leaves) {
      std::uint64_t pre = lt.node(leaf, k).prefix;
      if (!next.empty() && next.back().first == pre) continue;
      std::uint64_t par = pre / lt.base();
      while (level[j].first != par) ++j;
      next.emplace_back(pre, t.add_child(level[j].second));
    }
    level.swap(next);
  }
  return t;
}

// R_e from the general formula 1/R_e = (1/(1-p_e)) prod_{e' <= e} p_{e'}, the
// product running over the path from the root down to and including e.
inline Rational edge_resistance(const PercTree& t, int v) {
  if (v <= 0) throw ConfigError("the root has no edge");
  Rational prod = 1;
  for (int u = v; u > 0; u = t.parent(u)) prod *= t.p(u);
  if (prod == 0) throw DomainError("edge below a closed edge has infinite resistance");
  return (1 - t.p(v)) / prod;
}

// Series-parallel reduction with leaves tied to the negative node.
template <class Num, class EdgeR>
Num resistance_generic(const PercTree& t, EdgeR edge_r) {
  if (t.size() < 2) throw ConfigError("resistance of an empty tree");
  std::vector<Num> R(t.size(), Num(0));
  for (int v = static_cast<int>(t.size()) - 1; v >= 0; --v) {
    if (t.children(v).empty()) continue;
    Num g = 0;
    for (int c : t.children(v)) g += Num(1) / (edge_r(c) + R[c]);
    R[v] = Num(1) / g;
  }
  return R[0];
}

inline Rational resistance(const PercTree& t) {
  return resistance_generic<Rational>(t, [&](int v) { return edge_resistance(t, v); });
}

// p = 1/2 fast path: an edge into height h carries 2^{h-1}.
inline double resistance_d(const PercTree& t) {
  return resistance_generic<double>(t, [&](int v) { return std::ldexp(1.0, t.height(v) - 1); });
}

// Level shorting: sum_k 2^{k-1} / N_k. Requires all leaves at a common height.
inline Rational shorted_resistance(const PercTree& t) {
  if (!t.leaves_level()) throw ConfigError("level shorting needs every leaf at the maximal height");
  auto n = t.level_counts();
  Rational s = 0;
  for (std::size_t k = 1; k < n.size(); ++k) {
    Rational term(BigInt(1) << (k - 1), BigInt(static_cast<unsigned long>(n[k])));
    term.canonicalize();
    s += term;
  }
  return s;
}

inline double shorted_resistance_d(const PercTree& t) {
  auto n = t.level_counts();
  double s = 0;
  for (std::size_t k = 1; k < n.size(); ++k) s += std::ldexp(1.0, static_cast<int>(k) - 1) / n[k];
  return s;
}

// P(w) = 1 - prod_c (1 - p_c P(c)), P = 1 on childless vertices.
inline Rational survival_exact(const PercTree& t) {
  if (t.size() > 1'000'000) throw ResourceError("tree too large for exact survival");
  std::vector<Rational> P(t.size());
  for (int v = static_cast<int>(t.size()) - 1; v >= 0; --v) {
    if (t.children(v).empty()) {
      P[v] = 1;
      continue;
    }
    Rational q = 1;
    for (int c : t.children(v)) q *= 1 - t.p(c) * P[c];
    P[v] = 1 - q;
  }
  return P[0];
}

inline double survival_d(const PercTree& t) {
  std::vector<double> P(t.size());
  for (int v = static_cast<int>(t.size()) - 1; v >= 0; --v) {
    if (t.children(v).empty()) {
      P[v] = 1;
      continue;
    }
    double q = 1;
    for (int c : t.children(v)) q *= 1 - to_double(t.p(c)) * P[c];
    P[v] = 1 - q;
  }
  return P[0];
}

struct McEstimate {
  double mean = 0;
  double lo = 0, hi = 0;  // 99% Wilson interval
  std::uint64_t samples = 0;
};

inline McEstimate wilson_interval(std::uint64_t hits, std::uint64_t n, double z = 2.5758293035489) {
  McEstimate e;
  e.samples = n;
  if (n == 0) return e;
  double ph = static_cast<double>(hits) / n, z2 = z * z;
  double den = 1 + z2 / n;
  double mid = (ph + z2 / (2 * n)) / den;
  double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4.0 * n * n)) / den;
  e.mean = ph;
  e.lo = std::max(0.0, mid - half);
  e.hi = std::min(1.0, mid + half);
  return e;
}

inline McEstimate survival_mc(const PercTree& t, std::uint64_t seed, std::uint64_t samples) {
  if (samples < 1) throw ConfigError("samples must be >= 1");
  std::vector<double> p(t.size());
  for (std::size_t v = 1; v < t.size(); ++v) p[v] = to_double(t.p(static_cast<int>(v)));
  std::vector<char> alive(t.size());
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::uint64_t key = mix64(seed ^ mix64(s));
    for (int v = static_cast<int>(t.size()) - 1; v >= 0; --v) {
      if (t.children(v).empty()) {
        alive[v] = 1;
        continue;
      }
      alive[v] = 0;
      for (int c : t.children(v))
        if (alive[c] && unit_double(mix64(key + static_cast<std::uint64_t>(c))) < p[c]) {
          alive[v] = 1;
          break;
        }
    }
    hits += alive[0];
  }
  return wilson_interval(hits, samples);
}

inline std::pair<Rational, Rational> lyons_bounds(const Rational& R) {
  if (R < 0) throw ConfigError("resistance must be non-negative");
  return {1 / (1 + R), 2 / (1 + R)};
}

}  // namespace kakeya
