#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kakeya/cantor.hpp"
#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"

namespace kakeya {

// A vertex of the full B-ary tree: the digit path from the root.
struct Vertex {
  std::uint64_t base = 2;
  std::vector<std::uint32_t> digits;

  int height() const { return static_cast<int>(digits.size()); }
  Vertex prefix(int k) const { return {base, {digits.begin(), digits.begin() + k}}; }
  Vertex parent() const { return prefix(height() - 1); }
  Vertex child(std::uint32_t i) const {
    Vertex v = *this;
    v.digits.push_back(i);
    return v;
  }
  auto operator<=>(const Vertex&) const = default;

  std::string str() const {
    std::string s = "<";
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(digits[i]);
    }
    return s + ">";
  }
};

inline bool is_ancestor_or_equal(const Vertex& u, const Vertex& v) {
  return u.base == v.base && u.height() <= v.height() &&
         std::equal(u.digits.begin(), u.digits.end(), v.digits.begin());
}

// Longest common prefix. Total: for an ancestor/descendant pair it is the ancestor.
inline Vertex yca(const Vertex& u, const Vertex& v) {
  if (u.base != v.base) throw ConfigError("yca of vertices from different trees");
  int k = 0;
  while (k < u.height() && k < v.height() && u.digits[k] == v.digits[k]) ++k;
  return u.prefix(k);
}

// Vertex of a height-N B-ary tree stored as (height, integer prefix).
struct Node {
  int height = 0;
  std::uint64_t prefix = 0;
  auto operator<=>(const Node&) const = default;
};

// The full B-ary tree truncated at depth N; leaves are integers in [0, B^N).
class LeafTree {
 public:
  LeafTree(std::uint64_t base, int depth) : base_(base), depth_(depth) {
    if (base < 2) throw ConfigError("tree base must be >= 2");
    for (int k = 0; k <= depth; ++k) pow_.push_back(ipow(base, k));
  }

  std::uint64_t base() const { return base_; }
  int depth() const { return depth_; }
  std::uint64_t leaf_count() const { return pow_[depth_]; }
  std::uint64_t pow(int k) const { return pow_[k]; }

  Node node(std::uint64_t leaf, int k) const { return {k, leaf / pow_[depth_ - k]}; }

  int yca_height(std::uint64_t a, std::uint64_t b) const {
    int k = 0;
    while (k < depth_ && a / pow_[depth_ - k - 1] == b / pow_[depth_ - k - 1]) ++k;
    return k;
  }
  Node yca(std::uint64_t a, std::uint64_t b) const { return node(a, yca_height(a, b)); }

  Node yca(Node a, Node b) const {
    if (a.height > b.height) std::swap(a, b);
    b = {a.height, b.prefix / pow_[b.height - a.height]};
    int k = a.height;
    while (a.prefix != b.prefix) {
      a.prefix /= base_;
      b.prefix /= base_;
      --k;
    }
    return {k, a.prefix};
  }

  // a is an ancestor of b or equal to it.
  bool contains(Node a, Node b) const {
    return a.height <= b.height && b.prefix / pow_[b.height - a.height] == a.prefix;
  }
  bool contains_leaf(Node a, std::uint64_t leaf) const { return contains(a, {depth_, leaf}); }

  std::uint32_t digit(std::uint64_t leaf, int k) const {
    return static_cast<std::uint32_t>((leaf / pow_[depth_ - k]) % base_);
  }

  Vertex vertex(Node n) const {
    Vertex v{base_, std::vector<std::uint32_t>(n.height)};
    std::uint64_t p = n.prefix;
    for (int k = n.height - 1; k >= 0; --k) {
      v.digits[k] = static_cast<std::uint32_t>(p % base_);
      p /= base_;
    }
    return v;
  }

  Node node_of(const Vertex& v) const {
    if (v.base != base_ || v.height() > depth_) throw ConfigError("vertex not in this tree");
    std::uint64_t p = 0;
    for (auto x : v.digits) p = p * base_ + x;
    return {v.height(), p};
  }

 private:
  std::uint64_t base_;
  int depth_;
  std::vector<std::uint64_t> pow_;
};

// Lexicographic packing of per-coordinate digits (first coordinate most significant).
inline std::uint32_t pack_digit(const std::vector<std::uint32_t>& per_coord, std::uint32_t M) {
  std::uint32_t D = 0;
  for (auto i : per_coord) D = D * M + i;
  return D;
}

inline std::vector<std::uint32_t> unpack_digit(std::uint32_t D, std::uint32_t M, int d) {
  std::vector<std::uint32_t> out(d);
  for (int l = d - 1; l >= 0; --l) {
    out[l] = D % M;
    D /= M;
  }
  return out;
}

// Integer cube coordinates j (cube = prod [j_l, j_l+1) M^-N) of a leaf of T([0,1)^d; M).
inline void leaf_coords(std::uint64_t leaf, int M, int N, int d, std::uint64_t* j) {
  for (int l = 0; l < d; ++l) j[l] = 0;
  const std::uint64_t B = ipow(M, d);
  std::uint64_t scale = 1;
  for (int k = N; k >= 1; --k) {
    std::uint64_t D = leaf % B;
    leaf /= B;
    for (int l = d - 1; l >= 0; --l) {
      j[l] += (D % M) * scale;
      D /= M;
    }
    scale *= M;
  }
}

inline std::uint64_t leaf_from_coords(const std::uint64_t* j, int M, int N, int d) {
  std::uint64_t leaf = 0;
  for (int k = 1; k <= N; ++k) {
    std::uint64_t D = 0;
    const std::uint64_t div = ipow(M, N - k);
    for (int l = 0; l < d; ++l) D = D * M + (j[l] / div) % M;
    leaf = leaf * ipow(M, d) + D;
  }
  return leaf;
}

// Vertex at level k of T([0,1)^d; M) whose cube contains x.
inline Vertex encode_cube(const std::vector<Rational>& x, int k, int M) {
  const int d = static_cast<int>(x.size());
  for (const auto& c : x)
    if (c < 0 || c >= 1) throw DomainError("point outside [0,1)^d");
  Vertex v{ipow(M, d), {}};
  std::vector<Rational> r = x;
  for (int level = 0; level < k; ++level) {
    std::vector<std::uint32_t> digits(d);
    for (int l = 0; l < d; ++l) {
      r[l] *= M;
      auto f = floor_to_int(r[l]);
      digits[l] = static_cast<std::uint32_t>(f);
      r[l] -= static_cast<long>(f);
    }
    v.digits.push_back(pack_digit(digits, M));
  }
  return v;
}

struct Cube {
  std::vector<Rational> lower;
  Rational side;
};

inline Cube decode_cube(const Vertex& v, int M, int d) {
  if (v.base != ipow(M, d)) throw ConfigError("vertex base does not match M^d");
  Cube c{std::vector<Rational>(d, Rational(0)), Rational(1)};
  for (auto D : v.digits) {
    auto per = unpack_digit(D, M, d);
    c.side /= M;
    for (int l = 0; l < d; ++l) c.lower[l] += c.side * per[l];
  }
  return c;
}

// psi between T_N(C_M; M) and the full binary tree of height N.
class Isomorphism {
 public:
  explicit Isomorphism(const CantorSpec& spec) : spec_(spec) {}

  Vertex forward(const Vertex& cantor) const {
    if (cantor.base != static_cast<std::uint64_t>(spec_.M()))
      throw ConfigError("vertex base differs from the Cantor base");
    std::vector<int> digits(cantor.digits.begin(), cantor.digits.end());
    auto b = spec_.binary_of(digits);
    if (b < 0) throw ConfigError("vertex " + cantor.str() + " is not in T_N(C_M; M)");
    Vertex out{2, std::vector<std::uint32_t>(cantor.height())};
    for (int k = cantor.height() - 1; k >= 0; --k) {
      out.digits[k] = static_cast<std::uint32_t>(b & 1);
      b >>= 1;
    }
    return out;
  }

  Vertex backward(const Vertex& binary) const {
    if (binary.base != 2 || binary.height() > spec_.N())
      throw ConfigError("vertex " + binary.str() + " is not in the binary tree of height N");
    std::uint64_t b = 0;
    for (auto x : binary.digits) b = b * 2 + x;
    auto digits = spec_.cantor_digits(binary.height(), b);
    return {static_cast<std::uint64_t>(spec_.M()), {digits.begin(), digits.end()}};
  }

  const CantorSpec& spec() const { return spec_; }

 private:
  CantorSpec spec_;
};

inline Isomorphism build_psi(const CantorSpec& spec) { return Isomorphism(spec); }

// Left endpoint of the level-N interval reached by descending through first children.
inline Rational phi_map(const CantorSpec& spec, const Vertex& w) {
  std::vector<int> digits(w.digits.begin(), w.digits.end());
  auto b = spec.binary_of(digits);
  if (b < 0 || w.base != static_cast<std::uint64_t>(spec.M()))
    throw ConfigError("vertex " + w.str() + " is not selected");
  std::uint64_t leaf = static_cast<std::uint64_t>(b) << (spec.N() - w.height());
  return from_u64(spec.left_numerator(spec.N(), leaf), ipow(spec.M(), spec.N()));
}

// Number of level-k M-adic cubes (lattice M^-k Z^d) meeting a finite point set.
inline std::size_t count_level_vertices(const std::vector<std::vector<Rational>>& points, int k, int M) {
  std::set<std::vector<std::int64_t>> cells;
  const Rational scale = from_u64(ipow(M, k));
  for (const auto& p : points) {
    std::vector<std::int64_t> key;
    for (const auto& x : p) key.push_back(floor_to_int(x * scale));
    cells.insert(std::move(key));
  }
  return cells.size();
}

// A vertex map given on finitely many vertices is sticky when it preserves
// heights and every ancestor relation among the listed vertices.
inline bool is_sticky(const std::vector<std::pair<Vertex, Vertex>>& map) {
  for (const auto& [u, fu] : map)
    if (u.height() != fu.height()) return false;
  for (const auto& [u, fu] : map)
    for (const auto& [v, fv] : map)
      if (is_ancestor_or_equal(u, v) && !is_ancestor_or_equal(fu, fv)) return false;
  return true;
}

// Leaf map t -> f(t) between two trees of the same height extends to a sticky map
// on the generated subtree iff h(D(f t, f t')) >= h(D(t, t')) for all pairs.
inline bool leaf_map_is_sticky(const LeafTree& from, const LeafTree& to,
                               const std::vector<std::pair<std::uint64_t, std::uint64_t>>& map) {
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = i + 1; j < map.size(); ++j)
      if (to.yca_height(map[i].second, map[j].second) < from.yca_height(map[i].first, map[j].first))
        return false;
  return true;
}

}  // namespace kakeya
