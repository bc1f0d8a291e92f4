#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"
#include "kakeya/sticky.hpp"
#include "kakeya/tree.hpp"

namespace kakeya {

struct ConfigClass {
  int arity = 4;
  int type = 1;
  char label = 'a';
  bool swapped = false;  // pairs exchanged so that h(u) <= h(u')
  // Positions in the normalized tuple ((t1,t2),(t1',t2')) -> 0,1,2,3.
  int i1 = 0, i2 = 1, j1 = 0, j2 = 1;
  int hu = 0, hup = 0, hu1 = 0, hu2 = 0;
  int exponent = 0;
  // Conditioning set A and target set B as positions in the caller's tuple.
  std::vector<int> A, B;

  std::string name() const {
    return std::to_string(arity) + "pt-type" + std::to_string(type) + "-" + std::string(1, label);
  }
};

// Four-point tuple ((t1,t2),(t1',t2')) with four distinct leaves.
inline ConfigClass classify4(const LeafTree& tree, const std::array<std::uint64_t, 4>& in) {
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (in[a] == in[b]) throw ConfigError("four-point tuple needs distinct leaves");
  ConfigClass c;
  c.arity = 4;
  std::array<int, 4> pos{0, 1, 2, 3};
  Node u = tree.yca(in[0], in[1]), up = tree.yca(in[2], in[3]);
  if (u.height > up.height) {
    std::swap(u, up);
    pos = {2, 3, 0, 1};
    c.swapped = true;
  }
  const std::uint64_t a[2] = {in[pos[0]], in[pos[1]]}, b[2] = {in[pos[2]], in[pos[3]]};
  Node X[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) X[i][j] = tree.yca(a[i], b[j]);
  c.hu = u.height;
  c.hup = up.height;
  auto finish = [&](int type, char label, int exponent, bool deep_pair_given) {
    c.type = type;
    c.label = label;
    c.exponent = exponent;
    if (deep_pair_given) {
      c.A = {pos[c.i2], pos[2 + c.j2]};
      c.B = {pos[c.i1], pos[2 + c.j1]};
    } else {
      c.A = {pos[c.i1], pos[2 + c.j1]};
      c.B = {pos[c.i2], pos[2 + c.j2]};
    }
    return c;
  };
  const int N = tree.depth();
  const int e1 = 2 * N - u.height - up.height;
  if (!tree.contains(u, up)) return finish(1, 'a', e1, false);
  if (u == up) {
    bool all = true;
    for (auto& row : X)
      for (auto& x : row) all = all && x == u;
    if (all) return finish(1, 'b', e1, false);
    // type 2: the deepest cross pair is conditioned on
    int bi = 0, bj = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (X[i][j].height > X[bi][bj].height) bi = i, bj = j;
    c.i2 = bi;
    c.j2 = bj;
    c.i1 = 1 - bi;
    c.j1 = 1 - bj;
    Node u2 = X[c.i2][c.j2], u1 = X[c.i1][c.j1];
    c.hu1 = u1.height;
    c.hu2 = u2.height;
    char label = u1 == u ? 'a' : (u1.height < u2.height ? 'b' : 'c');
    return finish(2, label, 2 * N - u.height - u1.height, true);
  }
  // u' strictly below u: locate where t1, t2 leave the path from u to u'.
  int g[2];
  for (int i = 0; i < 2; ++i) g[i] = tree.yca(tree.node(a[i], N), up).height;
  if (g[0] == u.height && g[1] == u.height) return finish(1, 'c', e1, false);
  c.i1 = g[0] > u.height ? 0 : 1;
  c.i2 = 1 - c.i1;
  if (g[c.i1] < up.height) return finish(1, 'd', e1, false);
  if (X[c.i1][0] == up && X[c.i1][1] == up) return finish(1, 'e', e1, false);
  c.j1 = X[c.i1][0].height > up.height ? 0 : 1;
  c.j2 = 1 - c.j1;
  return finish(1, 'f', e1, false);
}

// Three-point tuple ((t1,t2),(t1,t2')).
inline ConfigClass classify3(const LeafTree& tree, const std::array<std::uint64_t, 3>& in) {
  if (in[0] == in[1] || in[0] == in[2] || in[1] == in[2])
    throw ConfigError("three-point tuple needs distinct leaves");
  ConfigClass c;
  c.arity = 3;
  int p2 = 1, p2p = 2;
  Node u = tree.yca(in[0], in[1]), up = tree.yca(in[0], in[2]);
  if (u.height > up.height) {
    std::swap(u, up);
    std::swap(p2, p2p);
    c.swapped = true;
  }
  const int N = tree.depth();
  c.hu = u.height;
  c.hup = up.height;
  c.A = {0};
  c.B = {p2, p2p};
  if (!(u == up)) {
    c.type = 1;
    c.label = 'a';
    c.exponent = 2 * N - u.height - up.height;
    return c;
  }
  Node u2 = tree.yca(in[p2], in[p2p]);
  c.hu2 = u2.height;
  if (u2 == u) {
    c.type = 1;
    c.label = 'b';
    c.exponent = 2 * N - 2 * u.height;
  } else {
    c.type = 2;
    c.label = 'c';
    c.exponent = 2 * N - u.height - u2.height;
  }
  return c;
}

// P(sigma(t2) = alpha2 | sigma(t1) = alpha1), alphas given by binary address.
inline Rational cond_prob_pair(const LeafTree& tree, std::uint64_t t1, std::uint64_t t2, std::uint64_t a1,
                               std::uint64_t a2) {
  if (t1 == t2) throw ConfigError("cond_prob_pair needs distinct leaves");
  const int N = tree.depth();
  int hu = tree.yca_height(t1, t2);
  if (binary_common_height(a1, a2, N) < hu) return Rational(0);
  return half_pow(static_cast<unsigned>(N - hu));
}

// k(A, B): edges on the rays of B that are not on the rays of A.
inline int edges_not_covered(const LeafTree& tree, const std::vector<std::uint64_t>& A,
                             const std::vector<std::uint64_t>& B) {
  auto ea = ray_edges(tree, A), eb = ray_edges(tree, B);
  int k = 0;
  for (const auto& e : eb)
    if (!std::binary_search(ea.begin(), ea.end(), e)) ++k;
  return k;
}

inline Rational cond_prob_general(const LeafTree& tree, const std::vector<LeafSlope>& A,
                                  const std::vector<LeafSlope>& B) {
  std::vector<std::uint64_t> la, lb;
  for (const auto& x : A) la.push_back(x.first);
  for (const auto& x : B) {
    if (std::find(la.begin(), la.end(), x.first) != la.end()) throw ConfigError("A and B overlap");
    lb.push_back(x.first);
  }
  std::vector<LeafSlope> all = A;
  all.insert(all.end(), B.begin(), B.end());
  if (!sticky_admissible(tree, all)) return Rational(0);
  return half_pow(static_cast<unsigned>(edges_not_covered(tree, la, lb)));
}

struct OracleResult {
  ConfigClass cls;
  Rational closed;
  std::optional<Rational> enumerated;  // empty when the conditioning event is null
  bool match = true;
};

// Closed form from the classification versus brute-force enumeration, for a
// tuple of 3 or 4 leaves with slope addresses.
inline OracleResult oracle_check(const LeafTree& tree, const std::vector<std::uint64_t>& leaves,
                                 const std::vector<std::uint64_t>& alphas) {
  OracleResult r;
  if (leaves.size() == 4)
    r.cls = classify4(tree, {leaves[0], leaves[1], leaves[2], leaves[3]});
  else if (leaves.size() == 3)
    r.cls = classify3(tree, {leaves[0], leaves[1], leaves[2]});
  else
    throw ConfigError("oracle_check takes 3 or 4 leaves");
  std::vector<LeafSlope> tuple;
  for (std::size_t i = 0; i < leaves.size(); ++i) tuple.emplace_back(leaves[i], alphas[i]);
  r.closed = sticky_admissible(tree, tuple) ? half_pow(static_cast<unsigned>(r.cls.exponent)) : Rational(0);
  std::vector<bool> given(leaves.size(), false);
  for (int i : r.cls.A) given[i] = true;
  r.enumerated = enumerate_conditional(tree, leaves, alphas, given);
  r.match = !r.enumerated || *r.enumerated == r.closed;
  return r;
}

}  // namespace kakeya
