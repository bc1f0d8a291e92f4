#include <gtest/gtest.h>

#include <random>

#include "kakeya/tree.hpp"

using namespace kakeya;

namespace {

Vertex V(std::uint64_t base, std::vector<std::uint32_t> d) { return {base, std::move(d)}; }

}  // namespace

TEST(Yca, Examples) {
  EXPECT_EQ(yca(V(3, {0, 1}), V(3, {0, 2})), V(3, {0}));
  EXPECT_EQ(yca(V(3, {1, 0}), V(3, {2, 0})), V(3, {}));
  EXPECT_EQ(yca(V(3, {1}), V(3, {1, 2, 0})), V(3, {1}));
  EXPECT_THROW(yca(V(3, {1}), V(2, {1})), ConfigError);
}

TEST(Yca, Properties) {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 2000; ++it) {
    auto rv = [&] {
      Vertex v{3, {}};
      int h = static_cast<int>(rng() % 6);
      for (int k = 0; k < h; ++k) v.digits.push_back(static_cast<std::uint32_t>(rng() % 2));
      return v;
    };
    Vertex a = rv(), b = rv();
    EXPECT_EQ(yca(a, b), yca(b, a));
    EXPECT_EQ(yca(a, a), a);
    EXPECT_EQ(yca(yca(a, b), b), yca(a, b));
    EXPECT_LE(yca(a, b).height(), std::min(a.height(), b.height()));
  }
}

TEST(LeafTree, NodeYcaMatchesVertexYca) {
  LeafTree t(9, 4);
  std::mt19937_64 rng(3);
  for (int it = 0; it < 5000; ++it) {
    std::uint64_t a = rng() % t.leaf_count(), b = rng() % t.leaf_count();
    Vertex va = t.vertex({4, a}), vb = t.vertex({4, b});
    EXPECT_EQ(t.vertex(t.yca(a, b)), yca(va, vb));
    EXPECT_EQ(t.node_of(va), (Node{4, a}));
    int k = static_cast<int>(rng() % 5);
    EXPECT_TRUE(t.contains_leaf(t.node(a, k), a));
  }
}

TEST(EncodeCube, Examples) {
  EXPECT_EQ(encode_cube({make_rational(2, 9)}, 2, 3), V(3, {0, 2}));
  auto v = encode_cube({make_rational(1, 3), Rational(0)}, 1, 3);
  EXPECT_EQ(v.base, 9u);
  EXPECT_EQ(v.digits, std::vector<std::uint32_t>{pack_digit({1, 0}, 3)});
  EXPECT_EQ(pack_digit({1, 0}, 3), 3u);
  EXPECT_THROW(encode_cube({Rational(1)}, 1, 3), DomainError);
  EXPECT_THROW(encode_cube({make_rational(-1, 5)}, 1, 3), DomainError);
}

TEST(EncodeCube, RoundTrip) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 10000; ++it) {
    int d = 1 + static_cast<int>(rng() % 3), k = static_cast<int>(rng() % 6);
    std::vector<Rational> x;
    for (int l = 0; l < d; ++l) x.push_back(from_u64(rng() % 1000003, 1000003));
    auto c = decode_cube(encode_cube(x, k, 3), 3, d);
    EXPECT_EQ(c.side, rpow(make_rational(1, 3), k));
    for (int l = 0; l < d; ++l) {
      EXPECT_LE(c.lower[l], x[l]);
      EXPECT_LT(x[l], c.lower[l] + c.side);
    }
  }
}

TEST(LeafCoords, MatchesLexicographicPacking) {
  const int M = 3, N = 3, d = 2;
  LeafTree t(ipow(M, d), N);
  for (std::uint64_t leaf = 0; leaf < t.leaf_count(); ++leaf) {
    std::uint64_t j[2];
    leaf_coords(leaf, M, N, d, j);
    EXPECT_EQ(leaf_from_coords(j, M, N, d), leaf);
    auto c = decode_cube(t.vertex({N, leaf}), M, d);
    for (int l = 0; l < d; ++l) EXPECT_EQ(c.lower[l], from_u64(j[l], 27));
  }
}

TEST(Psi, Examples) {
  CantorSpec spec(3, 4, middle_selector(3));
  auto psi = build_psi(spec);
  EXPECT_EQ(psi.forward(V(3, {0, 2})), V(2, {0, 1}));
  EXPECT_EQ(psi.forward(V(3, {})), V(2, {}));
  EXPECT_THROW(psi.forward(V(3, {1})), ConfigError);
  EXPECT_THROW(psi.backward(V(2, {0, 0, 0, 0, 0})), ConfigError);
}

TEST(Psi, BijectiveAndSticky) {
  for (int M : {3, 5}) {
    CantorSpec spec(M, 10, M == 3 ? middle_selector(3) : varying_selector(M));
    auto psi = build_psi(spec);
    LeafTree bin(2, 10);
    std::set<Vertex> images;
    for (std::uint64_t b = 0; b < bin.leaf_count(); ++b) {
      Vertex w = bin.vertex({10, b});
      Vertex c = psi.backward(w);
      EXPECT_EQ(psi.forward(c), w);
      images.insert(c);
    }
    EXPECT_EQ(images.size(), bin.leaf_count());
    std::vector<std::pair<Vertex, Vertex>> fwd, bwd;
    for (int k = 0; k <= 4; ++k)
      for (std::uint64_t b = 0; b < bin.pow(k); ++b) {
        Vertex w = LeafTree(2, 4).vertex({k, b});
        fwd.emplace_back(psi.backward(w), w);
        bwd.emplace_back(w, psi.backward(w));
      }
    EXPECT_TRUE(is_sticky(fwd));
    EXPECT_TRUE(is_sticky(bwd));
  }
}

TEST(IsSticky, DetectsBrokenLineage) {
  std::vector<std::pair<Vertex, Vertex>> m{{V(3, {0}), V(2, {0})}, {V(3, {0, 2}), V(2, {1, 1})}};
  EXPECT_FALSE(is_sticky(m));
  m[1].second = V(2, {0, 1});
  EXPECT_TRUE(is_sticky(m));
  m.push_back({V(3, {1}), V(2, {0, 0})});
  EXPECT_FALSE(is_sticky(m));
}

TEST(Phi, Examples) {
  CantorSpec spec(3, 3, middle_selector(3));
  EXPECT_EQ(phi_map(spec, V(3, {2})), make_rational(2, 3));
  auto reps = representatives(spec);
  auto psi = build_psi(spec);
  LeafTree bin(2, 3);
  for (std::uint64_t b = 0; b < 8; ++b) EXPECT_EQ(phi_map(spec, psi.backward(bin.vertex({3, b}))), reps[b]);
  EXPECT_THROW(phi_map(spec, V(3, {1})), ConfigError);
}

TEST(Phi, ContainedInVertex) {
  for (int N = 1; N <= 8; ++N) {
    CantorSpec spec(4, N, varying_selector(4));
    auto psi = build_psi(spec);
    for (int k = 0; k <= N; ++k) {
      LeafTree bin(2, k);
      for (std::uint64_t b = 0; b < bin.leaf_count(); ++b) {
        Vertex w = psi.backward(bin.vertex({k, b}));
        auto cube = decode_cube(w, 4, 1);
        Rational x = phi_map(spec, w);
        EXPECT_LE(cube.lower[0], x);
        EXPECT_LT(x, cube.lower[0] + cube.side);
      }
    }
  }
}

TEST(CountLevelVertices, Representatives) {
  CantorSpec spec(3, 6, middle_selector(3));
  std::vector<std::vector<Rational>> pts;
  for (const auto& r : representatives(spec)) pts.push_back({r});
  for (int k = 0; k <= 6; ++k) EXPECT_EQ(count_level_vertices(pts, k, 3), std::size_t{1} << k);
}

TEST(LeafMapIsSticky, PairwiseTest) {
  LeafTree from(3, 2), to(2, 2);
  EXPECT_TRUE(leaf_map_is_sticky(from, to, {{0, 0}, {1, 1}, {3, 2}}));
  EXPECT_FALSE(leaf_map_is_sticky(from, to, {{0, 0}, {1, 2}}));
}
