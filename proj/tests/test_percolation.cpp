#include <gtest/gtest.h>

#include <random>

#include "kakeya/percolation.hpp"

using namespace kakeya;

namespace {

// Survival by listing every open/closed pattern of the edges.
Rational survival_bruteforce(const PercTree& t) {
  const std::size_t E = t.edges();
  Rational total = 0;
  std::vector<char> alive(t.size());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << E); ++mask) {
    Rational w = 1;
    for (std::size_t v = 1; v < t.size(); ++v) w *= (mask >> (v - 1)) & 1 ? t.p(v) : 1 - t.p(v);
    for (int v = static_cast<int>(t.size()) - 1; v >= 0; --v) {
      if (t.children(v).empty()) {
        alive[v] = 1;
        continue;
      }
      alive[v] = 0;
      for (int c : t.children(v)) alive[v] |= alive[c] && ((mask >> (c - 1)) & 1);
    }
    if (alive[0]) total += w;
  }
  return total;
}

// Random subtree of the full M-ary tree of the given height in which every
// internal vertex keeps at least one child.
PercTree random_subtree(std::mt19937_64& rng, int M, int height, double keep) {
  PercTree t;
  std::vector<int> frontier{0};
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < height; ++k) {
    std::vector<int> next;
    for (int v : frontier) {
      int forced = static_cast<int>(rng() % M);
      for (int i = 0; i < M; ++i)
        if (i == forced || U(rng) < keep) next.push_back(t.add_child(v));
    }
    frontier.swap(next);
  }
  return t;
}

}  // namespace

TEST(Resistance, Examples) {
  EXPECT_EQ(resistance(full_tree(2, 1)), make_rational(1, 2));
  EXPECT_EQ(resistance(full_tree(2, 2)), Rational(1));
  EXPECT_EQ(resistance(single_ray(3)), Rational(7));
  EXPECT_THROW(resistance(PercTree{}), ConfigError);
}

TEST(Resistance, GeneralFormulaMatchesHalfCase) {
  std::mt19937_64 rng(1);
  for (int it = 0; it < 50; ++it) {
    auto t = random_subtree(rng, 3, 1 + static_cast<int>(rng() % 6), 0.5);
    for (std::size_t v = 1; v < t.size(); ++v)
      EXPECT_EQ(edge_resistance(t, static_cast<int>(v)), rpow(Rational(2), t.height(static_cast<int>(v)) - 1));
    EXPECT_NEAR(to_double(resistance(t)), resistance_d(t), 1e-12 * resistance_d(t));
  }
}

TEST(Shorted, Examples) {
  for (int N = 1; N <= 8; ++N) EXPECT_EQ(shorted_resistance(full_tree(2, N)), make_rational(N, 2));
  EXPECT_EQ(shorted_resistance(full_tree(2, 2)), resistance(full_tree(2, 2)));
  EXPECT_EQ(shorted_resistance(single_ray(3)), Rational(7));
  PercTree uneven = full_tree(2, 1);
  uneven.add_child(1);
  EXPECT_THROW(shorted_resistance(uneven), ConfigError);
}

TEST(Survival, Examples) {
  EXPECT_EQ(survival_exact(full_tree(2, 1)), make_rational(3, 4));
  EXPECT_EQ(survival_exact(full_tree(2, 2)), make_rational(39, 64));
  for (int k = 1; k <= 10; ++k) EXPECT_EQ(survival_exact(single_ray(k)), half_pow(k));
  PercTree t = full_tree(2, 2);
  for (int c : t.children(0)) t.set_p(c, Rational(0));
  EXPECT_EQ(survival_exact(t), Rational(0));
  EXPECT_EQ(survival_mc(t, 1, 1000).mean, 0.0);
  EXPECT_THROW(t.add_child(0, Rational(1)), ConfigError);
}

TEST(Survival, RecursionMatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int it = 0; it < 40; ++it) {
    auto t = random_subtree(rng, 3, 1 + static_cast<int>(rng() % 4), 0.3);
    if (t.edges() > 20) continue;
    for (std::size_t v = 1; v < t.size(); ++v)
      t.set_p(static_cast<int>(v), make_rational(1 + static_cast<long>(rng() % 7), 8));
    EXPECT_EQ(survival_exact(t), survival_bruteforce(t));
  }
}

TEST(Survival, MonteCarloFullBinary) {
  auto est = survival_mc(full_tree(2, 2), 99, 1'000'000);
  EXPECT_NEAR(est.mean, 39.0 / 64, 0.002);
  EXPECT_LE(est.lo, 39.0 / 64);
  EXPECT_GE(est.hi, 39.0 / 64);
}

TEST(Survival, MonteCarloWithinInterval) {
  std::mt19937_64 rng(3);
  int outside = 0;
  for (int it = 0; it < 50; ++it) {
    auto t = random_subtree(rng, 3, 1 + static_cast<int>(rng() % 6), 0.5);
    double exact = to_double(survival_exact(t));
    auto est = survival_mc(t, 1000 + it, 20000);
    outside += exact < est.lo || exact > est.hi;
  }
  // 99% intervals: more than 3 misses in 50 would be very unlikely
  EXPECT_LE(outside, 3);
}

TEST(Survival, Monotone) {
  std::mt19937_64 rng(4);
  for (int it = 0; it < 30; ++it) {
    auto t = random_subtree(rng, 2, 5, 0.6);
    Rational before = survival_exact(t);
    // grow a fresh branch under a random leaf-level vertex path: survival cannot drop
    PercTree g = t;
    int v = 0;
    while (!g.children(v).empty()) v = g.children(v)[rng() % g.children(v).size()];
    int p = g.parent(v);
    int w = g.add_child(p);
    while (g.height(w) < g.max_height()) w = g.add_child(w);
    EXPECT_GE(survival_exact(g), before);
  }
}

TEST(Lyons, Examples) {
  auto [lo, hi] = lyons_bounds(Rational(1));
  EXPECT_EQ(lo, make_rational(1, 2));
  EXPECT_EQ(hi, Rational(1));
  auto [lo0, hi0] = lyons_bounds(Rational(0));
  EXPECT_EQ(lo0, Rational(1));
  EXPECT_EQ(hi0, Rational(2));
  EXPECT_THROW(lyons_bounds(Rational(-1)), ConfigError);
}

TEST(Lyons, RandomSubtrees) {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 200; ++it) {
    int M = 2 + static_cast<int>(rng() % 2);
    auto t = random_subtree(rng, M, 1 + static_cast<int>(rng() % 8), 0.35);
    Rational R = resistance(t), P = survival_exact(t);
    auto [lo, hi] = lyons_bounds(R);
    EXPECT_LE(lo, P);
    EXPECT_LE(P, hi);
    EXPECT_LE(shorted_resistance(t), R);
  }
}

TEST(TreeFromLeaves, PrefixClosure) {
  LeafTree lt(3, 3);
  auto t = tree_from_leaves(lt, {0, 1, 26, 13});
  EXPECT_EQ(t.level_counts(), (std::vector<std::uint64_t>{1, 3, 3, 4}));
  EXPECT_TRUE(t.leaves_level());
  auto ray = tree_from_leaves(lt, {5});
  EXPECT_EQ(resistance(ray), Rational(7));
  EXPECT_EQ(survival_exact(ray), half_pow(3));
}
