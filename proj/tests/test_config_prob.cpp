#include <gtest/gtest.h>

#include <map>
#include <random>

#include "kakeya/config_prob.hpp"
#include "kakeya/harness.hpp"

using namespace kakeya;

TEST(CondProbPair, Examples) {
  LeafTree t(3, 2);
  EXPECT_EQ(cond_prob_pair(t, 0, 8, 0, 3), make_rational(1, 4));
  EXPECT_EQ(cond_prob_pair(t, 0, 1, 0, 1), make_rational(1, 2));
  EXPECT_EQ(cond_prob_pair(t, 0, 1, 0, 2), Rational(0));
  EXPECT_THROW(cond_prob_pair(t, 3, 3, 0, 0), ConfigError);
}

TEST(CondProbPair, ExhaustiveAgainstEnumeration) {
  LeafTree t(3, 2);
  for (std::uint64_t a = 0; a < 9; ++a)
    for (std::uint64_t b = 0; b < 9; ++b) {
      if (a == b) continue;
      for (std::uint64_t x = 0; x < 4; ++x)
        for (std::uint64_t y = 0; y < 4; ++y) {
          auto e = enumerate_conditional(t, {a, b}, {x, y}, {true, false});
          ASSERT_TRUE(e.has_value());
          EXPECT_EQ(*e, cond_prob_pair(t, a, b, x, y));
        }
    }
}

TEST(CondProbGeneral, EmptyConditioning) {
  LeafTree t(3, 3);
  std::vector<LeafSlope> B{{0, 5}, {26, 2}};
  EXPECT_EQ(cond_prob_general(t, {}, B), half_pow(6));
  EXPECT_EQ(cond_prob_general(t, {}, B), enumerate_realizations(t, {0, 26}, {5, 2}));
  EXPECT_THROW(cond_prob_general(t, {{0, 1}}, {{0, 1}}), ConfigError);
}

TEST(CondProbGeneral, Normalization) {
  // for each conditioning A, summing over all admissible B slopes gives 1
  LeafTree t(3, 2);
  for (std::uint64_t a = 0; a < 9; ++a)
    for (std::uint64_t b = 0; b < 9; ++b)
      for (std::uint64_t c = b + 1; c < 9; ++c) {
        if (a == b || a == c) continue;
        for (std::uint64_t x = 0; x < 4; ++x) {
          Rational s = 0;
          for (std::uint64_t y = 0; y < 4; ++y)
            for (std::uint64_t z = 0; z < 4; ++z) s += cond_prob_general(t, {{a, x}}, {{b, y}, {c, z}});
          EXPECT_EQ(s, Rational(1));
        }
      }
}

TEST(Classify4, Examples) {
  LeafTree t(3, 3);
  // u = <0>, u' = <2>: disjoint
  auto c = classify4(t, {0, 3, 18, 21});
  EXPECT_EQ(c.type, 1);
  EXPECT_EQ(c.label, 'a');
  EXPECT_EQ(c.exponent, 6 - 1 - 1);
  // u = u' = root, t1 and t1' share <0,0>
  c = classify4(t, {0, 9, 1, 18});
  EXPECT_EQ(c.type, 2);
  EXPECT_EQ(c.hu, 0);
  EXPECT_THROW(classify4(t, {0, 0, 1, 2}), ConfigError);
}

TEST(Classify4, PartitionAndEdgeCount) {
  // every 4-tuple at N=3 gets one class, and k(A,B) equals the class exponent
  LeafTree t(3, 3);
  std::map<std::string, int> freq;
  for (std::uint64_t a = 0; a < 27; ++a)
    for (std::uint64_t b = a + 1; b < 27; ++b)
      for (std::uint64_t c = 0; c < 27; ++c)
        for (std::uint64_t d = c + 1; d < 27; ++d) {
          if (c == a || c == b || d == a || d == b) continue;
          std::array<std::uint64_t, 4> tup{a, b, c, d};
          auto cls = classify4(t, tup);
          ++freq[cls.name()];
          std::vector<std::uint64_t> A, B;
          for (int i : cls.A) A.push_back(tup[i]);
          for (int i : cls.B) B.push_back(tup[i]);
          ASSERT_EQ(A.size() + B.size(), 4u);
          EXPECT_EQ(edges_not_covered(t, A, B), cls.exponent) << cls.name();
          if (cls.type == 2) {
            EXPECT_EQ(cls.hu, cls.hup);
          }
        }
  for (const char* name : {"4pt-type1-a", "4pt-type1-c", "4pt-type1-d", "4pt-type1-e", "4pt-type1-f",
                           "4pt-type2-a", "4pt-type2-b", "4pt-type2-c"})
    EXPECT_GT(freq[name], 0) << name;
  // class b puts four leaves under distinct children of one vertex: impossible in a 3-ary tree
  EXPECT_EQ(freq["4pt-type1-b"], 0);
}

TEST(Classify4, FourChildrenNeedBaseFour) {
  LeafTree t(9, 2);
  auto c = classify4(t, {0, 9, 18, 27});
  EXPECT_EQ(c.name(), "4pt-type1-b");
  EXPECT_EQ(c.exponent, 4);
  auto o = oracle_check(t, {0, 9, 18, 27}, {0, 3, 1, 2});
  EXPECT_TRUE(o.match);
}

TEST(Classify3, Examples) {
  LeafTree t(3, 3);
  auto c = classify3(t, {0, 13, 1});
  EXPECT_EQ(c.type, 1);
  EXPECT_EQ(c.label, 'a');
  c = classify3(t, {0, 9, 18});
  EXPECT_EQ(c.type, 1);
  EXPECT_EQ(c.label, 'b');
  c = classify3(t, {0, 9, 10});
  EXPECT_EQ(c.type, 2);
  EXPECT_EQ(c.exponent, 6 - 0 - 2);
  EXPECT_THROW(classify3(t, {0, 0, 1}), ConfigError);
}

TEST(OracleCheck, RandomTuplesAtN3) {
  LeafTree t(3, 3);
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int it = 0; it < 300; ++it) {
    std::vector<std::uint64_t> leaves;
    while (leaves.size() < 4) {
      std::uint64_t x = rng() % 27;
      if (std::find(leaves.begin(), leaves.end(), x) == leaves.end()) leaves.push_back(x);
    }
    std::vector<std::uint64_t> alphas;
    for (int i = 0; i < 4; ++i) alphas.push_back(rng() % 8);
    auto r = oracle_check(t, leaves, alphas);
    EXPECT_TRUE(r.match) << r.cls.name();
    checked += r.enumerated.has_value();
  }
  EXPECT_GT(checked, 0);
}

TEST(OracleAllSlopes, ThreePointBranches) {
  LeafTree t(3, 3);
  for (auto leaves : std::vector<std::vector<std::uint64_t>>{{0, 13, 1}, {0, 9, 18}, {0, 9, 10}}) {
    auto o = oracle_all_slopes(t, leaves);
    EXPECT_EQ(o.mismatches, 0u) << o.cls.name();
    EXPECT_GT(o.choices, 0u);
  }
}
