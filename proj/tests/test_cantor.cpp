#include <gtest/gtest.h>

#include "kakeya/cantor.hpp"

using namespace kakeya;

namespace {

Rational q(long a, long b = 1) { return make_rational(a, b); }

}  // namespace

TEST(BuildLevel, MiddleThirdsLevelOne) {
  CantorSpec spec(3, 2, middle_selector(3));
  auto lv = build_level(spec, 1);
  ASSERT_EQ(lv.size(), 2u);
  EXPECT_EQ(lv[0].left(), q(0));
  EXPECT_EQ(lv[0].right(), q(1, 3));
  EXPECT_EQ(lv[1].left(), q(2, 3));
  EXPECT_EQ(lv[1].right(), q(1));
}

TEST(BuildLevel, MiddleThirdsLevelTwo) {
  CantorSpec spec(3, 2, middle_selector(3));
  auto lv = build_level(spec, 2);
  ASSERT_EQ(lv.size(), 4u);
  std::vector<std::string> digits;
  for (const auto& iv : lv) digits.push_back(digits_to_string(iv.digits));
  EXPECT_EQ(lv[0].left(), q(0));
  EXPECT_EQ(lv[1].left(), q(2, 9));
  EXPECT_EQ(lv[2].left(), q(2, 3));
  EXPECT_EQ(lv[3].left(), q(8, 9));
  EXPECT_EQ(lv[3].right(), q(1));
  for (const auto& iv : lv) EXPECT_EQ(iv.right() - iv.left(), q(1, 9));
}

TEST(BuildLevel, RootLevel) {
  CantorSpec spec(5, 3, middle_selector(5));
  auto lv = build_level(spec, 0);
  ASSERT_EQ(lv.size(), 1u);
  EXPECT_EQ(lv[0].left(), q(0));
  EXPECT_EQ(lv[0].right(), q(1));
}

TEST(BuildLevel, CountsParentsAndGaps) {
  for (int M : {3, 4, 5, 7}) {
    CantorSpec spec(M, 5, M > 3 ? varying_selector(M) : middle_selector(M));
    for (int k = 1; k <= 5; ++k) {
      auto lv = build_level(spec, k);
      auto up = build_level(spec, k - 1);
      ASSERT_EQ(lv.size(), std::size_t{1} << k);
      for (std::size_t i = 0; i < lv.size(); ++i) {
        const auto& parent = up[i / 2];
        EXPECT_TRUE(std::equal(parent.digits.begin(), parent.digits.end(), lv[i].digits.begin()));
        EXPECT_GE(lv[i].left(), parent.left());
        EXPECT_LE(lv[i].right(), parent.right());
      }
      Rational side = rpow(q(1, M), k);
      for (std::size_t i = 0; i + 1 < lv.size(); ++i) EXPECT_GE(lv[i + 1].left() - lv[i].right(), side);
    }
  }
}

TEST(BuildLevel, AdjacentSelectorNamesInterval) {
  Selector bad{"bad", [](const std::vector<int>& p) {
                 return p.size() == 1 && p[0] == 2 ? std::pair{0, 1} : std::pair{0, 2};
               }};
  try {
    CantorSpec spec(3, 3, bad);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  Selector repeated{"rep", [](const std::vector<int>&) { return std::pair{1, 1}; }};
  EXPECT_THROW(CantorSpec(3, 2, repeated), ConfigError);
  Selector out{"out", [](const std::vector<int>&) { return std::pair{0, 3}; }};
  EXPECT_THROW(CantorSpec(3, 2, out), ConfigError);
  EXPECT_THROW(CantorSpec(2, 2, middle_selector(3)), ConfigError);
  EXPECT_THROW(build_level(CantorSpec(3, 2, middle_selector(3)), 3), ConfigError);
}

TEST(Representatives, MiddleThirds) {
  auto r2 = representatives(CantorSpec(3, 2, middle_selector(3)));
  EXPECT_EQ(r2, (std::vector<Rational>{q(0), q(2, 9), q(2, 3), q(8, 9)}));
  auto r1 = representatives(CantorSpec(3, 1, middle_selector(3)));
  EXPECT_EQ(r1, (std::vector<Rational>{q(0), q(2, 3)}));
}

TEST(Representatives, SiblingSeparation) {
  CantorSpec spec(5, 3, varying_selector(5));
  auto reps = representatives(spec);
  ASSERT_EQ(reps.size(), 8u);
  auto lv = build_level(spec, 3);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    EXPECT_EQ(reps[i], lv[i].left());
    for (std::size_t j = 0; j < reps.size(); ++j) {
      if (i == j) continue;
      // first level where the binary addresses differ
      int r = 1;
      while (((i >> (3 - r)) == (j >> (3 - r)))) ++r;
      Rational diff = reps[i] > reps[j] ? reps[i] - reps[j] : reps[j] - reps[i];
      EXPECT_GE(diff, rpow(q(1, 5), r));
    }
  }
}

TEST(DirectionSet, AffineLevelOne) {
  auto ds = direction_set(CantorSpec(3, 1, middle_selector(3)), DirectionCurve::affine(1));
  ASSERT_EQ(ds.points.size(), 2u);
  EXPECT_EQ(ds.points[0].slope, std::vector<Rational>{q(0)});
  EXPECT_EQ(ds.points[1].slope, std::vector<Rational>{q(2, 3)});
}

TEST(DirectionSet, MomentCurve) {
  auto ds = direction_set(CantorSpec(3, 2, middle_selector(3)), DirectionCurve::moment(2));
  std::vector<std::vector<Rational>> want{{q(0), q(0)}, {q(2, 9), q(4, 81)}, {q(2, 3), q(4, 9)}, {q(8, 9), q(64, 81)}};
  ASSERT_EQ(ds.points.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(ds.points[i].slope, want[i]);
}

TEST(DirectionSet, AffineIsIsometry) {
  auto ds = direction_set(CantorSpec(3, 4, middle_selector(3)), DirectionCurve::affine(1));
  EXPECT_NEAR(ds.lip.c, 1.0, 1e-12);
  EXPECT_NEAR(ds.lip.C, 1.0, 1e-12);
  for (const auto& a : ds.points)
    for (const auto& b : ds.points) EXPECT_EQ(abs(a.slope[0] - b.slope[0]), abs(a.param - b.param));
}

TEST(DirectionSet, BiLipschitzSandwich) {
  for (int N = 1; N <= 8; ++N) {
    auto ds = direction_set(CantorSpec(3, N, middle_selector(3)), DirectionCurve::moment(2));
    for (std::size_t i = 0; i < ds.points.size(); ++i)
      for (std::size_t j = i + 1; j < ds.points.size(); ++j) {
        double dp = std::abs(to_double(ds.points[i].param - ds.points[j].param));
        double dx = std::hypot(ds.points[i].slope_d[0] - ds.points[j].slope_d[0],
                               ds.points[i].slope_d[1] - ds.points[j].slope_d[1]);
        EXPECT_GE(dx, ds.lip.c * dp * (1 - 1e-12));
        EXPECT_LE(dx, ds.lip.C * dp * (1 + 1e-12));
      }
  }
}

TEST(DirectionSet, Errors) {
  CantorSpec spec(3, 2, middle_selector(3));
  EXPECT_THROW(direction_set(spec, DirectionCurve::affine(1, q(3), q(0))), DomainError);
  EXPECT_THROW(direction_set(spec, DirectionCurve::affine(1, q(0), q(1, 2))), DomainError);
}
