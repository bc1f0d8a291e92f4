#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"

namespace kakeya {

// Picks the two retained child digits of a basic interval from its digit prefix.
struct Selector {
  std::string name;
  std::function<std::pair<int, int>(const std::vector<int>& prefix)> rule;
};

inline Selector middle_selector(int M) {
  return {"middle", [M](const std::vector<int>&) { return std::pair{0, M - 1}; }};
}

// Prefix dependent choice; for M = 3 it degenerates to {0, 2}.
inline Selector varying_selector(int M) {
  return {"varying", [M](const std::vector<int>& prefix) {
            int s = 0;
            for (int x : prefix) s += x;
            s %= (M - 2);
            return std::pair{s, s + 2};
          }};
}

inline std::string digits_to_string(const std::vector<int>& digits) {
  std::string s = "<";
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(digits[i]);
  }
  return s + ">";
}

struct BasicInterval {
  int M = 3;
  std::vector<int> digits;
  std::uint64_t binary = 0;  // address of this interval in the binary tree
  std::uint64_t index = 0;   // i with interval [i M^-k, (i+1) M^-k)

  int level() const { return static_cast<int>(digits.size()); }
  Rational left() const { return from_u64(index, ipow(M, level())); }
  Rational right() const { return from_u64(index + 1, ipow(M, level())); }
};

// Base M, depth N and a selector. The selector is evaluated once per interval
// at construction and the pair (sorted ascending) is cached by binary address.
class CantorSpec {
 public:
  CantorSpec(int M, int N, Selector sel) : M_(M), N_(N), sel_(std::move(sel)) {
    if (M < 3) throw ConfigError("base M must be >= 3");
    if (N < 1) throw ConfigError("depth N must be >= 1");
    if (N > 24) throw ResourceError("depth N > 24 not supported");
    (void)ipow(M, N);
    choice_.resize((std::size_t{1} << N) - 1);
    std::vector<int> prefix;
    fill(prefix, 0);
  }

  int M() const { return M_; }
  int N() const { return N_; }
  const std::string& selector_name() const { return sel_.name; }

  // Child digits (N1 < N2) of the level-k interval with binary address b.
  std::array<int, 2> children(int k, std::uint64_t b) const {
    return choice_[(std::size_t{1} << k) - 1 + b];
  }

  std::vector<int> cantor_digits(int k, std::uint64_t b) const {
    std::vector<int> out(k);
    std::uint64_t prefix = 0;
    for (int j = 0; j < k; ++j) {
      int bit = static_cast<int>((b >> (k - 1 - j)) & 1u);
      out[j] = children(j, prefix)[bit];
      prefix = prefix * 2 + bit;
    }
    return out;
  }

  // Numerator i of the left endpoint i / M^k of the interval with address b.
  std::uint64_t left_numerator(int k, std::uint64_t b) const {
    std::uint64_t num = 0, prefix = 0;
    for (int j = 0; j < k; ++j) {
      int bit = static_cast<int>((b >> (k - 1 - j)) & 1u);
      num = num * M_ + children(j, prefix)[bit];
      prefix = prefix * 2 + bit;
    }
    return num;
  }

  // Binary address of a Cantor digit sequence; -1 when the sequence is not selected.
  std::int64_t binary_of(const std::vector<int>& digits) const {
    if (static_cast<int>(digits.size()) > N_) return -1;
    std::uint64_t b = 0;
    for (std::size_t j = 0; j < digits.size(); ++j) {
      auto c = children(static_cast<int>(j), b);
      if (digits[j] == c[0])
        b = b * 2;
      else if (digits[j] == c[1])
        b = b * 2 + 1;
      else
        return -1;
    }
    return static_cast<std::int64_t>(b);
  }

 private:
  void fill(std::vector<int>& prefix, std::uint64_t b) {
    int k = static_cast<int>(prefix.size());
    if (k == N_) return;
    auto [a, c] = sel_.rule(prefix);
    if (a > c) std::swap(a, c);
    if (a < 0 || c >= M_)
      throw ConfigError("selector digit out of range at interval " + digits_to_string(prefix));
    if (a == c)
      throw ConfigError("selector returned a repeated digit at interval " + digits_to_string(prefix));
    if (c - a < 2)
      throw ConfigError("selector chose adjacent children at interval " + digits_to_string(prefix));
    choice_[(std::size_t{1} << k) - 1 + b] = {a, c};
    prefix.push_back(a);
    fill(prefix, 2 * b);
    prefix.back() = c;
    fill(prefix, 2 * b + 1);
    prefix.pop_back();
  }

  int M_, N_;
  Selector sel_;
  std::vector<std::array<int, 2>> choice_;
};

// Intervals of level k ordered by binary address, which is also left-to-right order.
inline std::vector<BasicInterval> build_level(const CantorSpec& spec, int k) {
  if (k < 0 || k > spec.N()) throw ConfigError("level out of range");
  std::vector<BasicInterval> out;
  out.reserve(std::size_t{1} << k);
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << k); ++b) {
    BasicInterval iv;
    iv.M = spec.M();
    iv.digits = spec.cantor_digits(k, b);
    iv.binary = b;
    iv.index = spec.left_numerator(k, b);
    out.push_back(std::move(iv));
  }
  return out;
}

// Left endpoints of the level-N intervals, indexed by binary address.
inline std::vector<Rational> representatives(const CantorSpec& spec) {
  std::vector<Rational> out;
  std::uint64_t den = ipow(spec.M(), spec.N());
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << spec.N()); ++b)
    out.push_back(from_u64(spec.left_numerator(spec.N(), b), den));
  return out;
}

// gamma(t) = (1, p_1(t), ..., p_d(t)) with rational polynomial coordinates.
class DirectionCurve {
 public:
  DirectionCurve(std::string name, std::vector<std::vector<Rational>> coeffs)
      : name_(std::move(name)), coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw ConfigError("curve needs at least one coordinate");
    for (const auto& row : coeffs_) {
      std::vector<double> r;
      for (const auto& q : row) r.push_back(to_double(q));
      dcoeffs_.push_back(std::move(r));
    }
  }

  // (1, a t + b, ..., a t + b)
  static DirectionCurve affine(int d, const Rational& a = 1, const Rational& b = 0) {
    return DirectionCurve("affine", std::vector<std::vector<Rational>>(d, {b, a}));
  }

  // (1, t, t^2, ..., t^d)
  static DirectionCurve moment(int d) {
    std::vector<std::vector<Rational>> c(d);
    for (int l = 0; l < d; ++l) {
      c[l].assign(l + 2, Rational(0));
      c[l][l + 1] = 1;
    }
    return DirectionCurve("moment", std::move(c));
  }

  int d() const { return static_cast<int>(coeffs_.size()); }
  const std::string& name() const { return name_; }
  const std::vector<std::vector<Rational>>& coefficients() const { return coeffs_; }

  // Last d coordinates; the first coordinate is identically 1.
  std::vector<Rational> eval_exact(const Rational& t) const {
    std::vector<Rational> out;
    for (const auto& row : coeffs_) {
      Rational acc = 0;
      for (auto it = row.rbegin(); it != row.rend(); ++it) acc = acc * t + *it;
      out.push_back(acc);
    }
    return out;
  }

  void eval(double t, double* out) const {
    for (std::size_t l = 0; l < dcoeffs_.size(); ++l) {
      double acc = 0;
      for (auto it = dcoeffs_[l].rbegin(); it != dcoeffs_[l].rend(); ++it) acc = acc * t + *it;
      out[l] = acc;
    }
  }

 private:
  std::string name_;
  std::vector<std::vector<Rational>> coeffs_;
  std::vector<std::vector<double>> dcoeffs_;
};

struct LipschitzEstimate {
  double c = 0;  // lower constant
  double C = 0;  // upper constant
};

// Extreme difference quotients over all pairs drawn from params plus a uniform grid.
inline LipschitzEstimate estimate_bilipschitz(const DirectionCurve& curve,
                                              const std::vector<double>& params,
                                              int grid = 4096) {
  std::vector<double> ts = params;
  for (int i = 0; i < grid; ++i) ts.push_back((i + 0.5) / grid);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  const int d = curve.d();
  std::vector<double> img(ts.size() * d);
  for (std::size_t i = 0; i < ts.size(); ++i) curve.eval(ts[i], &img[i * d]);
  LipschitzEstimate est{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      double s = 0;
      for (int l = 0; l < d; ++l) {
        double x = img[j * d + l] - img[i * d + l];
        s += x * x;
      }
      double q = std::sqrt(s) / (ts[j] - ts[i]);
      est.c = std::min(est.c, q);
      est.C = std::max(est.C, q);
    }
  }
  return est;
}

struct Direction {
  std::uint64_t binary = 0;  // psi-address of the Cantor leaf
  std::uint64_t numerator = 0;  // parameter = numerator / M^N
  Rational param;
  std::vector<Rational> slope;  // last d coordinates of gamma(param)
  std::vector<double> slope_d;
};

struct DirectionSet {
  CantorSpec spec;
  DirectionCurve curve;
  std::vector<Direction> points;  // indexed by binary address
  LipschitzEstimate lip;

  int d() const { return curve.d(); }
  int N() const { return spec.N(); }
  int M() const { return spec.M(); }
};

inline DirectionSet direction_set(const CantorSpec& spec, const DirectionCurve& curve) {
  DirectionSet ds{spec, curve, {}, {}};
  const std::uint64_t den = ipow(spec.M(), spec.N());
  std::vector<double> params;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << spec.N()); ++b) {
    Direction dir;
    dir.binary = b;
    dir.numerator = spec.left_numerator(spec.N(), b);
    dir.param = from_u64(dir.numerator, den);
    dir.slope = curve.eval_exact(dir.param);
    for (const auto& q : dir.slope) {
      if (q < -1 || q > 1) throw DomainError("curve leaves {1}x[-1,1]^d at t=" + to_string(dir.param));
      dir.slope_d.push_back(to_double(q));
    }
    params.push_back(to_double(dir.param));
    ds.points.push_back(std::move(dir));
  }
  std::vector<double> probe(curve.d());
  for (int i = 0; i <= 4096; ++i) {
    curve.eval(i / 4096.0, probe.data());
    for (double x : probe)
      if (x < -1 || x > 1) throw DomainError("curve leaves {1}x[-1,1]^d on the sampling grid");
  }
  ds.lip = estimate_bilipschitz(curve, params);
  if (!(ds.lip.c > 0)) throw DomainError("curve is not injective on the sampled grid (c = 0)");
  return ds;
}

}  // namespace kakeya
