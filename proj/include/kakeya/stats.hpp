#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace kakeya::stats {

inline constexpr double kZ99 = 2.5758293035489004;

struct Summary {
  double mean = 0, var = 0, halfwidth = 0;  // halfwidth: 99% normal interval for the mean
  std::size_t n = 0;
};

inline Summary summarize(const std::vector<double>& x) {
  Summary s;
  s.n = x.size();
  if (x.empty()) return s;
  double m = 0;
  for (double v : x) m += v;
  m /= x.size();
  double q = 0;
  for (double v : x) q += (v - m) * (v - m);
  s.mean = m;
  s.var = x.size() > 1 ? q / (x.size() - 1) : 0;
  s.halfwidth = kZ99 * std::sqrt(s.var / x.size());
  return s;
}

// Largest v with #{x >= v} >= (1-level) n; level = 0.25 gives the value exceeded
// with empirical probability at least 3/4.
inline double lower_quantile(std::vector<double> x, double level) {
  if (x.empty()) return 0;
  std::sort(x.begin(), x.end());
  auto i = static_cast<std::size_t>(std::floor(level * x.size()));
  return x[std::min(i, x.size() - 1)];
}

// Upper-tail p-value of a chi-square statistic.
inline double chi2_pvalue(double stat, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Pearson statistic for observed counts against equal expected frequencies.
inline double chi2_uniform(const std::vector<std::uint64_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  double e = total / counts.size(), s = 0;
  for (auto c : counts) s += (c - e) * (c - e) / e;
  return s;
}

struct LinearFit {
  double slope = 0, intercept = 0, slope_se = 0;
};

inline LinearFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      sse += r * r;
    }
    f.slope_se = std::sqrt(sse / (n - 2) / sxx);
  }
  return f;
}

inline double max_over_min(const std::vector<double>& v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

}  // namespace kakeya::stats
