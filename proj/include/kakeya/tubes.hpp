#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kakeya/cantor.hpp"
#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"
#include "kakeya/sticky.hpp"
#include "kakeya/tree.hpp"

namespace kakeya {

// min(d^-d, 1/(2+4 sqrt d)). The second term is rounded down to a multiple of
// 1e-6 when sqrt d is irrational so that all geometry stays rational.
inline Rational kappa_for_dim(int d) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
  Rational a(1, 1);
  for (int i = 0; i < d; ++i) a /= d;
  int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
  Rational b;
  if (s * s == d) {
    b = Rational(1, 2 + 4 * s);
  } else {
    double x = 1.0 / (2.0 + 4.0 * std::sqrt(static_cast<double>(d)));
    b = Rational(static_cast<long>(std::floor(x * 1e6)), 1000000);
  }
  b.canonicalize();
  return a < b ? a : b;
}

// ceil(max(d^d / c, 2 sqrt(d) / c)); the 1e-9 slack absorbs rounding in the estimate of c.
inline int c0_for(int d, double c) {
  double v = std::max(std::pow(d, d) / c, 2.0 * std::sqrt(static_cast<double>(d)) / c);
  return static_cast<int>(std::ceil(v - 1e-9));
}

struct TubeParams {
  int M = 3, N = 1, d = 1;
  Rational kappa;
  double kappa_d = 0;
  int C0 = 1;
  double c = 1, C = 1;  // curve Lipschitz constants
  std::uint64_t side = 3;  // M^N
  double length_factor = 10.0;  // tubes run over 0 <= x1 <= length_factor * C0

  double w() const { return kappa_d / static_cast<double>(side); }
  double length() const { return length_factor * C0; }
  std::uint64_t leaves() const { return ipow(side, d); }
};

inline TubeParams tube_params(const DirectionSet& ds) {
  TubeParams p;
  p.M = ds.M();
  p.N = ds.N();
  p.d = ds.d();
  p.kappa = kappa_for_dim(p.d);
  p.kappa_d = to_double(p.kappa);
  p.c = ds.lip.c;
  p.C = ds.lip.C;
  p.C0 = c0_for(p.d, p.c);
  p.side = ipow(p.M, p.N);
  return p;
}

// Centres of all root cubes Q_t, leaf-major with d coordinates each.
inline std::vector<double> leaf_centers(const TubeParams& p, std::uint64_t guard = 10'000'000) {
  const std::uint64_t n = p.leaves();
  if (n > guard) throw ResourceError("leaf count " + std::to_string(n) + " exceeds guard");
  std::vector<double> out(n * p.d);
  std::vector<std::uint64_t> j(p.d);
  for (std::uint64_t t = 0; t < n; ++t) {
    leaf_coords(t, p.M, p.N, p.d, j.data());
    for (int l = 0; l < p.d; ++l) out[t * p.d + l] = (static_cast<double>(j[l]) + 0.5) / p.side;
  }
  return out;
}

// Tubes P_{t, sigma(t)} for every leaf t.
struct TubeFamily {
  int d = 1;
  double w = 0;
  double x1_max = 0;  // tubes live on 0 <= x1 <= x1_max
  std::vector<double> center;
  std::vector<double> slope;
  std::size_t size() const { return d ? center.size() / d : 0; }
};

inline TubeFamily build_family(const TubeParams& p, const DirectionSet& ds, const std::vector<double>& centers,
                               const std::vector<std::uint32_t>& addr) {
  TubeFamily f{p.d, p.w(), p.length(), centers, std::vector<double>(centers.size())};
  for (std::size_t t = 0; t < addr.size(); ++t)
    for (int l = 0; l < p.d; ++l) f.slope[t * p.d + l] = ds.points[addr[t]].slope_d[l];
  return f;
}

// Per-coordinate test of |dc + x1 dv| <= 2 kappa sqrt(d) M^-N for some x1 in [lo, hi].
inline bool intersection_necessary(const TubeParams& p, const double* c1, const double* v1, const double* c2,
                                   const double* v2, double lo, double hi) {
  const double r = 2.0 * p.kappa_d * std::sqrt(static_cast<double>(p.d)) / p.side;
  for (int l = 0; l < p.d; ++l) {
    double a = c2[l] - c1[l], b = v2[l] - v1[l];
    if (b == 0) {
      if (std::abs(a) > r) return false;
      continue;
    }
    double x0 = (-r - a) / b, x1 = (r - a) / b;
    if (x0 > x1) std::swap(x0, x1);
    lo = std::max(lo, x0);
    hi = std::min(hi, x1);
    if (lo > hi) return false;
  }
  return true;
}

// Integral over [lo, hi] of prod_l max(0, w - |dc_l + x dv_l|): the exact volume of
// the intersection of two tubes with cube cross-sections of side w.
inline double pair_measure(double w, int d, const double* dc, const double* dv, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (int l = 0; l < d; ++l) {
    if (dv[l] == 0) {
      if (std::abs(dc[l]) >= w) return 0.0;
      continue;
    }
    for (double s : {-w, 0.0, w}) {
      double x = (s - dc[l]) / dv[l];
      if (x > lo && x < hi) cuts.push_back(x);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0;
  std::vector<double> poly, next;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double x0 = cuts[i], len = cuts[i + 1] - x0;
    if (len <= 0) continue;
    const double xm = x0 + 0.5 * len;
    poly.assign(1, 1.0);
    bool zero = false;
    for (int l = 0; l < d && !zero; ++l) {
      double vm = dc[l] + xm * dv[l];
      if (std::abs(vm) >= w) {
        zero = true;
        break;
      }
      double s = vm < 0 ? -1.0 : 1.0;
      // factor in y = x - x0: (w - s (dc + dv x0)) - s dv y
      double f0 = w - s * (dc[l] + dv[l] * x0), f1 = -s * dv[l];
      next.assign(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k] += poly[k] * f0;
        next[k + 1] += poly[k] * f1;
      }
      poly.swap(next);
    }
    if (zero) continue;
    double acc = 0, lp = len;
    for (std::size_t k = 0; k < poly.size(); ++k, lp *= len) acc += poly[k] * lp / static_cast<double>(k + 1);
    total += acc;
  }
  return total;
}

inline double pair_measure(const TubeFamily& f, std::size_t t1, std::size_t t2, double lo, double hi) {
  std::array<double, 16> dc{}, dv{};
  for (int l = 0; l < f.d; ++l) {
    dc[l] = f.center[t2 * f.d + l] - f.center[t1 * f.d + l];
    dv[l] = f.slope[t2 * f.d + l] - f.slope[t1 * f.d + l];
  }
  return pair_measure(f.w, f.d, dc.data(), dv.data(), std::max(lo, 0.0), std::min(hi, f.x1_max));
}

// Area of a union of axis-aligned squares of side w with lower corners (xs, ys).
inline double union_area_squares(const std::vector<double>& xs, const std::vector<double>& ys, double w) {
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;
  std::vector<double> yc;
  yc.reserve(2 * n);
  for (double y : ys) {
    yc.push_back(y);
    yc.push_back(y + w);
  }
  std::sort(yc.begin(), yc.end());
  yc.erase(std::unique(yc.begin(), yc.end()), yc.end());
  const std::size_t m = yc.size() - 1;
  if (m == 0) return 0.0;
  std::vector<int> cover(4 * m, 0);
  std::vector<double> len(4 * m, 0.0);
  std::function<void(std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, int)> update =
      [&](std::size_t node, std::size_t l, std::size_t r, std::size_t ql, std::size_t qr, int delta) {
        if (qr <= l || r <= ql) return;
        if (ql <= l && r <= qr) {
          cover[node] += delta;
        } else {
          std::size_t mid = (l + r) / 2;
          update(2 * node, l, mid, ql, qr, delta);
          update(2 * node + 1, mid, r, ql, qr, delta);
        }
        if (cover[node] > 0)
          len[node] = yc[r] - yc[l];
        else if (r - l == 1)
          len[node] = 0;
        else
          len[node] = len[2 * node] + len[2 * node + 1];
      };
  struct Event {
    double x;
    int delta;
    std::size_t lo, hi;
  };
  std::vector<Event> ev;
  ev.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = std::lower_bound(yc.begin(), yc.end(), ys[i]) - yc.begin();
    std::size_t b = std::lower_bound(yc.begin(), yc.end(), ys[i] + w) - yc.begin();
    ev.push_back({xs[i], +1, a, b});
    ev.push_back({xs[i] + w, -1, a, b});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
  double area = 0, last = ev.front().x;
  for (const auto& e : ev) {
    area += len[1] * (e.x - last);
    last = e.x;
    update(1, 0, m, e.lo, e.hi, e.delta);
  }
  return area;
}

struct AreaEstimate {
  double area = 0;
  double halfwidth = 0;  // 99% Hoeffding half-width, 0 when exact
};

// Monte Carlo volume of a union of cubes of side w (lower corners in pts, d each).
inline AreaEstimate union_area_mc(const std::vector<double>& pts, int d, double w, std::uint64_t seed,
                                  int samples = 4096) {
  const std::size_t n = pts.size() / d;
  if (n == 0) return {};
  std::vector<double> lo(d, 1e300), hi(d, -1e300);
  for (std::size_t i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) {
      lo[l] = std::min(lo[l], pts[i * d + l]);
      hi[l] = std::max(hi[l], pts[i * d + l] + w);
    }
  auto cell_key = [&](const std::vector<std::int64_t>& c) {
    std::uint64_t h = 0;
    for (auto x : c) h = mix64(h ^ static_cast<std::uint64_t>(x));
    return h;
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  std::vector<std::int64_t> c(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (int mask = 0; mask < (1 << d); ++mask) {
      for (int l = 0; l < d; ++l)
        c[l] = static_cast<std::int64_t>(std::floor((pts[i * d + l] + ((mask >> l) & 1) * w) / w));
      auto& bucket = grid[cell_key(c)];
      if (bucket.empty() || bucket.back() != i) bucket.push_back(i);
    }
  }
  double box = 1;
  for (int l = 0; l < d; ++l) box *= hi[l] - lo[l];
  std::vector<double> x(d);
  int hit = 0;
  for (int s = 0; s < samples; ++s) {
    for (int l = 0; l < d; ++l) {
      x[l] = lo[l] + unit_double(mix64(seed + static_cast<std::uint64_t>(s * d + l))) * (hi[l] - lo[l]);
      c[l] = static_cast<std::int64_t>(std::floor(x[l] / w));
    }
    auto it = grid.find(cell_key(c));
    if (it == grid.end()) continue;
    for (auto i : it->second) {
      bool in = true;
      for (int l = 0; l < d && in; ++l) in = x[l] >= pts[i * d + l] && x[l] < pts[i * d + l] + w;
      if (in) {
        ++hit;
        break;
      }
    }
  }
  double eps = std::sqrt(std::log(2.0 / 0.01) / (2.0 * samples));
  return {box * hit / samples, box * eps};
}

// Union length of [pos_i, pos_i + w] for sorted pos.
inline double gap_sum(const double* pos, std::size_t n, double w) {
  double acc[4] = {0, 0, 0, 0};
  std::size_t i = 1;
  for (; i + 3 < n; i += 4)
    for (int k = 0; k < 4; ++k) acc[k] += std::min(w, pos[i + k] - pos[i + k - 1]);
  for (; i < n; ++i) acc[0] += std::min(w, pos[i] - pos[i - 1]);
  return w + (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

struct VolumeResult {
  double volume = 0;
  double halfwidth = 0;
  std::vector<double> per_slab;
};

// S-point midpoint rule on each slab of width M^-N covering [lo, hi]; the union of
// cross-sections is exact for d <= 2 and Monte Carlo for d >= 3.
inline VolumeResult union_volume(const TubeFamily& f, std::uint64_t side, double lo, double hi, int S,
                                 std::uint64_t seed = 0, bool keep_slabs = false) {
  if (S < 1) throw ConfigError("samples per slab must be >= 1");
  VolumeResult res;
  const double h = 1.0 / static_cast<double>(side);
  const std::size_t slabs = static_cast<std::size_t>(std::ceil((hi - lo) / h - 1e-9));
  const std::size_t n = f.size();
  const int d = f.d;

  // d = 1 keeps the intervals sorted across consecutive sections (insertion sort
  // repairs the few crossings) so each section costs O(n).
  std::vector<double> base, vel, pos;
  if (d == 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    double x0 = std::max(lo, 0.0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return f.center[a] + x0 * f.slope[a] < f.center[b] + x0 * f.slope[b];
    });
    for (auto i : order) {
      base.push_back(f.center[i] - 0.5 * f.w);
      vel.push_back(f.slope[i]);
    }
    pos.resize(n);
  }
  std::vector<double> xs, ys, pts;
  for (std::size_t s = 0; s < slabs; ++s) {
    const double a = lo + s * h, b = std::min(hi, a + h), width = b - a;
    double slab_vol = 0;
    for (int j = 0; j < S; ++j) {
      const double x1 = a + (j + 0.5) * width / S;
      if (x1 < 0 || x1 > f.x1_max || n == 0) continue;
      double area = 0;
      if (d == 1) {
        for (std::size_t i = 0; i < n; ++i) {
          const double p = base[i] + x1 * vel[i];
          if (i == 0 || pos[i - 1] <= p) {
            pos[i] = p;
            continue;
          }
          const double bb = base[i], vv = vel[i];
          std::size_t k = i;
          while (k > 0 && pos[k - 1] > p) {
            pos[k] = pos[k - 1];
            base[k] = base[k - 1];
            vel[k] = vel[k - 1];
            --k;
          }
          pos[k] = p;
          base[k] = bb;
          vel[k] = vv;
        }
        area = gap_sum(pos.data(), n, f.w);
      } else if (d == 2) {
        xs.resize(n);
        ys.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          xs[i] = f.center[2 * i] + x1 * f.slope[2 * i] - 0.5 * f.w;
          ys[i] = f.center[2 * i + 1] + x1 * f.slope[2 * i + 1] - 0.5 * f.w;
        }
        area = union_area_squares(xs, ys, f.w);
      } else {
        pts.resize(n * d);
        for (std::size_t i = 0; i < n * d; ++i) pts[i] = f.center[i] + x1 * f.slope[i] - 0.5 * f.w;
        auto est = union_area_mc(pts, d, f.w, mix64(seed ^ (s * S + j)));
        area = est.area;
        res.halfwidth += est.halfwidth * width / S;
      }
      slab_vol += area * width / S;
    }
    res.volume += slab_vol;
    if (keep_slabs) res.per_slab.push_back(slab_vol);
  }
  return res;
}

struct KakeyaMeasures {
  double near = 0, far = 0, ratio = 0;
  double near_halfwidth = 0, far_halfwidth = 0;
};

inline KakeyaMeasures kakeya_measures(const TubeParams& p, const TubeFamily& f, int S, std::uint64_t seed = 0) {
  auto nv = union_volume(f, p.side, 0.0, 1.0, S, seed);
  auto fv = union_volume(f, p.side, p.C0, p.C0 + 1.0, S, seed + 1);
  KakeyaMeasures m{nv.volume, fv.volume, fv.volume > 0 ? nv.volume / fv.volume : 0.0, nv.halfwidth,
                   fv.halfwidth};
  return m;
}

// ---- Poss(p) -------------------------------------------------------------

struct PossEntry {
  std::uint64_t leaf = 0;
  std::vector<std::uint32_t> witnesses;  // binary addresses of slopes v with p in P_{t,v}
  bool operator==(const PossEntry&) const = default;
};

struct PossSet {
  std::vector<PossEntry> entries;  // sorted by leaf
  std::vector<std::uint64_t> leaves() const {
    std::vector<std::uint64_t> out;
    for (const auto& e : entries) out.push_back(e.leaf);
    return out;
  }
  bool operator==(const PossSet&) const = default;
};

inline PossSet collect_poss(std::vector<std::pair<std::uint64_t, std::uint32_t>> hits) {
  std::sort(hits.begin(), hits.end());
  PossSet ps;
  for (const auto& [t, b] : hits) {
    if (ps.entries.empty() || ps.entries.back().leaf != t) ps.entries.push_back({t, {}});
    ps.entries.back().witnesses.push_back(b);
  }
  return ps;
}

inline void check_axial(const TubeParams& p, double x1) {
  if (x1 < 0 || x1 > p.length()) throw DomainError("axial coordinate outside the tube length");
}

// Definition scan: for each slope v locate the cube containing p - p1 v and test
// membership in its shrunk copy. p = (p1, ..., p_{d+1}).
inline PossSet poss_scan(const TubeParams& p, const DirectionSet& ds, const std::vector<Rational>& pt) {
  check_axial(p, to_double(pt[0]));
  const Rational side = from_u64(p.side);
  const Rational half = Rational(1, 2);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> hits;
  std::vector<std::uint64_t> j(p.d);
  for (const auto& dir : ds.points) {
    bool ok = true;
    for (int l = 0; l < p.d && ok; ++l) {
      Rational q = (pt[l + 1] - pt[0] * dir.slope[l]) * side;
      auto f = floor_to_int(q);
      if (f < 0 || static_cast<std::uint64_t>(f) >= p.side) {
        ok = false;
        break;
      }
      Rational off = q - f - half;  // offset from the centre in units of M^-N
      ok = off >= -p.kappa / 2 && off < p.kappa / 2;
      j[l] = static_cast<std::uint64_t>(f);
    }
    if (ok) hits.emplace_back(leaf_from_coords(j.data(), p.M, p.N, p.d), static_cast<std::uint32_t>(dir.binary));
  }
  return collect_poss(std::move(hits));
}

// Floating point variant of poss_scan for bulk experiments.
inline PossSet poss_scan(const TubeParams& p, const DirectionSet& ds, const std::vector<double>& pt) {
  check_axial(p, pt[0]);
  const double side = static_cast<double>(p.side), hk = 0.5 * p.kappa_d;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> hits;
  std::vector<std::uint64_t> j(p.d);
  for (const auto& dir : ds.points) {
    bool ok = true;
    for (int l = 0; l < p.d && ok; ++l) {
      double q = (pt[l + 1] - pt[0] * dir.slope_d[l]) * side;
      double f = std::floor(q);
      if (f < 0 || f >= side) {
        ok = false;
        break;
      }
      double off = q - f - 0.5;
      ok = off >= -hk && off < hk;
      j[l] = static_cast<std::uint64_t>(f);
    }
    if (ok) hits.emplace_back(leaf_from_coords(j.data(), p.M, p.N, p.d), static_cast<std::uint32_t>(dir.binary));
  }
  return collect_poss(std::move(hits));
}

// Affine-copy route: descend T([0,1)^d; M) through the cubes met by
// E(p) = (p - p1 Omega_N) and test the shrunk cube at depth N.
inline PossSet poss_affine(const TubeParams& p, const DirectionSet& ds, const std::vector<Rational>& pt) {
  check_axial(p, to_double(pt[0]));
  struct Pt {
    std::vector<Rational> q;
    std::uint32_t b;
  };
  std::vector<Pt> E;
  for (const auto& dir : ds.points) {
    Pt e{{}, static_cast<std::uint32_t>(dir.binary)};
    bool inside = true;
    for (int l = 0; l < p.d; ++l) {
      e.q.push_back(pt[l + 1] - pt[0] * dir.slope[l]);
      inside = inside && e.q.back() >= 0 && e.q.back() < 1;
    }
    if (inside) E.push_back(std::move(e));
  }
  const std::uint64_t B = ipow(p.M, p.d);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> hits;
  std::function<void(int, std::uint64_t, const std::vector<Rational>&, const Rational&, const std::vector<const Pt*>&)>
      descend = [&](int k, std::uint64_t prefix, const std::vector<Rational>& lower, const Rational& sz,
                    const std::vector<const Pt*>& members) {
        if (k == p.N) {
          for (const Pt* e : members) {
            bool in = true;
            for (int l = 0; l < p.d && in; ++l) {
              Rational c = lower[l] + sz / 2;
              in = e->q[l] >= c - p.kappa * sz / 2 && e->q[l] < c + p.kappa * sz / 2;
            }
            if (in) hits.emplace_back(prefix, e->b);
          }
          return;
        }
        const Rational child = sz / p.M;
        for (std::uint32_t D = 0; D < B; ++D) {
          auto per = unpack_digit(D, p.M, p.d);
          std::vector<Rational> lo(p.d);
          for (int l = 0; l < p.d; ++l) lo[l] = lower[l] + child * per[l];
          std::vector<const Pt*> sub;
          for (const Pt* e : members) {
            bool in = true;
            for (int l = 0; l < p.d && in; ++l) in = e->q[l] >= lo[l] && e->q[l] < lo[l] + child;
            if (in) sub.push_back(e);
          }
          if (!sub.empty()) descend(k + 1, prefix * B + D, lo, child, sub);
        }
      };
  std::vector<const Pt*> all;
  for (const auto& e : E) all.push_back(&e);
  if (!all.empty()) descend(0, 0, std::vector<Rational>(p.d, Rational(0)), Rational(1), all);
  return collect_poss(std::move(hits));
}

// The unique slope witnessing t in Poss(p) for p1 in [C0, C0 + 1].
inline std::uint32_t unique_far_slope(const PossSet& ps, std::uint64_t leaf) {
  for (const auto& e : ps.entries) {
    if (e.leaf != leaf) continue;
    if (e.witnesses.size() != 1)
      throw InvariantViolation("leaf " + std::to_string(leaf) + " has " + std::to_string(e.witnesses.size()) +
                               " witness slopes");
    return e.witnesses.front();
  }
  throw DomainError("leaf " + std::to_string(leaf) + " is not in Poss(p)");
}

struct FarSlopeAudit {
  std::size_t leaves = 0;
  std::size_t multi_witness = 0;
  bool sticky = true;
};

// Witness counts and stickiness of t -> beta(t) on Poss(p).
inline FarSlopeAudit audit_far_slopes(const TubeParams& p, const PossSet& ps) {
  FarSlopeAudit a;
  LeafTree roots(ipow(p.M, p.d), p.N), bin(2, p.N);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> beta;
  for (const auto& e : ps.entries) {
    ++a.leaves;
    if (e.witnesses.size() != 1) ++a.multi_witness;
    beta.emplace_back(e.leaf, e.witnesses.front());
  }
  a.sticky = leaf_map_is_sticky(roots, bin, beta);
  return a;
}

}  // namespace kakeya
