#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kakeya/cantor.hpp"
#include "kakeya/config_prob.hpp"
#include "kakeya/io.hpp"
#include "kakeya/percolation.hpp"
#include "kakeya/stats.hpp"
#include "kakeya/sticky.hpp"
#include "kakeya/tree.hpp"
#include "kakeya/tubes.hpp"

namespace kakeya {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  int M = 3;
  std::vector<int> N_values{4, 5, 6, 7, 8};
  int d = 1;
  std::string curve = "affine";
  std::string selector = "middle";
  int samples = 200;
  std::vector<int> R_depths{2, 3, 4, 5};  // values of N - R
  int S = 4;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "results";
  std::uint64_t leaf_guard = 10'000'000;
  int lyons_samples = 20000;  // draws for the resistance integral
  int points = 100;     // random far-slab points per N
  int fields = 10000;   // fields in the Y_e audit
  double c0 = 1.0;
  double length_factor = 10.0;  // tube length in units of C0
  double norm_p = 2.0;
};

inline json to_json(const ExperimentConfig& c) {
  return json{{"M", c.M},           {"N_values", c.N_values}, {"d", c.d},
              {"curve", c.curve},   {"selector", c.selector}, {"samples", c.samples},
              {"R_depths", c.R_depths}, {"S", c.S},           {"seed", c.seed},
              {"leaf_guard", c.leaf_guard}, {"lyons_samples", c.lyons_samples},
              {"points", c.points}, {"fields", c.fields},     {"c0", c.c0}, {"length_factor", c.length_factor},
              {"norm_p", c.norm_p}};
}

// Fields present in j override those in base. threads/out_dir never enter records.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig c = {}) {
  auto get = [&](const char* k, auto& dst) {
    if (j.contains(k)) dst = j[k].get<std::decay_t<decltype(dst)>>();
  };
  get("M", c.M);
  get("N_values", c.N_values);
  get("d", c.d);
  get("curve", c.curve);
  get("selector", c.selector);
  get("samples", c.samples);
  get("R_depths", c.R_depths);
  get("S", c.S);
  get("seed", c.seed);
  get("threads", c.threads);
  get("out_dir", c.out_dir);
  get("leaf_guard", c.leaf_guard);
  get("lyons_samples", c.lyons_samples);
  get("length_factor", c.length_factor);
  get("points", c.points);
  get("fields", c.fields);
  get("c0", c.c0);
  get("norm_p", c.norm_p);
  return c;
}

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(to_json(c).dump()); }

struct RunResult {
  std::string name;
  json doc;
  std::string csv;
};

inline RunResult make_result(const std::string& name, const ExperimentConfig& cfg) {
  RunResult r;
  r.name = name;
  r.doc = json{{"schema_version", kSchemaVersion},
               {"experiment", name},
               {"config", to_json(cfg)},
               {"config_hash", config_hash(cfg)},
               {"records", json::array()},
               {"summary", json::array()}};
  return r;
}

inline void write_result(const std::string& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir + "/" + r.name + ".json") << r.doc.dump(2) << "\n";
  std::ofstream(dir + "/" + r.name + ".csv") << r.csv;
}

// Runs fn(i) for i in [0, n) over `threads` workers; results keep index order.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int threads, Fn fn) {
  std::vector<T> out(n);
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) out[i] = fn(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

// Everything fixed by (config, N): directions, tube parameters, root centres.
struct Scene {
  DirectionSet ds;
  TubeParams params;
  std::vector<double> centers;
  LeafTree roots;

  Scene(const ExperimentConfig& cfg, int N)
      : ds(direction_set(CantorSpec(cfg.M, N, make_selector(cfg.selector, cfg.M)), make_curve(cfg.curve, cfg.d))),
        params(with_length(tube_params(ds), cfg.length_factor)),
        centers(leaf_centers(params, cfg.leaf_guard)),
        roots(ipow(cfg.M, cfg.d), N) {}

  static TubeParams with_length(TubeParams p, double factor) {
    if (factor * p.C0 < p.C0 + 1) throw ConfigError("tubes must reach past the far slab");
    p.length_factor = factor;
    return p;
  }

  template <class Field>
  TubeFamily family(const Field& f) const {
    return build_family(params, ds, centers, tau_all(f, roots));
  }
};

// ---- volumes: simulate / lower bound / upper bound -----------------------

struct VolumeSample {
  std::uint64_t seed = 0;
  double near = 0, far = 0;
};

inline std::vector<VolumeSample> volume_samples(const ExperimentConfig& cfg, const Scene& sc, int N) {
  return parallel_map<VolumeSample>(cfg.samples, cfg.threads, [&](std::size_t s) {
    VolumeSample v;
    v.seed = stream_seed(cfg.seed, 0x766f6cULL + N, s);
    auto fam = sc.family(StickyField(v.seed));
    auto m = kakeya_measures(sc.params, fam, cfg.S, v.seed);
    v.near = m.near;
    v.far = m.far;
    return v;
  });
}

inline double maximal_norm_floor(double ratio, double p, double c0) {
  if (ratio < 1) throw ConfigError("ratio must be >= 1");
  if (p < 1) throw ConfigError("p must be >= 1");
  return c0 * std::pow(ratio, 1.0 / p);
}

struct VolumeTable {
  int N = 0;
  int C0 = 0;
  stats::Summary near, far;
  double near_q25 = 0;
  double c_lower = 0;      // N * q25
  double c_sqrtlog = 0;    // N * q25 / sqrt(log N)
  double n_far = 0;        // N * mean far
  double ratio = 0;        // mean near / mean far
  std::vector<VolumeSample> samples;
};

inline std::vector<VolumeTable> volume_tables(const ExperimentConfig& cfg) {
  std::vector<VolumeTable> out;
  for (int N : cfg.N_values) {
    Scene sc(cfg, N);
    VolumeTable t;
    t.N = N;
    t.C0 = sc.params.C0;
    t.samples = volume_samples(cfg, sc, N);
    std::vector<double> nv, fv;
    for (const auto& s : t.samples) {
      nv.push_back(s.near);
      fv.push_back(s.far);
    }
    t.near = stats::summarize(nv);
    t.far = stats::summarize(fv);
    t.near_q25 = stats::lower_quantile(nv, 0.25);
    t.c_lower = N * t.near_q25;
    t.c_sqrtlog = N > 1 ? N * t.near_q25 / std::sqrt(std::log(static_cast<double>(N))) : 0;
    t.n_far = N * t.far.mean;
    t.ratio = t.far.mean > 0 ? t.near.mean / t.far.mean : 0;
    out.push_back(std::move(t));
  }
  return out;
}

inline RunResult simulate(const ExperimentConfig& cfg, const std::vector<VolumeTable>& tables) {
  auto r = make_result("simulate", cfg);
  std::ostringstream csv;
  csv << "N,C0,samples,near_mean,near_ci,far_mean,far_ci,ratio,norm_floor\n";
  for (const auto& t : tables) {
    for (std::size_t s = 0; s < t.samples.size(); ++s)
      r.doc["records"].push_back({{"N", t.N},
                                  {"sample", s},
                                  {"seed", t.samples[s].seed},
                                  {"near", t.samples[s].near},
                                  {"far", t.samples[s].far}});
    double floor = t.ratio >= 1 ? maximal_norm_floor(t.ratio, cfg.norm_p, cfg.c0) : cfg.c0;
    r.doc["summary"].push_back({{"N", t.N},
                                {"C0", t.C0},
                                {"near_mean", t.near.mean},
                                {"near_ci", t.near.halfwidth},
                                {"far_mean", t.far.mean},
                                {"far_ci", t.far.halfwidth},
                                {"ratio", t.ratio},
                                {"norm_floor", floor}});
    csv << t.N << "," << t.C0 << "," << t.samples.size() << "," << t.near.mean << "," << t.near.halfwidth << ","
        << t.far.mean << "," << t.far.halfwidth << "," << t.ratio << "," << floor << "\n";
  }
  r.csv = csv.str();
  return r;
}

inline RunResult lower_bound_report(const ExperimentConfig& cfg, const std::vector<VolumeTable>& tables) {
  auto r = make_result("lower_bound", cfg);
  std::ostringstream csv;
  csv << "N,samples,near_q25,c_over_N,c_sqrtlog,frac_at_least_q25\n";
  for (const auto& t : tables) {
    std::size_t above = 0;
    for (const auto& s : t.samples) above += s.near >= t.near_q25;
    double frac = static_cast<double>(above) / t.samples.size();
    r.doc["summary"].push_back({{"N", t.N},
                                {"near_q25", t.near_q25},
                                {"c_over_N", t.c_lower},
                                {"c_sqrtlog", t.c_sqrtlog},
                                {"frac_at_least_q25", frac}});
    csv << t.N << "," << t.samples.size() << "," << t.near_q25 << "," << t.c_lower << "," << t.c_sqrtlog << ","
        << frac << "\n";
  }
  std::vector<double> cs;
  for (const auto& t : tables) cs.push_back(t.c_lower);
  if (!cs.empty()) r.doc["c_spread"] = stats::max_over_min(cs);
  r.csv = csv.str();
  return r;
}

// Uniform rational in [a, b] on a 2^-24 grid.
inline Rational random_rational(std::uint64_t h, const Rational& a, const Rational& b) {
  Rational u(static_cast<unsigned long>(h >> 40), 1UL << 24);
  u.canonicalize();
  return a + (b - a) * u;
}

// A far-slab point: uniform in [C0, C0+1] x [-2C0, 2C0]^d, or (seeded) on a random tube.
inline std::vector<Rational> far_point(const TubeParams& p, const DirectionSet& ds, std::uint64_t seed, bool on_tube) {
  std::vector<Rational> x(p.d + 1);
  x[0] = random_rational(mix64(seed), Rational(p.C0), Rational(p.C0 + 1));
  if (!on_tube) {
    for (int l = 0; l < p.d; ++l)
      x[l + 1] = random_rational(mix64(seed + 1 + l), Rational(-2 * p.C0), Rational(2 * p.C0));
    return x;
  }
  std::uint64_t t = mix64(seed ^ 0x7475ULL) % p.leaves();
  const auto& dir = ds.points[mix64(seed ^ 0x736cULL) % ds.points.size()];
  std::vector<std::uint64_t> j(p.d);
  leaf_coords(t, p.M, p.N, p.d, j.data());
  for (int l = 0; l < p.d; ++l) {
    Rational half_w = p.kappa / 2;
    Rational off = random_rational(mix64(seed + 7 + l), -half_w, half_w);
    if (off == half_w) off = 0;
    Rational r = (Rational(static_cast<long>(j[l])) + Rational(1, 2) + off) / from_u64(p.side);
    x[l + 1] = r + x[0] * dir.slope[l];
  }
  return x;
}

struct GrowthRow {
  int N = 0;
  std::vector<double> R;  // R(Poss(x)) for the sampled points
  double beta_min = 0, beta_mean = 0;
  std::size_t attempts = 0;
};

// R(Poss(x)) over random far-slab points with non-empty Poss.
inline std::vector<GrowthRow> resistance_growth(const ExperimentConfig& cfg) {
  std::vector<GrowthRow> rows;
  for (int N : cfg.N_values) {
    Scene sc(cfg, N);
    GrowthRow g;
    g.N = N;
    for (std::uint64_t i = 0; g.R.size() < static_cast<std::size_t>(cfg.points); ++i) {
      if (i > 1000ULL * cfg.points) throw ResourceError("too few far-slab points with non-empty Poss");
      auto x = far_point(sc.params, sc.ds, stream_seed(cfg.seed, 0x6772ULL + N, i), false);
      auto ps = poss_scan(sc.params, sc.ds, x);
      ++g.attempts;
      if (ps.entries.empty()) continue;
      g.R.push_back(resistance_d(tree_from_leaves(sc.roots, ps.leaves())));
    }
    g.beta_min = 1e300;
    for (double r : g.R) {
      g.beta_min = std::min(g.beta_min, r / N);
      g.beta_mean += r / N / g.R.size();
    }
    rows.push_back(std::move(g));
  }
  return rows;
}

struct UpperRow {
  int N = 0;
  double far_mean = 0, far_ci = 0, n_far = 0;
  double lyons_integral = 0;  // integral of min(1, 2/(1+R(Poss(x)))) over the far slab
  double lyons_ci = 0;
  bool consistent = true;     // far_mean - far_ci <= lyons_integral + lyons_ci
};

struct LyonsEstimate {
  double value = 0, halfwidth = 0;
};

// The integrand vanishes off the union of all candidate tubes P_{t,v}, which a
// transverse grid cannot resolve at width M^-N. Instead x is drawn uniformly from a
// uniformly chosen candidate tube and weighted by 1 / #{(t', v') : x in P_{t', v'}}.
inline LyonsEstimate lyons_integral(const ExperimentConfig& cfg, const Scene& sc) {
  const auto& p = sc.params;
  const int d = p.d;
  const double side = static_cast<double>(p.side);
  const double pairs = static_cast<double>(p.leaves()) * static_cast<double>(sc.ds.points.size());
  const double tube_vol = std::pow(p.w(), d);
  auto vals = parallel_map<double>(cfg.lyons_samples, cfg.threads, [&](std::size_t i) {
    const std::uint64_t h = stream_seed(cfg.seed, 0x6c796fULL + p.N, i);
    const std::uint64_t t = mix64(h) % p.leaves();
    const auto& dir = sc.ds.points[mix64(h ^ 0x736cULL) % sc.ds.points.size()];
    std::vector<std::uint64_t> j(d);
    leaf_coords(t, p.M, p.N, d, j.data());
    std::vector<double> x(d + 1);
    x[0] = p.C0 + unit_double(mix64(h + 1));
    for (int l = 0; l < d; ++l) {
      double off = (unit_double(mix64(h + 2 + l)) - 0.5) * p.kappa_d;
      x[l + 1] = (static_cast<double>(j[l]) + 0.5 + off) / side + x[0] * dir.slope_d[l];
    }
    auto ps = poss_scan(p, sc.ds, x);
    std::size_t m = 0;
    for (const auto& e : ps.entries) m += e.witnesses.size();
    if (m == 0) return 0.0;  // rounding at a tube face
    double R = resistance_d(tree_from_leaves(sc.roots, ps.leaves()));
    return std::min(1.0, 2.0 / (1.0 + R)) / static_cast<double>(m);
  });
  auto s = stats::summarize(vals);
  return {s.mean * pairs * tube_vol, s.halfwidth * pairs * tube_vol};
}

inline std::vector<UpperRow> upper_bound_rows(const ExperimentConfig& cfg, const std::vector<VolumeTable>& tables) {
  std::vector<UpperRow> rows;
  for (const auto& t : tables) {
    Scene sc(cfg, t.N);
    UpperRow u;
    u.N = t.N;
    u.far_mean = t.far.mean;
    u.far_ci = t.far.halfwidth;
    u.n_far = t.n_far;
    auto li = lyons_integral(cfg, sc);
    u.lyons_integral = li.value;
    u.lyons_ci = li.halfwidth;
    u.consistent = u.far_mean - u.far_ci <= u.lyons_integral + u.lyons_ci;
    rows.push_back(u);
  }
  return rows;
}

inline RunResult upper_bound_report(const ExperimentConfig& cfg, const std::vector<UpperRow>& rows,
                                    const std::vector<GrowthRow>& growth) {
  auto r = make_result("upper_bound", cfg);
  std::ostringstream csv;
  csv << "N,far_mean,far_ci,N_times_far,lyons_integral,lyons_ci,consistent\n";
  for (const auto& u : rows) {
    r.doc["summary"].push_back({{"N", u.N},
                                {"far_mean", u.far_mean},
                                {"far_ci", u.far_ci},
                                {"N_times_far", u.n_far},
                                {"lyons_integral", u.lyons_integral},
                                {"lyons_ci", u.lyons_ci},
                                {"consistent", u.consistent}});
    csv << u.N << "," << u.far_mean << "," << u.far_ci << "," << u.n_far << "," << u.lyons_integral << "," << u.lyons_ci
        << "," << u.consistent << "\n";
  }
  for (const auto& g : growth)
    r.doc["records"].push_back(
        {{"N", g.N}, {"R", g.R}, {"beta_min", g.beta_min}, {"beta_mean", g.beta_mean}, {"attempts", g.attempts}});
  r.csv = csv.str();
  return r;
}

// ---- slab moments ----------------------------------------------------------

// Sum over ordered pairs t1 != t2 of |P*_{t1} cap P*_{t2}| on the slab [M^{R-N}, M^{R+1-N}].
inline double slab_sum(const TubeParams& p, const TubeFamily& f, int R) {
  const double lo = std::pow(static_cast<double>(p.M), R - p.N);
  const double hi = std::min(std::pow(static_cast<double>(p.M), R + 1 - p.N), f.x1_max);
  const int d = p.d;
  const double r = 2.0 * p.kappa_d * std::sqrt(static_cast<double>(d)) / p.side;
  std::vector<double> vmin(d, 1e300), vmax(d, -1e300);
  const std::size_t n = f.size();
  for (std::size_t t = 0; t < n; ++t)
    for (int l = 0; l < d; ++l) {
      vmin[l] = std::min(vmin[l], f.slope[t * d + l]);
      vmax[l] = std::max(vmax[l], f.slope[t * d + l]);
    }
  std::vector<std::int64_t> W(d);
  for (int l = 0; l < d; ++l)
    W[l] = static_cast<std::int64_t>(std::ceil((r + hi * (vmax[l] - vmin[l])) * p.side)) + 1;
  double total = 0;
  std::vector<std::uint64_t> j1(d), j2(d);
  std::vector<std::int64_t> off(d);
  for (std::size_t t1 = 0; t1 < n; ++t1) {
    leaf_coords(t1, p.M, p.N, d, j1.data());
    for (int l = 0; l < d; ++l) off[l] = -W[l];
    while (true) {
      bool ok = true;
      for (int l = 0; l < d && ok; ++l) {
        std::int64_t c = static_cast<std::int64_t>(j1[l]) + off[l];
        ok = c >= 0 && c < static_cast<std::int64_t>(p.side);
        j2[l] = static_cast<std::uint64_t>(c);
      }
      if (ok) {
        std::uint64_t t2 = d == 1 ? j2[0] : leaf_from_coords(j2.data(), p.M, p.N, d);
        if (t2 > t1 && intersection_necessary(p, &f.center[t1 * d], &f.slope[t1 * d], &f.center[t2 * d],
                                              &f.slope[t2 * d], lo, hi))
          total += 2.0 * pair_measure(f, t1, t2, lo, hi);
      }
      int l = d - 1;
      while (l >= 0 && off[l] == W[l]) {
        off[l] = -W[l];
        --l;
      }
      if (l < 0) break;
      ++off[l];
    }
  }
  return total;
}

struct MomentRow {
  int N = 0, R = 0;
  double mean = 0, mean_ci = 0, meansq = 0, meansq_ci = 0;
  double scale = 0;  // N M^{2R-2N}
  double ratio1 = 0, ratio2 = 0;
  double chebyshev = 0;  // fraction with S <= 2 sqrt(E S^2)
  bool exhaustive = false;
  std::vector<double> values;
};

inline MomentRow moment_row(int N, int R, int M, std::vector<double> values, bool exhaustive) {
  MomentRow m;
  m.N = N;
  m.R = R;
  m.exhaustive = exhaustive;
  std::vector<double> sq;
  for (double v : values) sq.push_back(v * v);
  auto s1 = stats::summarize(values), s2 = stats::summarize(sq);
  m.mean = s1.mean;
  m.mean_ci = exhaustive ? 0 : s1.halfwidth;
  m.meansq = s2.mean;
  m.meansq_ci = exhaustive ? 0 : s2.halfwidth;
  m.scale = N * std::pow(static_cast<double>(M), 2.0 * R - 2.0 * N);
  m.ratio1 = m.mean / m.scale;
  m.ratio2 = m.meansq / (m.scale * m.scale);
  std::size_t ok = 0;
  for (double v : values) ok += v <= 2.0 * std::sqrt(m.meansq);
  m.chebyshev = values.empty() ? 0 : static_cast<double>(ok) / values.size();
  m.values = std::move(values);
  return m;
}

// Monte Carlo over sticky fields for each N and each R = N - depth with R >= 1.
inline std::vector<MomentRow> slab_moments(const ExperimentConfig& cfg) {
  std::vector<MomentRow> rows;
  for (int N : cfg.N_values) {
    Scene sc(cfg, N);
    std::vector<int> Rs;
    for (int depth : cfg.R_depths)
      if (N - depth >= 0 && depth >= 1) Rs.push_back(N - depth);
    auto per = parallel_map<std::vector<double>>(cfg.samples, cfg.threads, [&](std::size_t s) {
      auto fam = sc.family(StickyField(stream_seed(cfg.seed, 0x736cULL + N, s)));
      std::vector<double> v;
      for (int R : Rs) v.push_back(slab_sum(sc.params, fam, R));
      return v;
    });
    for (std::size_t k = 0; k < Rs.size(); ++k) {
      std::vector<double> vals;
      for (const auto& v : per) vals.push_back(v[k]);
      rows.push_back(moment_row(N, Rs[k], cfg.M, std::move(vals), false));
    }
  }
  return rows;
}

// Calls fn(field) for every bit assignment on the edges of the full root tree.
template <class Fn>
void for_each_field(const Scene& sc, Fn fn) {
  std::vector<Node> edges;
  for (int k = 1; k <= sc.roots.depth(); ++k)
    for (std::uint64_t p = 0; p < sc.roots.pow(k); ++p) edges.push_back({k, p});
  if (edges.size() > 24) throw ResourceError("too many edges for exhaustive enumeration: " + std::to_string(edges.size()));
  const std::uint64_t total = std::uint64_t{1} << edges.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    TableField tf;
    for (std::size_t e = 0; e < edges.size(); ++e) tf.set(edges[e], static_cast<int>((mask >> e) & 1));
    fn(tf);
  }
}

// Slab sums over every field of the full tree of height N (M^d + ... + M^{Nd} <= 24 edges).
inline std::vector<MomentRow> slab_moments_exhaustive(const ExperimentConfig& cfg, int N, const std::vector<int>& Rs) {
  Scene sc(cfg, N);
  std::vector<std::vector<double>> vals(Rs.size());
  for_each_field(sc, [&](const TableField& tf) {
    auto fam = sc.family(tf);
    for (std::size_t k = 0; k < Rs.size(); ++k) vals[k].push_back(slab_sum(sc.params, fam, Rs[k]));
  });
  std::vector<MomentRow> rows;
  for (std::size_t k = 0; k < Rs.size(); ++k) rows.push_back(moment_row(N, Rs[k], cfg.M, std::move(vals[k]), true));
  return rows;
}

// Near volumes for every field; exact quantiles at tiny N.
inline std::vector<double> near_volumes_exhaustive(const ExperimentConfig& cfg, int N) {
  Scene sc(cfg, N);
  std::vector<double> out;
  for_each_field(sc, [&](const TableField& tf) {
    out.push_back(union_volume(sc.family(tf), sc.params.side, 0.0, 1.0, cfg.S).volume);
  });
  return out;
}

inline RunResult slab_moments_report(const ExperimentConfig& cfg, const std::vector<MomentRow>& rows) {
  auto r = make_result("slab_moments", cfg);
  std::ostringstream csv;
  csv << "N,R,exhaustive,mean,mean_ci,meansq,meansq_ci,scale,ratio1,ratio2,chebyshev\n";
  for (const auto& m : rows) {
    r.doc["summary"].push_back({{"N", m.N},
                                {"R", m.R},
                                {"exhaustive", m.exhaustive},
                                {"mean", m.mean},
                                {"mean_ci", m.mean_ci},
                                {"meansq", m.meansq},
                                {"meansq_ci", m.meansq_ci},
                                {"scale", m.scale},
                                {"ratio1", m.ratio1},
                                {"ratio2", m.ratio2},
                                {"chebyshev", m.chebyshev}});
    r.doc["records"].push_back({{"N", m.N}, {"R", m.R}, {"values", m.values}});
    csv << m.N << "," << m.R << "," << m.exhaustive << "," << m.mean << "," << m.mean_ci << "," << m.meansq << ","
        << m.meansq_ci << "," << m.scale << "," << m.ratio1 << "," << m.ratio2 << "," << m.chebyshev << "\n";
  }
  r.csv = csv.str();
  return r;
}

// ---- interval measure bounds ----------------------------------------------

using IntervalSet = std::vector<std::pair<double, double>>;

inline double interval_measure(IntervalSet s) {
  std::sort(s.begin(), s.end());
  double total = 0, cur_lo = 0, cur_hi = -1e300;
  bool open = false;
  for (const auto& [a, b] : s) {
    if (b <= a) continue;
    if (!open || a > cur_hi) {
      if (open) total += cur_hi - cur_lo;
      cur_lo = a;
      cur_hi = b;
      open = true;
    } else {
      cur_hi = std::max(cur_hi, b);
    }
  }
  if (open) total += cur_hi - cur_lo;
  return total;
}

inline double intersection_measure(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet c;
  for (const auto& x : a)
    for (const auto& y : b) {
      double lo = std::max(x.first, y.first), hi = std::min(x.second, y.second);
      if (hi > lo) c.emplace_back(lo, hi);
    }
  return interval_measure(c);
}

// alpha^2 n^2 / (16 L)
inline double measure_union_bound(double alpha, std::size_t n, double L) {
  if (L <= 0) throw ConfigError("L must be positive");
  return alpha * alpha * static_cast<double>(n) * static_cast<double>(n) / (16.0 * L);
}

struct UnionBoundCheck {
  double alpha = 0, L = 0, bound = 0, union_measure = 0;
};

// Applies the bound to a family of equal-measure interval sets with L = sum_{i,j} |A_i cap A_j|.
inline UnionBoundCheck union_bound_for(const std::vector<IntervalSet>& family, double tol = 1e-9) {
  UnionBoundCheck u;
  if (family.empty()) throw ConfigError("empty family");
  u.alpha = interval_measure(family[0]);
  for (const auto& s : family)
    if (std::abs(interval_measure(s) - u.alpha) > tol * std::max(1.0, u.alpha))
      throw ConfigError("sets must have equal measure");
  for (const auto& a : family)
    for (const auto& b : family) u.L += intersection_measure(a, b);
  u.bound = measure_union_bound(u.alpha, family.size(), u.L);
  IntervalSet all;
  for (const auto& s : family) all.insert(all.end(), s.begin(), s.end());
  u.union_measure = interval_measure(all);
  return u;
}

// ---- counting diagnostics --------------------------------------------------

struct CountingRow {
  int hu = 0;
  int k = 0;
  std::size_t A = 0;         // #A_u(k)
  std::size_t A_scan = 0;    // same set via distance to the other children of u
  std::size_t B_max = 0;     // max over t1 of #B_{t1}(k)
  std::size_t E = 0;         // #E_u(t1, v1; k) for the first t1 in A_u(k)
  double A_const = 0, E_const = 0;
};

inline double ball_radius(const TubeParams& p, int hu, int k) {
  return (k + 1.0) * p.C / p.side * std::pow(static_cast<double>(p.M), -hu) +
         2.0 * p.kappa_d * std::sqrt(static_cast<double>(p.d)) / p.side;
}

// A_u(k), B_{t1}(k) and E_u(t1, v1; k) for u the leftmost vertex of each height.
inline std::vector<CountingRow> counting_rows(const ExperimentConfig& cfg, int N, std::uint64_t seed) {
  Scene sc(cfg, N);
  const auto& p = sc.params;
  auto fam = sc.family(StickyField(seed));
  auto addr = tau_all(StickyField(seed), sc.roots);
  const int d = p.d;
  std::vector<CountingRow> rows;
  std::vector<int> ks{0};
  for (std::uint64_t k = 1; k < p.side; k *= p.M) ks.push_back(static_cast<int>(k));
  for (int hu = 0; hu < N; ++hu) {
    Node u{hu, 0};
    std::vector<std::uint64_t> inside;
    for (std::uint64_t t = 0; t < p.leaves(); ++t)
      if (sc.roots.contains_leaf(u, t)) inside.push_back(t);
    for (int k : ks) {
      CountingRow row;
      row.hu = hu;
      row.k = k;
      const double rho = ball_radius(p, hu, k);
      const double lo = static_cast<double>(k) / p.side, hi = (k + 1.0) / p.side;
      std::vector<std::uint64_t> Au;
      for (auto t1 : inside) {
        std::size_t B = 0;
        for (auto t2 : inside) {
          if (sc.roots.yca_height(t1, t2) != hu) continue;
          double s = 0;
          for (int l = 0; l < d; ++l) {
            double x = fam.center[t2 * d + l] - fam.center[t1 * d + l];
            s += x * x;
          }
          if (std::sqrt(s) <= rho) ++B;
        }
        row.B_max = std::max(row.B_max, B);
        if (B) Au.push_back(t1);
        // geometric scan: distance from cen(t1) to the cubes of the other children of u
        std::uint64_t own = sc.roots.node(t1, hu + 1).prefix;
        bool near_other = false;
        for (std::uint64_t c = 0; c < sc.roots.base() && !near_other; ++c) {
          std::uint64_t child = u.prefix * sc.roots.base() + c;
          if (child == own) continue;
          auto cube = decode_cube(sc.roots.vertex({hu + 1, child}), p.M, d);
          double s = 0;
          for (int l = 0; l < d; ++l) {
            double a = to_double(cube.lower[l]), b = a + to_double(cube.side);
            double x = fam.center[t1 * d + l];
            // distance to the set of centres of leaves inside that child
            double ca = a + 0.5 / p.side, cb = b - 0.5 / p.side;
            double dx = x < ca ? ca - x : (x > cb ? x - cb : 0.0);
            s += dx * dx;
          }
          near_other = std::sqrt(s) <= rho;
        }
        row.A_scan += near_other;
      }
      row.A = Au.size();
      row.A_const = row.A / ((k + 1.0) / p.side * std::pow(static_cast<double>(p.M), d * (N - hu)));
      if (!Au.empty()) {
        std::uint64_t t1 = Au.front();
        const auto& v1 = sc.ds.points[addr[t1]];
        LeafTree bin(2, N);
        for (auto t2 : inside) {
          if (sc.roots.yca_height(t1, t2) != hu) continue;
          for (const auto& v2 : sc.ds.points) {
            if (binary_common_height(v1.binary, v2.binary, N) < hu) continue;
            std::array<double, 16> dc{}, dv{};
            for (int l = 0; l < d; ++l) {
              dc[l] = fam.center[t2 * d + l] - fam.center[t1 * d + l];
              dv[l] = v2.slope_d[l] - v1.slope_d[l];
            }
            if (pair_measure(p.w(), d, dc.data(), dv.data(), lo, hi) > 0) ++row.E;
          }
        }
        row.E_const = row.E / std::pow(2.0, N - hu);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

struct EStarRow {
  int hu = 0, hu1 = 0, hu2 = 0;
  std::size_t count = 0;
  double fitted = 0;  // count / 2^{2N - h(u) - h(u1)}
};

// E* for fixed (t2, v2), (t2', v2') and slabs k, k': quadruples (t1, v1, t1', v1')
// forming a type-2 tuple with both pairs meeting and admissible slopes. Grouped by (h(u), h(u1), h(u2)).
inline std::vector<EStarRow> estar_rows(const ExperimentConfig& cfg, int N, std::uint64_t t2, std::uint64_t t2p,
                                        std::uint32_t b2, std::uint32_t b2p, int k, int kp) {
  Scene sc(cfg, N);
  const auto& p = sc.params;
  const int d = p.d;
  const auto& lt = sc.roots;
  auto meets = [&](std::uint64_t ta, const Direction& va, std::uint64_t tb, const Direction& vb, int slab) {
    std::array<double, 16> dc{}, dv{};
    for (int l = 0; l < d; ++l) {
      dc[l] = sc.centers[tb * d + l] - sc.centers[ta * d + l];
      dv[l] = vb.slope_d[l] - va.slope_d[l];
    }
    return pair_measure(p.w(), d, dc.data(), dv.data(), static_cast<double>(slab) / p.side,
                        (slab + 1.0) / p.side) > 0;
  };
  std::map<std::array<int, 3>, std::size_t> counts;
  const auto& V2 = sc.ds.points[b2];
  const auto& V2p = sc.ds.points[b2p];
  std::vector<std::pair<std::uint64_t, std::uint32_t>> first, second;
  for (std::uint64_t t1 = 0; t1 < p.leaves(); ++t1)
    for (const auto& v : sc.ds.points) {
      if (t1 != t2 && meets(t1, v, t2, V2, k)) first.emplace_back(t1, static_cast<std::uint32_t>(v.binary));
      if (t1 != t2p && meets(t1, v, t2p, V2p, kp)) second.emplace_back(t1, static_cast<std::uint32_t>(v.binary));
    }
  for (const auto& [t1, b1] : first)
    for (const auto& [t1p, b1p] : second) {
      std::array<std::uint64_t, 4> tup{t1, t2, t1p, t2p};
      if (t1 == t1p || t1 == t2p || t1p == t2) continue;
      auto cls = classify4(lt, tup);
      if (cls.type != 2) continue;
      if (!sticky_admissible(lt, {{t1, b1}, {t2, b2}, {t1p, b1p}, {t2p, b2p}})) continue;
      ++counts[{cls.hu, cls.hu1, cls.hu2}];
    }
  std::vector<EStarRow> rows;
  for (const auto& [key, c] : counts)
    rows.push_back({key[0], key[1], key[2], c, c / std::pow(2.0, 2 * N - key[0] - key[1])});
  return rows;
}

// ---- Y_e audit -------------------------------------------------------------

struct IidAudit {
  std::vector<Rational> x;
  std::size_t poss_leaves = 0, edges = 0;
  std::size_t fields = 0;
  std::size_t consistency_violations = 0;
  double pooled_chi2 = 0, pooled_p = 0;
  double joint_disjoint_chi2 = 0, joint_disjoint_p = 0;
  double joint_nested_chi2 = 0, joint_nested_p = 0;
  double max_abs_z = 0;  // largest per-edge standardized frequency deviation
  double single_ray_freq = 0;
};

// Far-slab point whose Poss set has at least `min_leaves` roots.
inline std::vector<Rational> audit_point(const TubeParams& p, const DirectionSet& ds, std::uint64_t seed,
                                        std::size_t min_leaves) {
  std::vector<Rational> best;
  std::size_t best_n = 0;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    auto x = far_point(p, ds, stream_seed(seed, 0x6175ULL, i), true);
    auto n = poss_scan(p, ds, x).entries.size();
    if (n > best_n) {
      best = x;
      best_n = n;
    }
    if (best_n >= min_leaves) break;
  }
  return best;
}

inline IidAudit percolation_iid_audit(const ExperimentConfig& cfg, int N, std::size_t min_leaves = 4) {
  Scene sc(cfg, N);
  IidAudit a;
  a.x = audit_point(sc.params, sc.ds, cfg.seed, min_leaves);
  auto ps = poss_scan(sc.params, sc.ds, a.x);
  a.poss_leaves = ps.entries.size();
  if (ps.entries.empty()) throw InvariantViolation("no far-slab point with non-empty Poss found");
  std::vector<std::pair<std::uint64_t, std::uint32_t>> beta;
  for (const auto& e : ps.entries) beta.emplace_back(e.leaf, unique_far_slope(ps, e.leaf));
  std::vector<Node> edges = ray_edges(sc.roots, ps.leaves());
  a.edges = edges.size();
  auto eidx = [&](Node n) { return std::lower_bound(edges.begin(), edges.end(), n) - edges.begin(); };
  std::vector<std::uint64_t> ones(edges.size(), 0);
  // two disjoint edges: the lowest edges of the first and last leaf; nested: a leaf edge and its parent
  const auto e_first = eidx(sc.roots.node(beta.front().first, N));
  const auto e_last = eidx(sc.roots.node(beta.back().first, N));
  const auto e_parent = eidx(sc.roots.node(beta.front().first, N - 1 > 0 ? N - 1 : 1));
  std::vector<std::uint64_t> disjoint(4, 0), nested(4, 0);
  std::vector<int> y(edges.size());
  a.fields = static_cast<std::size_t>(cfg.fields);
  for (std::size_t f = 0; f < a.fields; ++f) {
    StickyField field(stream_seed(cfg.seed, 0x696964ULL, f));
    std::fill(y.begin(), y.end(), -1);
    for (const auto& [t, b] : beta) {
      auto tau = tau_index(field, sc.roots, t, N);
      for (int k = 1; k <= N; ++k) {
        int bit_t = static_cast<int>((tau >> (N - k)) & 1), bit_b = static_cast<int>((b >> (N - k)) & 1);
        int v = bit_t == bit_b;
        auto e = eidx(sc.roots.node(t, k));
        if (y[e] >= 0 && y[e] != v) ++a.consistency_violations;
        y[e] = v;
      }
    }
    for (std::size_t e = 0; e < edges.size(); ++e) ones[e] += y[e];
    ++disjoint[2 * y[e_first] + y[e_last]];
    ++nested[2 * y[e_first] + y[e_parent]];
  }
  const double F = static_cast<double>(a.fields);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double z = (ones[e] - F / 2) / std::sqrt(F / 4);
    a.pooled_chi2 += z * z;
    a.max_abs_z = std::max(a.max_abs_z, std::abs(z));
  }
  a.pooled_p = stats::chi2_pvalue(a.pooled_chi2, static_cast<double>(edges.size()));
  if (e_first != e_last) {
    a.joint_disjoint_chi2 = stats::chi2_uniform(disjoint);
    a.joint_disjoint_p = stats::chi2_pvalue(a.joint_disjoint_chi2, 3);
  } else {
    a.joint_disjoint_p = 1;
  }
  if (e_first != e_parent) {
    a.joint_nested_chi2 = stats::chi2_uniform(nested);
    a.joint_nested_p = stats::chi2_pvalue(a.joint_nested_chi2, 3);
  } else {
    a.joint_nested_p = 1;
  }
  a.single_ray_freq = ones[e_first] / F;
  return a;
}

// ---- exhaustive probability oracle ----------------------------------------

struct TupleOracle {
  std::vector<std::uint64_t> leaves;
  ConfigClass cls;
  std::uint64_t choices = 0;     // slope assignments with a non-null conditioning event
  std::uint64_t mismatches = 0;
};

// Compares the closed form with enumeration for every slope assignment to the tuple.
inline TupleOracle oracle_all_slopes(const LeafTree& tree, const std::vector<std::uint64_t>& leaves) {
  TupleOracle o;
  o.leaves = leaves;
  const int n = static_cast<int>(leaves.size()), N = tree.depth();
  if (n == 4)
    o.cls = classify4(tree, {leaves[0], leaves[1], leaves[2], leaves[3]});
  else
    o.cls = classify3(tree, {leaves[0], leaves[1], leaves[2]});
  JointEnumeration je(tree, leaves);
  const std::uint64_t keys = std::uint64_t{1} << (n * N), amask = (std::uint64_t{1} << N) - 1;
  std::vector<std::uint64_t> hist(keys, 0), marg(keys, 0);
  auto a_part = [&](std::uint64_t key) {
    std::uint64_t r = 0;
    for (int i : o.cls.A) r |= key & (amask << ((n - 1 - i) * N));
    return r;
  };
  for (const auto& [key, c] : je.histogram()) {
    hist[key] = c;
    marg[a_part(key)] += c;
  }
  std::vector<LeafSlope> tuple(n);
  for (std::uint64_t key = 0; key < keys; ++key) {
    std::uint64_t den = marg[a_part(key)];
    if (den == 0) continue;
    ++o.choices;
    for (int i = 0; i < n; ++i) tuple[i] = {leaves[i], (key >> ((n - 1 - i) * N)) & amask};
    std::uint64_t num = hist[key];
    bool admissible = sticky_admissible(tree, tuple);
    bool ok = admissible ? (num << o.cls.exponent) == den : num == 0;
    if (!ok) ++o.mismatches;
  }
  return o;
}

}  // namespace kakeya
