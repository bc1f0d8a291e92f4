// Command line front end for the library and the experiment harness.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "kakeya/kakeya.hpp"

using namespace kakeya;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  int M = 3;
  int N = 0;
  std::string N_range;
  int d = 1;
  std::string curve = "affine";
  std::string selector = "middle";
  int samples = 0;
  int threads = 1;
  std::string out_dir;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--M", c.M, "Cantor base")->check(CLI::Range(2, 64));
  app->add_option("--N", c.N, "single tree height")->check(CLI::Range(1, 30));
  app->add_option("--N-range", c.N_range, "heights as lo..hi");
  app->add_option("--d", c.d, "transverse dimension")->check(CLI::Range(1, 8));
  app->add_option("--curve", c.curve, "affine, moment or a JSON file");
  app->add_option("--selector", c.selector, "middle, varying or a JSON file");
  app->add_option("--samples", c.samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", c.out_dir, "directory for JSON and CSV records");
  app->add_option("--out", c.out, "write the output here instead of stdout");
}

std::vector<int> parse_range(const std::string& s) {
  auto dots = s.find("..");
  if (dots == std::string::npos) throw ConfigError("--N-range expects lo..hi");
  int lo = std::stoi(s.substr(0, dots)), hi = std::stoi(s.substr(dots + 2));
  if (lo < 1 || hi < lo) throw ConfigError("bad --N-range " + s);
  std::vector<int> out;
  for (int n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

// Config file first, then explicit flags on top.
ExperimentConfig resolve(const CLI::App* app, const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = config_from_json(read_json_file(c.config));
  auto given = [&](const char* name) { return app->count(name) > 0; };
  if (given("--seed")) cfg.seed = c.seed;
  if (given("--M")) cfg.M = c.M;
  if (given("--d")) cfg.d = c.d;
  if (given("--curve")) cfg.curve = c.curve;
  if (given("--selector")) cfg.selector = c.selector;
  if (given("--samples")) cfg.samples = c.samples;
  if (given("--threads")) cfg.threads = c.threads;
  if (given("--out-dir")) cfg.out_dir = c.out_dir;
  if (given("--N-range")) cfg.N_values = parse_range(c.N_range);
  if (given("--N")) cfg.N_values = {c.N};
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void emit(const ExperimentConfig& cfg, const RunResult& r) {
  write_result(cfg.out_dir, r);
  std::cout << r.csv;
  std::cerr << "wrote " << cfg.out_dir << "/" << r.name << ".{json,csv}\n";
}

std::vector<Rational> parse_point(const std::string& s) {
  std::vector<Rational> x;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) x.push_back(parse_rational(item));
  return x;
}

PercTree random_subtree(std::uint64_t seed, int M, int height, double keep) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  PercTree t;
  std::vector<int> frontier{0};
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

int main(int argc, char** argv) {
  CLI::App app{"Sticky Kakeya construction: simulation and verification"};
  app.require_subcommand(1);
  Common c;

  auto* cantor = app.add_subcommand("cantor", "basic intervals, representatives and slopes at level N (JSON)");
  auto* slopes = app.add_subcommand("slopes", "(t, tau(t), sigma(t)) for one sampled field (JSON)");
  auto* volume = app.add_subcommand("volume", "per-slab volumes of one sampled set (CSV)");
  auto* sim = app.add_subcommand("simulate", "near and far volume tables over N");
  auto* moments = app.add_subcommand("slab-moments", "first and second moments of slab overlaps");
  auto* lower = app.add_subcommand("lower-bound", "lower quantile of the near volume");
  auto* upper = app.add_subcommand("upper-bound", "far volume against the resistance integral");
  auto* oracle = app.add_subcommand("prob-oracle", "closed-form configuration probabilities against enumeration (CSV)");
  auto* perc = app.add_subcommand("percolate", "survival of a tree: exact, Monte Carlo, Lyons bounds (JSON)");
  auto* resist = app.add_subcommand("resist", "resistance and shorted resistance of a tree (JSON)");
  auto* verify = app.add_subcommand("verify", "invariant suite; exit 1 on a violation");
  for (auto* s : {cantor, slopes, volume, sim, moments, lower, upper, oracle, perc, resist, verify}) add_common(s, c);

  int S = 4;
  std::string range = "near";
  volume->add_option("--samples-per-slab", S, "midpoint samples per slab")->check(CLI::PositiveNumber);
  volume->add_option("--range", range, "near or far slab")->check(CLI::IsMember({"near", "far"}));

  std::string tuples = "random 2000";
  oracle->add_option("--tuples", tuples, "'exhaustive' or 'random K'");

  std::string tree_kind = "full-binary", point;
  int height = 2;
  double keep = 0.5;
  for (auto* s : {perc, resist}) {
    s->add_option("--tree", tree_kind, "full-binary, random or from-poss")
        ->check(CLI::IsMember({"full-binary", "random", "from-poss"}));
    s->add_option("--height", height, "height of a full-binary or random tree")->check(CLI::Range(1, 16));
    s->add_option("--keep", keep, "random tree: probability of keeping each extra child")->check(CLI::Range(0.0, 1.0));
    s->add_option("--point", point, "from-poss: far-slab point x1,x2,... (rationals like 5/2 allowed)");
  }

  std::string target = "all";
  verify->add_option("target", target, "all, tree, far or iid")->check(CLI::IsMember({"all", "tree", "far", "iid"}));

  CLI11_PARSE(app, argc, argv);
  auto* sub = app.get_subcommands().front();

  try {
    ExperimentConfig cfg = resolve(sub, c);
    const int N = cfg.N_values.front();

    if (sub == cantor) {
      CantorSpec spec(cfg.M, N, make_selector(cfg.selector, cfg.M));
      auto ds = direction_set(spec, make_curve(cfg.curve, cfg.d));
      json j{{"M", cfg.M}, {"N", N}, {"selector", spec.selector_name()}, {"curve", ds.curve.name()}};
      for (const auto& I : build_level(spec, N))
        j["intervals"].push_back({{"binary", I.binary}, {"digits", I.digits}, {"left", rational_json(I.left())},
                                  {"right", rational_json(I.right())}});
      for (const auto& p : ds.points) {
        json s = json::array();
        for (const auto& q : p.slope) s.push_back(rational_json(q));
        j["slopes"].push_back({{"binary", p.binary}, {"representative", rational_json(p.param)}, {"slope", s}});
      }
      j["bilipschitz"] = {{"c", ds.lip.c}, {"C", ds.lip.C}};
      write_text(c.out, j.dump(2) + "\n");
    } else if (sub == slopes) {
      Scene sc(cfg, N);
      StickyField field(cfg.seed);
      auto addr = tau_all(field, sc.roots);
      json j{{"seed", cfg.seed}, {"M", cfg.M}, {"N", N}, {"d", cfg.d}};
      for (std::uint64_t t = 0; t < addr.size(); ++t) {
        json s = json::array();
        for (const auto& q : sc.ds.points[addr[t]].slope) s.push_back(to_string(q));
        j["leaves"].push_back({{"t", t}, {"tau", addr[t]}, {"sigma", s}});
      }
      write_text(c.out, j.dump(1) + "\n");
    } else if (sub == volume) {
      Scene sc(cfg, N);
      const double lo = range == "near" ? 0.0 : sc.params.C0;
      auto v = union_volume(sc.family(StickyField(cfg.seed)), sc.params.side, lo, lo + 1.0, S, cfg.seed, true);
      std::ostringstream csv;
      csv << "slab,x1_lo,volume\n";
      for (std::size_t k = 0; k < v.per_slab.size(); ++k)
        csv << k << "," << lo + static_cast<double>(k) / sc.params.side << "," << v.per_slab[k] << "\n";
      csv << "total,," << v.volume << "\n";
      write_text(c.out, csv.str());
    } else if (sub == sim) {
      emit(cfg, simulate(cfg, volume_tables(cfg)));
    } else if (sub == moments) {
      emit(cfg, slab_moments_report(cfg, slab_moments(cfg)));
    } else if (sub == lower) {
      emit(cfg, lower_bound_report(cfg, volume_tables(cfg)));
    } else if (sub == upper) {
      auto tables = volume_tables(cfg);
      emit(cfg, upper_bound_report(cfg, upper_bound_rows(cfg, tables), resistance_growth(cfg)));
    } else if (sub == oracle) {
      LeafTree tree(ipow(cfg.M, cfg.d), N);
      std::vector<std::vector<std::uint64_t>> list;
      const std::uint64_t L = tree.leaf_count();
      if (tuples == "exhaustive") {
        if (L > 64) throw ResourceError("exhaustive tuples need at most 64 leaves");
        for (std::uint64_t a = 0; a < L; ++a)
          for (std::uint64_t b = a + 1; b < L; ++b)
            for (std::uint64_t x = b + 1; x < L; ++x) {
              for (std::uint64_t y = x + 1; y < L; ++y) {
                list.push_back({a, b, x, y});
                list.push_back({a, x, b, y});
                list.push_back({a, y, b, x});
              }
              list.push_back({a, b, x});
              list.push_back({b, a, x});
              list.push_back({x, a, b});
            }
      } else {
        std::istringstream in(tuples);
        std::string word;
        std::uint64_t K = 0;
        in >> word >> K;
        if (word != "random" || K == 0) throw ConfigError("--tuples expects 'exhaustive' or 'random K'");
        std::mt19937_64 rng(cfg.seed);
        for (std::uint64_t i = 0; i < K; ++i) {
          std::vector<std::uint64_t> t;
          while (t.size() < (i % 2 ? 4u : 3u)) {
            auto x = rng() % L;
            if (std::find(t.begin(), t.end(), x) == t.end()) t.push_back(x);
          }
          list.push_back(t);
        }
      }
      std::ostringstream csv;
      csv << "tuple,class,closed_form,slope_choices,mismatches,match\n";
      std::uint64_t bad = 0;
      for (const auto& t : list) {
        auto o = oracle_all_slopes(tree, t);
        std::string key;
        for (auto x : t) key += (key.empty() ? "" : " ") + std::to_string(x);
        csv << key << "," << o.cls.name() << "," << to_string(half_pow(o.cls.exponent)) << "," << o.choices << ","
            << o.mismatches << "," << (o.mismatches == 0) << "\n";
        bad += o.mismatches;
      }
      write_text(c.out, csv.str());
      if (bad) throw InvariantViolation(std::to_string(bad) + " closed-form mismatches");
    } else if (sub == perc || sub == resist) {
      PercTree t;
      json j{{"tree", tree_kind}};
      if (tree_kind == "full-binary") {
        t = full_tree(2, height);
      } else if (tree_kind == "random") {
        t = random_subtree(cfg.seed, cfg.M, height, keep);
      } else {
        Scene sc(cfg, N);
        auto x = point.empty() ? far_point(sc.params, sc.ds, cfg.seed, true) : parse_point(point);
        if (static_cast<int>(x.size()) != cfg.d + 1) throw ConfigError("--point needs d+1 coordinates");
        auto ps = poss_scan(sc.params, sc.ds, x);
        if (ps.entries.empty()) throw DomainError("Poss is empty at this point");
        t = tree_from_leaves(sc.roots, ps.leaves());
        json xs = json::array();
        for (const auto& q : x) xs.push_back(to_string(q));
        j["point"] = xs;
        j["poss"] = ps.leaves();
      }
      Rational R = resistance(t);
      j["vertices"] = t.size();
      j["height"] = t.max_height();
      j["resistance"] = rational_json(R);
      if (t.leaves_level()) j["shorted_resistance"] = rational_json(shorted_resistance(t));
      if (sub == perc) {
        auto [lo, hi] = lyons_bounds(R);
        Rational P = survival_exact(t);
        auto mc = survival_mc(t, cfg.seed, c.samples > 0 ? c.samples : 100000);
        j["survival"] = rational_json(P);
        j["lyons_bounds"] = {rational_json(lo), rational_json(hi)};
        j["monte_carlo"] = {{"mean", mc.mean}, {"ci99", {mc.lo, mc.hi}}, {"samples", mc.samples}};
        if (P < lo || P > hi) throw InvariantViolation("survival outside the resistance bounds");
      }
      write_text(c.out, j.dump(2) + "\n");
    } else if (sub == verify) {
      bool ok = true;
      if (target == "all" || target == "tree") {
        CantorSpec spec(cfg.M, N, make_selector(cfg.selector, cfg.M));
        auto psi = build_psi(spec);
        LeafTree bin(2, N);
        std::size_t checked = 0, bad = 0;
        for (int k = 0; k <= N; ++k)
          for (std::uint64_t b = 0; b < bin.pow(k); ++b, ++checked)
            bad += psi.forward(psi.backward(bin.vertex({k, b}))) != bin.vertex({k, b});
        std::vector<std::pair<Vertex, Vertex>> map;
        for (std::uint64_t b = 0; b < bin.pow(N); ++b) map.emplace_back(bin.vertex({N, b}), psi.backward(bin.vertex({N, b})));
        bool sticky = N > 8 || is_sticky(map);
        std::printf("tree: %zu vertices, psi round-trip failures %zu, psi^-1 sticky on leaves %s\n", checked, bad,
                    sticky ? "yes" : "NO");
        ok = ok && bad == 0 && sticky;
      }
      if (target == "all" || target == "far") {
        Scene sc(cfg, N);
        std::size_t multi = 0, nonsticky = 0, roots = 0;
        const int pts = c.samples > 0 ? c.samples : 200;
        for (int i = 0; i < pts; ++i) {
          auto x = far_point(sc.params, sc.ds, stream_seed(cfg.seed, 0x766679ULL, i), i % 2 == 1);
          auto a = audit_far_slopes(sc.params, poss_scan(sc.params, sc.ds, x));
          roots += a.leaves;
          multi += a.multi_witness;
          nonsticky += !a.sticky;
        }
        std::printf("far: %d points, %zu roots, multi-witness %zu, non-sticky %zu\n", pts, roots, multi, nonsticky);
        ok = ok && multi == 0 && nonsticky == 0;
      }
      if (target == "all" || target == "iid") {
        if (c.samples > 0) cfg.fields = c.samples;
        auto a = percolation_iid_audit(cfg, N);
        std::printf("iid: %zu roots, %zu edges, consistency violations %zu, p pooled %.4f disjoint %.4f nested %.4f\n",
                    a.poss_leaves, a.edges, a.consistency_violations, a.pooled_p, a.joint_disjoint_p, a.joint_nested_p);
        ok = ok && a.consistency_violations == 0;
      }
      return ok ? 0 : 1;
    }
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
