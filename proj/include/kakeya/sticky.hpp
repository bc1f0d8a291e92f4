#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kakeya/cantor.hpp"
#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"
#include "kakeya/tree.hpp"

namespace kakeya {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for sample `index` of stream `tag` derived from a base seed.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
  return mix64(mix64(base ^ mix64(tag)) + index);
}

// Uniform double in [0,1) from a hash value.
inline double unit_double(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Bit X_w attached to the edge ending at vertex w; keyed on (seed, base, path).
class StickyField {
 public:
  explicit StickyField(std::uint64_t seed) : seed_(seed) {}

  int bit(std::uint64_t base, int level, std::uint64_t prefix) const {
    std::uint64_t h = mix64(seed_ ^ mix64(base));
    h = mix64(h + static_cast<std::uint64_t>(level) * 0x632be59bd9b4e019ULL);
    h = mix64(h ^ prefix);
    return static_cast<int>(h >> 63);
  }
  int bit(const LeafTree& tree, Node n) const { return bit(tree.base(), n.height, n.prefix); }
  int bit(const Vertex& w) const {
    std::uint64_t p = 0;
    for (auto x : w.digits) p = p * w.base + x;
    return bit(w.base, w.height(), p);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// Explicit bits on a finite set of edges, used by exhaustive enumeration.
class TableField {
 public:
  void set(Node n, int b) { bits_[n] = b; }
  int bit(const LeafTree&, Node n) const {
    auto it = bits_.find(n);
    return it == bits_.end() ? 0 : it->second;
  }

 private:
  std::map<Node, int> bits_;
};

// Field that is identically zero.
struct ZeroField {
  int bit(const LeafTree&, Node) const { return 0; }
};

// tau(t) as a binary address (first component most significant).
template <class Field>
std::uint64_t tau_index(const Field& field, const LeafTree& tree, std::uint64_t leaf, int height) {
  std::uint64_t out = 0;
  const std::uint64_t anc = leaf;
  for (int j = 1; j <= height; ++j) out = out * 2 + field.bit(tree, tree.node(anc, j));
  return out;
}

template <class Field>
Vertex tau_of(const Field& field, const LeafTree& tree, const Vertex& t) {
  Node n = tree.node_of(t);
  Vertex out{2, std::vector<std::uint32_t>(t.height())};
  for (int j = 1; j <= t.height(); ++j) {
    Node pre{j, n.prefix / tree.pow(t.height() - j)};
    out.digits[j - 1] = static_cast<std::uint32_t>(field.bit(tree, pre));
  }
  return out;
}

// tau for every leaf at once, sharing work along common prefixes.
template <class Field>
std::vector<std::uint32_t> tau_all(const Field& field, const LeafTree& tree) {
  std::vector<std::uint32_t> cur{0}, next;
  for (int k = 1; k <= tree.depth(); ++k) {
    next.resize(cur.size() * tree.base());
    for (std::uint64_t p = 0; p < next.size(); ++p)
      next[p] = cur[p / tree.base()] * 2 + static_cast<std::uint32_t>(field.bit(tree, Node{k, p}));
    cur.swap(next);
  }
  return cur;
}

// sigma = gamma o Phi o psi^{-1} o tau on the leaves of T_N([0,1)^d; M).
class SlopeAssignment {
 public:
  explicit SlopeAssignment(const DirectionSet& dirs)
      : dirs_(&dirs), tree_(ipow(dirs.M(), dirs.d()), dirs.N()) {}

  const LeafTree& tree() const { return tree_; }
  const DirectionSet& directions() const { return *dirs_; }

  template <class Field>
  std::vector<std::uint32_t> addresses(const Field& f) const { return tau_all(f, tree_); }

  template <class Field>
  const Direction& sigma(const Field& f, std::uint64_t leaf) const {
    return dirs_->points[tau_index(f, tree_, leaf, tree_.depth())];
  }

 private:
  const DirectionSet* dirs_;
  LeafTree tree_;
};

// Leaves t with target binary addresses alpha (Cantor leaves via psi).
using LeafSlope = std::pair<std::uint64_t, std::uint64_t>;

inline int binary_common_height(std::uint64_t a, std::uint64_t b, int N) {
  int k = 0;
  while (k < N && ((a >> (N - k - 1)) == (b >> (N - k - 1)))) ++k;
  return k;
}

// Pairwise condition plus the full-tuple condition. The pairwise test already
// decides existence of a sticky tau: edges get bits from any leaf through them,
// and consistency of those bits is exactly the pairwise inequality.
inline bool sticky_admissible(const LeafTree& tree, const std::vector<LeafSlope>& tuple) {
  const int N = tree.depth();
  for (std::size_t i = 0; i < tuple.size(); ++i)
    for (std::size_t j = i + 1; j < tuple.size(); ++j) {
      if (tuple[i].first == tuple[j].first) {
        if (tuple[i].second != tuple[j].second) return false;
        continue;
      }
      if (binary_common_height(tuple[i].second, tuple[j].second, N) <
          tree.yca_height(tuple[i].first, tuple[j].first))
        return false;
    }
  if (tuple.size() > 2) {
    int ht = N, ha = N;
    for (std::size_t i = 1; i < tuple.size(); ++i) {
      ht = std::min(ht, tree.yca_height(tuple[0].first, tuple[i].first));
      ha = std::min(ha, binary_common_height(tuple[0].second, tuple[i].second, N));
    }
    if (ha < ht) return false;
  }
  return true;
}

// Distinct edges (named by their lower vertex) on the rays of the given leaves.
inline std::vector<Node> ray_edges(const LeafTree& tree, const std::vector<std::uint64_t>& leaves) {
  std::vector<Node> out;
  for (auto t : leaves)
    for (int k = 1; k <= tree.depth(); ++k) out.push_back(tree.node(t, k));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Joint law of (tau(t_1), ..., tau(t_n)) obtained by running over every bit
// assignment on the union of the rays.
class JointEnumeration {
 public:
  static constexpr int kEdgeBudget = 30;

  JointEnumeration(const LeafTree& tree, std::vector<std::uint64_t> leaves)
      : leaves_(std::move(leaves)), N_(tree.depth()) {
    auto edges = ray_edges(tree, leaves_);
    E_ = static_cast<int>(edges.size());
    if (E_ > kEdgeBudget) throw ResourceError("edge budget exceeded: " + std::to_string(E_) + " edges");
    if (static_cast<int>(leaves_.size()) * N_ > 64) throw ResourceError("too many leaves for packed keys");
    std::vector<std::vector<int>> idx(leaves_.size(), std::vector<int>(N_));
    for (std::size_t i = 0; i < leaves_.size(); ++i)
      for (int k = 1; k <= N_; ++k)
        idx[i][k - 1] = static_cast<int>(
            std::lower_bound(edges.begin(), edges.end(), tree.node(leaves_[i], k)) - edges.begin());
    const std::uint64_t total = std::uint64_t{1} << E_;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < leaves_.size(); ++i)
        for (int k = 0; k < N_; ++k) key = (key << 1) | ((mask >> idx[i][k]) & 1u);
      ++counts_[key];
    }
  }

  int edges() const { return E_; }
  std::uint64_t total() const { return std::uint64_t{1} << E_; }

  // Number of assignments realizing targets on the leaves flagged in `use`.
  std::uint64_t count(const std::vector<std::uint64_t>& targets, const std::vector<bool>& use) const {
    std::uint64_t c = 0;
    for (const auto& [key, n] : counts_) {
      bool ok = true;
      for (std::size_t i = 0; i < leaves_.size() && ok; ++i) {
        if (!use[i]) continue;
        std::uint64_t a = (key >> ((leaves_.size() - 1 - i) * N_)) & ((std::uint64_t{1} << N_) - 1);
        ok = a == targets[i];
      }
      if (ok) c += n;
    }
    return c;
  }

  std::uint64_t count(const std::vector<std::uint64_t>& targets) const {
    return count(targets, std::vector<bool>(leaves_.size(), true));
  }

  const std::unordered_map<std::uint64_t, std::uint64_t>& histogram() const { return counts_; }
  std::uint64_t pack(const std::vector<std::uint64_t>& targets) const {
    std::uint64_t key = 0;
    for (auto a : targets) key = (key << N_) | a;
    return key;
  }

 private:
  std::vector<std::uint64_t> leaves_;
  int N_;
  int E_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

inline Rational enumerate_realizations(const LeafTree& tree, const std::vector<std::uint64_t>& leaves,
                                       const std::vector<std::uint64_t>& targets) {
  JointEnumeration je(tree, leaves);
  return from_u64(je.count(targets), je.total());
}

// P(targets on all leaves | targets on the leaves flagged in `given`); nullopt when
// the conditioning event has probability zero.
inline std::optional<Rational> enumerate_conditional(const LeafTree& tree,
                                                     const std::vector<std::uint64_t>& leaves,
                                                     const std::vector<std::uint64_t>& targets,
                                                     const std::vector<bool>& given) {
  JointEnumeration je(tree, leaves);
  auto den = je.count(targets, given);
  if (den == 0) return std::nullopt;
  return from_u64(je.count(targets), den);
}

}  // namespace kakeya
