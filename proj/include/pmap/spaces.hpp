// Enumerable structured-output families.
//
// Three families are provided: rooted directed spanning trees over labeled
// nodes, DAGs with bounded in-degree, and fixed-size subsets of a universe.
// A structure is a strictly sorted list of components; the sorted list is
// also its canonical key (lexicographic order), which every decoder in the
// library uses to break ties.
//
// Component encodings:
//   Subset        component = element id in [0, universe)
//   SpanningTree  component = directed edge parent->child,
//   Dag           ordered-pair index from*(v-1) + (to < from ? to : to-1)
//
// Input bits and feature coordinates share one index (d = feature_dim()):
//   Subset        unordered element pairs i<j, triangular index
//   SpanningTree  unordered node pairs i<j; edge p->c activates pair {p,c}
//   Dag           ordered node pairs, identical to the edge index
// The joint feature map is phi(x,y)_p = 1{x_p = 1 and pair p is present in y}.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "pmap/linear.hpp"

namespace pmap {

using Component = std::uint16_t;
using FeatureIndex = std::uint32_t;

class Structure {
 public:
  using Storage = boost::container::small_vector<Component, 12>;

  Structure() = default;

  /// Sorts and deduplicates `parts`.
  static Structure canonical(std::span<const Component> parts) {
    Structure s;
    s.parts_.assign(parts.begin(), parts.end());
    std::sort(s.parts_.begin(), s.parts_.end());
    s.parts_.erase(std::unique(s.parts_.begin(), s.parts_.end()), s.parts_.end());
    return s;
  }
  static Structure canonical(std::initializer_list<Component> parts) {
    return canonical(std::span<const Component>(parts.begin(), parts.size()));
  }
  /// Caller guarantees strictly increasing input.
  static Structure from_sorted(Storage parts) {
    Structure s;
    s.parts_ = std::move(parts);
    return s;
  }

  std::span<const Component> components() const noexcept {
    return {parts_.data(), parts_.size()};
  }
  std::size_t size() const noexcept { return parts_.size(); }
  bool empty() const noexcept { return parts_.empty(); }
  bool contains(Component c) const {
    return std::binary_search(parts_.begin(), parts_.end(), c);
  }

  friend bool operator==(const Structure& a, const Structure& b) {
    return std::equal(a.parts_.begin(), a.parts_.end(), b.parts_.begin(), b.parts_.end());
  }
  friend std::strong_ordering operator<=>(const Structure& a, const Structure& b) {
    return std::lexicographical_compare_three_way(a.parts_.begin(), a.parts_.end(),
                                                  b.parts_.begin(), b.parts_.end());
  }

 private:
  Storage parts_;
};

/// |components(a) symmetric-difference components(b)|.
inline std::size_t symmetric_difference_size(const Structure& a, const Structure& b) {
  auto x = a.components();
  auto y = b.components();
  std::size_t i = 0, j = 0, common = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] == y[j]) {
      ++common, ++i, ++j;
    } else if (x[i] < y[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return x.size() + y.size() - 2 * common;
}

// ---------------------------------------------------------------------------
// Pair indexing

constexpr std::size_t unordered_pair_count(std::size_t n) noexcept { return n * (n - 1) / 2; }

/// Index of {i, j}, i < j < n, in row-major upper-triangular order.
constexpr std::size_t unordered_pair_index(std::size_t i, std::size_t j, std::size_t n) noexcept {
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

constexpr std::size_t ordered_pair_index(std::size_t from, std::size_t to, std::size_t n) noexcept {
  return from * (n - 1) + (to < from ? to : to - 1);
}

struct Edge {
  std::size_t from;
  std::size_t to;
  friend bool operator==(const Edge&, const Edge&) = default;
};

constexpr Edge ordered_pair_from_index(std::size_t idx, std::size_t n) noexcept {
  std::size_t from = idx / (n - 1);
  std::size_t r = idx % (n - 1);
  return {from, r < from ? r : r + 1};
}

// ---------------------------------------------------------------------------

/// Observed input x: one bit per feature coordinate.
struct StructuredInput {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  bool operator[](std::size_t i) const { return bits[i] != 0; }

  static StructuredInput from_string(std::string_view s) {
    StructuredInput x;
    x.bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw std::invalid_argument("bit string must contain only 0/1");
      x.bits.push_back(c == '1');
    }
    return x;
  }
  std::string to_string() const {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) s[i] = '1';
    return s;
  }

  friend bool operator==(const StructuredInput&, const StructuredInput&) = default;
};

enum class FamilyKind { SpanningTree, Dag, Subset };

/// Materialized Y(x) with a CSR table of the feature coordinates each output
/// can activate.
struct OutputSpace {
  std::vector<Structure> outputs;
  std::vector<std::uint32_t> pair_offsets{0};
  std::vector<FeatureIndex> pairs;

  std::size_t size() const noexcept { return outputs.size(); }
  std::span<const FeatureIndex> active_pairs(std::size_t i) const {
    return {pairs.data() + pair_offsets[i], pairs.data() + pair_offsets[i + 1]};
  }
  std::optional<std::size_t> index_of(const Structure& y) const {
    auto it = std::lower_bound(outputs.begin(), outputs.end(), y);
    if (it == outputs.end() || *it != y) return std::nullopt;
    return static_cast<std::size_t>(it - outputs.begin());
  }
};

class EnumerationBudgetExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

namespace detail {

inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Calls fn(span of r indices) for every r-combination of [0, n), in
/// lexicographic order.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t r, Fn&& fn) {
  if (r > n) return;
  std::array<std::size_t, 32> idx{};
  if (r > idx.size()) throw std::length_error("combination size too large");
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  while (true) {
    fn(std::span<const std::size_t>(idx.data(), r));
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == n - r + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// Kahn's algorithm on parent bitmasks; v <= 32.
inline bool parent_masks_acyclic(std::span<const std::uint32_t> parents) {
  const std::size_t v = parents.size();
  std::uint32_t done = 0;
  for (std::size_t round = 0; round < v; ++round) {
    bool progressed = false;
    for (std::size_t i = 0; i < v; ++i) {
      const std::uint32_t bit = 1u << i;
      if (!(done & bit) && (parents[i] & ~done) == 0) {
        done |= bit;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return done == (v == 32 ? ~0u : ((1u << v) - 1));
}

}  // namespace detail

class StructureFamily {
 public:
  static constexpr std::size_t kDefaultEnumerationBudget = 50'000;

  static StructureFamily spanning_tree(std::size_t nodes,
                                       std::size_t budget = kDefaultEnumerationBudget) {
    if (nodes < 2 || nodes > 32) throw std::invalid_argument("spanning tree: need 2..32 nodes");
    return StructureFamily(FamilyKind::SpanningTree, nodes, 1, 0, budget);
  }
  static StructureFamily dag(std::size_t nodes, std::size_t max_parents,
                             std::size_t budget = kDefaultEnumerationBudget) {
    if (nodes < 2 || nodes > 32) throw std::invalid_argument("dag: need 2..32 nodes");
    if (max_parents < 1) throw std::invalid_argument("dag: max_parents must be >= 1");
    return StructureFamily(FamilyKind::Dag, nodes, std::min(max_parents, nodes - 1), 0, budget);
  }
  static StructureFamily subset(std::size_t k, std::size_t universe,
                                std::size_t budget = kDefaultEnumerationBudget) {
    if (universe < 2 || universe > 4096) throw std::invalid_argument("subset: universe 2..4096");
    if (k < 1 || k > universe) throw std::invalid_argument("subset: need 1 <= k <= universe");
    return StructureFamily(FamilyKind::Subset, 0, 0, k, budget, universe);
  }

  /// Accepts "tree:V", "dag:V:P", "set:K:N" and the bare names "tree",
  /// "dag", "set" for the default experiment sizes (6 nodes; 5 nodes with 2
  /// parents; 4 of 15 elements).
  static StructureFamily parse(std::string_view spec,
                               std::size_t budget = kDefaultEnumerationBudget) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      auto pos = spec.find(':', start);
      parts.push_back(spec.substr(start, pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    auto num = [&](std::size_t i) {
      std::size_t v = 0;
      auto sv = parts.at(i);
      auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (ec != std::errc{} || p != sv.data() + sv.size())
        throw std::invalid_argument("bad family spec: " + std::string(spec));
      return v;
    };
    const auto& kind = parts[0];
    if ((kind == "tree" || kind == "spanning_tree") && parts.size() <= 2)
      return spanning_tree(parts.size() == 2 ? num(1) : 6, budget);
    if (kind == "dag" && (parts.size() == 1 || parts.size() == 3))
      return parts.size() == 3 ? dag(num(1), num(2), budget) : dag(5, 2, budget);
    if ((kind == "set" || kind == "subset") && (parts.size() == 1 || parts.size() == 3))
      return parts.size() == 3 ? subset(num(1), num(2), budget) : subset(4, 15, budget);
    throw std::invalid_argument("bad family spec: " + std::string(spec));
  }

  FamilyKind kind() const noexcept { return kind_; }
  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t max_parents() const noexcept { return max_parents_; }
  std::size_t subset_size() const noexcept { return k_; }
  std::size_t universe() const noexcept { return universe_; }
  std::size_t enumeration_budget() const noexcept { return budget_; }

  std::string name() const {
    switch (kind_) {
      case FamilyKind::SpanningTree: return "tree:" + std::to_string(nodes_);
      case FamilyKind::Dag:
        return "dag:" + std::to_string(nodes_) + ":" + std::to_string(max_parents_);
      case FamilyKind::Subset:
        return "set:" + std::to_string(k_) + ":" + std::to_string(universe_);
    }
    return {};
  }

  /// d: number of feature coordinates, equal to the input bit count.
  std::size_t feature_dim() const noexcept {
    switch (kind_) {
      case FamilyKind::SpanningTree: return unordered_pair_count(nodes_);
      case FamilyKind::Dag: return nodes_ * (nodes_ - 1);
      case FamilyKind::Subset: return unordered_pair_count(universe_);
    }
    return 0;
  }

  /// Number of distinct components a structure can be built from.
  std::size_t component_universe() const noexcept {
    return kind_ == FamilyKind::Subset ? universe_ : nodes_ * (nodes_ - 1);
  }

  std::size_t max_components() const noexcept {
    switch (kind_) {
      case FamilyKind::SpanningTree: return nodes_ - 1;
      case FamilyKind::Dag: return dag_max_edges();
      case FamilyKind::Subset: return k_;
    }
    return 0;
  }

  bool admissible_size(std::size_t n) const noexcept {
    switch (kind_) {
      case FamilyKind::SpanningTree: return n == nodes_ - 1;
      case FamilyKind::Dag: return n <= dag_max_edges();
      case FamilyKind::Subset: return n == k_;
    }
    return false;
  }

  /// Largest symmetric-difference size between two structures of the family.
  /// DAGs: the densest DAG for one topological order and the densest DAG for
  /// the reversed order share no edge, so the maximum is twice the edge cap.
  std::size_t hamming_normalizer() const noexcept {
    std::size_t n = 0;
    switch (kind_) {
      case FamilyKind::SpanningTree: n = 2 * (nodes_ - 1); break;
      case FamilyKind::Dag: n = 2 * dag_max_edges(); break;
      case FamilyKind::Subset: n = 2 * std::min(k_, universe_ - k_); break;
    }
    return std::max<std::size_t>(n, 1);
  }

  bool is_valid(const Structure& y) const {
    auto c = y.components();
    for (std::size_t i = 0; i + 1 < c.size(); ++i)
      if (c[i] >= c[i + 1]) return false;
    if (!c.empty() && c.back() >= component_universe()) return false;
    if (!admissible_size(c.size())) return false;
    switch (kind_) {
      case FamilyKind::Subset: return true;
      case FamilyKind::SpanningTree: return tree_valid(c);
      case FamilyKind::Dag: return dag_valid(c);
    }
    return false;
  }

  /// Calls fn(feature index) for each coordinate that y can activate, in a
  /// fixed order that is shared by every scoring path.
  template <class Fn>
  void for_each_active_pair(const Structure& y, Fn&& fn) const {
    auto c = y.components();
    switch (kind_) {
      case FamilyKind::Subset:
        for (std::size_t a = 0; a < c.size(); ++a)
          for (std::size_t b = a + 1; b < c.size(); ++b)
            fn(static_cast<FeatureIndex>(unordered_pair_index(c[a], c[b], universe_)));
        break;
      case FamilyKind::SpanningTree:
        for (Component e : c) {
          auto [p, ch] = ordered_pair_from_index(e, nodes_);
          fn(static_cast<FeatureIndex>(
              unordered_pair_index(std::min(p, ch), std::max(p, ch), nodes_)));
        }
        break;
      case FamilyKind::Dag:
        for (Component e : c) fn(static_cast<FeatureIndex>(e));
        break;
    }
  }

  /// Y(x) for any x (feasibility does not depend on the input bits). Built
  /// once per family and shared by copies; throws EnumerationBudgetExceeded
  /// rather than truncating.
  const OutputSpace& space() const {
    std::call_once(cache_->once, [this] { cache_->space = std::make_shared<OutputSpace>(build_space()); });
    return *cache_->space;
  }

  /// Nullptr when the family is too large to enumerate.
  const OutputSpace* try_space() const {
    try {
      return &space();
    } catch (const EnumerationBudgetExceeded&) {
      return nullptr;
    }
  }

  std::size_t output_count() const { return space().size(); }

  friend bool operator==(const StructureFamily& a, const StructureFamily& b) {
    return a.kind_ == b.kind_ && a.nodes_ == b.nodes_ && a.max_parents_ == b.max_parents_ &&
           a.k_ == b.k_ && a.universe_ == b.universe_;
  }

 private:
  struct Cache {
    std::once_flag once;
    std::shared_ptr<const OutputSpace> space;
  };

  StructureFamily(FamilyKind kind, std::size_t nodes, std::size_t max_parents, std::size_t k,
                  std::size_t budget, std::size_t universe = 0)
      : kind_(kind),
        nodes_(nodes),
        max_parents_(max_parents),
        k_(k),
        universe_(universe),
        budget_(budget),
        cache_(std::make_shared<Cache>()) {}

  std::size_t dag_max_edges() const noexcept {
    std::size_t e = 0;
    for (std::size_t t = 0; t < nodes_; ++t) e += std::min(t, max_parents_);
    return e;
  }

  bool tree_valid(std::span<const Component> c) const {
    std::array<int, 32> parent;
    parent.fill(-1);
    for (Component e : c) {
      auto [p, ch] = ordered_pair_from_index(e, nodes_);
      if (parent[ch] != -1) return false;
      parent[ch] = static_cast<int>(p);
    }
    // v-1 edges with in-degree <= 1 leave exactly one root; reject cycles.
    for (std::size_t start = 0; start < nodes_; ++start) {
      int cur = static_cast<int>(start);
      std::size_t steps = 0;
      while (parent[cur] != -1) {
        cur = parent[cur];
        if (++steps > nodes_) return false;
      }
    }
    return true;
  }

  bool dag_valid(std::span<const Component> c) const {
    std::array<std::uint32_t, 32> parents{};
    for (Component e : c) {
      auto [p, ch] = ordered_pair_from_index(e, nodes_);
      parents[ch] |= 1u << p;
    }
    for (std::size_t i = 0; i < nodes_; ++i)
      if (static_cast<std::size_t>(std::popcount(parents[i])) > max_parents_) return false;
    return detail::parent_masks_acyclic({parents.data(), nodes_});
  }

  void check_budget(std::size_t count) const {
    if (count > budget_)
      throw EnumerationBudgetExceeded(name() + ": output space exceeds enumeration budget of " +
                                      std::to_string(budget_));
  }

  OutputSpace build_space() const {
    std::vector<Structure> out;
    switch (kind_) {
      case FamilyKind::Subset: enumerate_subsets(out); break;
      case FamilyKind::SpanningTree: enumerate_trees(out); break;
      case FamilyKind::Dag: enumerate_dags(out); break;
    }
    std::sort(out.begin(), out.end());
    OutputSpace space;
    space.outputs = std::move(out);
    space.pair_offsets.reserve(space.outputs.size() + 1);
    for (const auto& y : space.outputs) {
      for_each_active_pair(y, [&](FeatureIndex p) { space.pairs.push_back(p); });
      space.pair_offsets.push_back(static_cast<std::uint32_t>(space.pairs.size()));
    }
    return space;
  }

  void enumerate_subsets(std::vector<Structure>& out) const {
    check_budget(detail::binomial(universe_, k_));
    detail::for_each_combination(universe_, k_, [&](std::span<const std::size_t> idx) {
      Structure::Storage s;
      for (auto i : idx) s.push_back(static_cast<Component>(i));
      out.push_back(Structure::from_sorted(std::move(s)));
    });
  }

  void enumerate_trees(std::vector<Structure>& out) const {
    // v^(v-1) rooted labeled trees.
    std::size_t count = 1;
    for (std::size_t i = 0; i + 1 < nodes_; ++i) {
      count *= nodes_;
      check_budget(count);
    }
    // Odometer over parent arrays; parent[i] == i marks the root.
    std::vector<std::size_t> parent(nodes_, 0);
    std::vector<Component> edges;
    while (true) {
      std::size_t roots = 0;
      for (std::size_t i = 0; i < nodes_; ++i) roots += parent[i] == i;
      if (roots == 1) {
        edges.clear();
        for (std::size_t i = 0; i < nodes_; ++i)
          if (parent[i] != i)
            edges.push_back(static_cast<Component>(ordered_pair_index(parent[i], i, nodes_)));
        auto y = Structure::canonical(edges);
        if (tree_valid(y.components())) out.push_back(std::move(y));
      }
      std::size_t i = 0;
      while (i < nodes_ && ++parent[i] == nodes_) parent[i++] = 0;
      if (i == nodes_) break;
    }
  }

  void enumerate_dags(std::vector<Structure>& out) const {
    // Each node independently picks a parent set of size <= max_parents.
    std::vector<std::vector<std::uint32_t>> options(nodes_);
    std::size_t work = 1;
    for (std::size_t i = 0; i < nodes_; ++i) {
      std::vector<std::size_t> others;
      for (std::size_t j = 0; j < nodes_; ++j)
        if (j != i) others.push_back(j);
      for (std::size_t s = 0; s <= max_parents_; ++s)
        detail::for_each_combination(others.size(), s, [&](std::span<const std::size_t> idx) {
          std::uint32_t mask = 0;
          for (auto t : idx) mask |= 1u << others[t];
          options[i].push_back(mask);
        });
      work *= options[i].size();
      if (work > 200 * budget_)
        throw EnumerationBudgetExceeded(name() + ": candidate parent configurations exceed budget");
    }
    std::vector<std::size_t> choice(nodes_, 0);
    std::vector<std::uint32_t> masks(nodes_);
    std::vector<Component> edges;
    while (true) {
      for (std::size_t i = 0; i < nodes_; ++i) masks[i] = options[i][choice[i]];
      if (detail::parent_masks_acyclic(masks)) {
        check_budget(out.size() + 1);
        edges.clear();
        for (std::size_t ch = 0; ch < nodes_; ++ch)
          for (std::size_t p = 0; p < nodes_; ++p)
            if (masks[ch] & (1u << p))
              edges.push_back(static_cast<Component>(ordered_pair_index(p, ch, nodes_)));
        out.push_back(Structure::canonical(edges));
      }
      std::size_t i = 0;
      while (i < nodes_ && ++choice[i] == options[i].size()) choice[i++] = 0;
      if (i == nodes_) break;
    }
  }

  FamilyKind kind_;
  std::size_t nodes_;
  std::size_t max_parents_;
  std::size_t k_;
  std::size_t universe_;
  std::size_t budget_;
  std::shared_ptr<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Operations

inline void check_input(const StructureFamily& family, const StructuredInput& x) {
  if (x.size() != family.feature_dim())
    throw std::invalid_argument("input has " + std::to_string(x.size()) + " bits, family " +
                                family.name() + " expects " +
                                std::to_string(family.feature_dim()));
}

/// All of Y(x), sorted by canonical key.
inline const std::vector<Structure>& enumerate_outputs(const StructureFamily& family,
                                                       const StructuredInput& x) {
  check_input(family, x);
  return family.space().outputs;
}

inline FeatureVector feature_map(const StructureFamily& family, const StructuredInput& x,
                                 const Structure& y) {
  check_input(family, x);
  if (!family.is_valid(y)) throw std::invalid_argument("feature_map: invalid structure");
  FeatureVector phi(family.feature_dim());
  family.for_each_active_pair(y, [&](FeatureIndex p) { phi[p] = x.bits[p] ? 1.0 : 0.0; });
  return phi;
}

/// <phi(x, y), w> without materializing phi.
inline double score(const StructureFamily& family, const StructuredInput& x, const Structure& y,
                    const WeightVector& w) {
  double s = 0.0;
  family.for_each_active_pair(y, [&](FeatureIndex p) {
    if (x.bits[p]) s += w[p];
  });
  return s;
}

/// Scores of every output of the enumerated space, in space order.
inline std::vector<double> score_space(const OutputSpace& space, const StructuredInput& x,
                                       const WeightVector& w) {
  std::vector<double> scores(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    double s = 0.0;
    for (FeatureIndex p : space.active_pairs(i))
      if (x.bits[p]) s += w[p];
    scores[i] = s;
  }
  return scores;
}

/// Normalized Hamming distance in [0, 1].
inline double hamming(const StructureFamily& family, const Structure& a, const Structure& b) {
  return static_cast<double>(symmetric_difference_size(a, b)) /
         static_cast<double>(family.hamming_normalizer());
}

namespace detail {

inline std::vector<Structure> neighbors_by_filter(const StructureFamily& family,
                                                  const OutputSpace& space, const Structure& y,
                                                  std::size_t k) {
  std::vector<Structure> out;
  for (const auto& cand : space.outputs) {
    auto dist = symmetric_difference_size(cand, y);
    if (dist > 0 && dist <= k) out.push_back(cand);
  }
  (void)family;
  return out;
}

inline std::size_t local_move_count(const StructureFamily& family, const Structure& y,
                                    std::size_t k) {
  const std::size_t in = y.size();
  const std::size_t outside = family.component_universe() - in;
  std::size_t total = 0;
  for (std::size_t a = 0; a <= std::min(k, in); ++a)
    for (std::size_t b = 0; a + b <= k; ++b) {
      if (a + b == 0 || !family.admissible_size(in - a + b)) continue;
      total += binomial(in, a) * binomial(outside, b);
    }
  return total;
}

/// Drops a components of y and adds b outside components for every
/// admissible (a, b) with 0 < a + b <= k; (y \ R) u A has distance a + b.
inline std::vector<Structure> neighbors_by_local_moves(const StructureFamily& family,
                                                       const Structure& y, std::size_t k) {
  auto comps = y.components();
  std::vector<Component> outside;
  for (std::size_t c = 0; c < family.component_universe(); ++c)
    if (!y.contains(static_cast<Component>(c))) outside.push_back(static_cast<Component>(c));

  std::vector<Structure> out;
  out.reserve(local_move_count(family, y, k));
  Structure::Storage kept, added, merged;
  for (std::size_t a = 0; a <= std::min(k, comps.size()); ++a) {
    for (std::size_t b = 0; a + b <= k; ++b) {
      if (a + b == 0 || !family.admissible_size(comps.size() - a + b)) continue;
      for_each_combination(comps.size(), a, [&](std::span<const std::size_t> drop) {
        kept.clear();
        std::size_t d = 0;
        for (std::size_t i = 0; i < comps.size(); ++i) {
          if (d < drop.size() && drop[d] == i) {
            ++d;
            continue;
          }
          kept.push_back(comps[i]);
        }
        for_each_combination(outside.size(), b, [&](std::span<const std::size_t> add) {
          added.clear();
          for (auto i : add) added.push_back(outside[i]);
          merged.resize(kept.size() + added.size());
          std::merge(kept.begin(), kept.end(), added.begin(), added.end(), merged.begin());
          auto cand = Structure::from_sorted(merged);
          if (family.is_valid(cand)) out.push_back(std::move(cand));
        });
      });
    }
  }
  std::vector<std::uint32_t> order(out.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out[a] < out[b]; });
  std::vector<Structure> sorted;
  sorted.reserve(out.size());
  for (auto i : order) sorted.push_back(std::move(out[i]));
  return sorted;
}

}  // namespace detail

/// neighbors_k(y) = { y' in Y(x) \ {y} : |y symmetric-difference y'| <= k },
/// sorted by canonical key. Generated by local moves; falls back to
/// filtering the enumerated space when that is cheaper.
inline std::vector<Structure> neighbors_k(const StructureFamily& family, const StructuredInput& x,
                                          const Structure& y, std::size_t k) {
  check_input(family, x);
  if (k == 0) return {};
  if (!family.is_valid(y)) throw std::invalid_argument("neighbors_k: invalid structure");
  const std::size_t moves = detail::local_move_count(family, y, k);
  if (const OutputSpace* space = family.try_space(); space && moves > space->size())
    return detail::neighbors_by_filter(family, *space, y, k);
  return detail::neighbors_by_local_moves(family, y, k);
}

}  // namespace pmap
