#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "listid/angluin.hpp"
#include "listid/collection.hpp"
#include "listid/error.hpp"
#include "listid/language.hpp"

namespace listid {

/// Ordered guesses of a list identifier.
struct GuessList {
  std::vector<Index> indices;
  /// Set when the list ends in the "no feasible index" fallback to index 1.
  bool fallback = false;
  /// Set when a bounded scan ran out before certifying the answer.
  bool approximate = false;

  std::size_t size() const { return indices.size(); }
  bool contains(Index i) const { return std::find(indices.begin(), indices.end(), i) != indices.end(); }

  /// Right-padded with index 1 up to arity k.
  GuessList padded(std::size_t k) const {
    GuessList out = *this;
    while (out.indices.size() < k) out.indices.push_back(1);
    return out;
  }

  friend bool operator==(const GuessList&, const GuessList&) = default;
};

inline bool identifies(const Collection& c, const GuessList& g, Index z) { return identifies(c, g.indices, z); }

/// Deterministic list identifier: maps the sample seen so far to a guess list.
using Identifier = std::function<GuessList(const Sample&)>;

inline constexpr std::size_t kDefaultScanCap = 1'000'000;

/// Index set of one recursion level of the list identifier, kept as a stack of
/// constraints instead of an explicit set: j belongs iff j exceeds the last
/// chosen index and, for every frame, L_j is a strict subset of the frame's
/// language and contains the frame's tell-tale.
class LazyIndexSet {
 public:
  struct Frame {
    Index parent;
    Language language;
    ElementSet telltale;
  };

  explicit LazyIndexSet(const Collection& c) : c_(&c) {}

  const Collection& collection() const { return *c_; }
  const std::vector<Frame>& frames() const { return frames_; }
  Index lower_bound() const { return frames_.empty() ? 0 : frames_.back().parent; }

  /// Restricts to strict subsets of L_parent containing the tell-tale.
  LazyIndexSet narrowed(Index parent, ElementSet telltale) const {
    LazyIndexSet out = *this;
    out.frames_.push_back({parent, c_->language_at(parent), std::move(telltale)});
    return out;
  }

  bool contains(Index j) const {
    if (j <= lower_bound()) return false;
    if (c_->size() && j > *c_->size()) return false;
    const Language lj = c_->language_at(j);
    return contains(lj);
  }

  bool contains(const Language& lj) const {
    for (const auto& f : frames_) {
      if (!proper_subset(lj, f.language)) return false;
      for (Element x : f.telltale) {
        if (!lj.contains(x)) return false;
      }
    }
    return true;
  }

  /// Decided exactly for explicit families and for canonical families with
  /// empty tell-tales.
  bool empty() const {
    if (c_->is_canonical()) {
      if (frames_.empty()) return false;
      if (!c_->k_max()) return false;
      // Every strict subset of Z\F_p in C_m has |F| <= m; none exist once |F_p| = m.
      return frames_.back().language.elements().size() >= *c_->k_max();
    }
    for (Index j = lower_bound() + 1; j <= *c_->size(); ++j) {
      if (contains(j)) return false;
    }
    return true;
  }

 private:
  const Collection* c_;
  std::vector<Frame> frames_;
};

struct FeasibleResult {
  std::optional<Index> index;
  bool approximate = false;
};

/// Least member i of I with S inside L_i and T_i^(level) inside S.
///
/// Canonical families (empty tell-tales) are answered in closed form: the
/// least consistent strict subset of Z\F_p is Z\(F_p + {p}) where p is the
/// first spiral position outside S and F_p. Explicit families are scanned in
/// full. Other cases scan up to scan_cap and flag the result as approximate.
inline FeasibleResult feasible_min_index(const LazyIndexSet& set, const Sample& s, unsigned level,
                                         const TelltaleAssignment& telltales,
                                         std::size_t scan_cap = kDefaultScanCap) {
  const Collection& c = set.collection();
  if (c.is_canonical() && telltales.is_all_empty()) {
    if (set.frames().empty()) return {1, false};
    if (set.empty()) return {std::nullopt, false};
    ElementSet f = set.frames().back().language.elements();
    const std::uint64_t p = s.first_missing_position_avoiding(spiral_positions(f));
    f.push_back(spiral_at(p));
    return {c.index_of_exclusion(make_set(std::move(f))), false};
  }
  auto feasible = [&](Index j) {
    if (!set.contains(j)) return false;
    const Language lj = c.language_at(j);
    for (Element x : s.distinct()) {
      if (!lj.contains(x)) return false;
    }
    const ElementSet* t = telltales.lookup(j, level);
    if (!t) return false;
    for (Element x : *t) {
      if (!s.contains(x)) return false;
    }
    return true;
  };
  const bool bounded = !c.size().has_value();
  const Index last = bounded ? set.lower_bound() + scan_cap : *c.size();
  for (Index j = set.lower_bound() + 1; j <= last; ++j) {
    if (feasible(j)) return {j, false};
  }
  return {std::nullopt, bounded};
}

/// One recursion level of the list identifier as seen by a trace.
struct ListIdentifyStep {
  unsigned level;
  LazyIndexSet set;
  std::optional<Index> chosen;
};

/// The recursive k-list identifier, unrolled: at each level choose the least
/// feasible index, then restrict to its strict subsets that contain its
/// tell-tale. An empty index set ends the list; an infeasible level appends
/// index 1 and ends it.
inline GuessList list_identify(const Collection& c, const TelltaleAssignment& telltales, unsigned k, const Sample& s,
                               std::vector<ListIdentifyStep>* trace = nullptr,
                               std::size_t scan_cap = kDefaultScanCap) {
  GuessList out;
  LazyIndexSet set(c);
  for (unsigned level = k; level >= 1; --level) {
    if (set.empty()) break;
    const FeasibleResult r = feasible_min_index(set, s, level, telltales, scan_cap);
    out.approximate = out.approximate || r.approximate;
    if (trace) trace->push_back({level, set, r.index});
    if (!r.index) {
      out.indices.push_back(1);
      out.fallback = true;
      break;
    }
    out.indices.push_back(*r.index);
    const ElementSet* t = telltales.lookup(*r.index, level);
    set = set.narrowed(*r.index, t ? *t : ElementSet{});
  }
  return out;
}

/// Convenience overload that assigns tell-tales on the fly.
inline GuessList list_identify(const Collection& c, unsigned k, const Sample& s) {
  return list_identify(c, assign_telltales(c, k), k, s);
}

/// Wraps the list identifier as a black box. The tell-tale assignment is
/// captured by value, so the collection must outlive the identifier.
inline Identifier make_list_identifier(const Collection& c, unsigned k, TelltaleAssignment telltales) {
  return [&c, k, t = std::move(telltales)](const Sample& s) { return list_identify(c, t, k, s); };
}

inline Identifier make_list_identifier(const Collection& c, unsigned k) {
  return make_list_identifier(c, k, assign_telltales(c, k));
}

inline Identifier constant_identifier(std::vector<Index> guesses) {
  return [g = std::move(guesses)](const Sample&) { return GuessList{g}; };
}

struct TranscriptEntry {
  std::size_t t;
  Element x;
  GuessList guesses;
};

using Transcript = std::vector<TranscriptEntry>;

inline Transcript run_identifier(const Identifier& id, const Enumeration& e, std::size_t horizon) {
  Transcript tr;
  tr.reserve(horizon);
  Sample s;
  const std::vector<Element> xs = e.prefix(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    s.push(xs[t - 1]);
    tr.push_back({t, xs[t - 1], id(s)});
  }
  return tr;
}

inline Transcript run_identifier(const Collection& c, unsigned k, const Enumeration& e, std::size_t horizon) {
  return run_identifier(make_list_identifier(c, k), e, horizon);
}

/// Least t* after which every recorded list identifies L_z; nullopt when the
/// last entry fails (or the transcript is empty).
inline std::optional<std::size_t> converged_at(const Transcript& tr, const Collection& c, Index z) {
  if (tr.empty()) return std::nullopt;
  std::optional<std::size_t> since;
  for (const auto& e : tr) {
    if (identifies(c, e.guesses, z)) {
      if (!since) since = e.t;
    } else {
      since.reset();
    }
  }
  return since;
}

/// The k most frequent indices, ordered by count then smaller index.
inline GuessList topk_multiset(std::span<const Index> multiset, std::size_t k) {
  std::map<Index, std::size_t> counts;
  for (Index i : multiset) ++counts[i];
  std::vector<std::pair<Index, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  GuessList out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.indices.push_back(ranked[i].first);
  return out;
}

/// Concatenation of one single-guess identifier per stratum.
inline Identifier stratified_identifier(std::vector<Identifier> strata) {
  return [parts = std::move(strata)](const Sample& s) {
    GuessList out;
    for (const auto& part : parts) {
      GuessList g = part(s);
      out.indices.insert(out.indices.end(), g.indices.begin(), g.indices.end());
      out.fallback = out.fallback || g.fallback;
      out.approximate = out.approximate || g.approximate;
    }
    return out;
  };
}

}  // namespace listid
