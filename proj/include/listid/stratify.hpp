#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "listid/angluin.hpp"
#include "listid/collection.hpp"
#include "listid/error.hpp"
#include "listid/identify.hpp"
#include "listid/language.hpp"

namespace listid {

using Edge = std::pair<Index, Index>;

/// Edges (i, j) over I with L_j a strict subset of L_i containing T_i^(level).
inline std::vector<Edge> peel_relation(const Collection& c, const std::vector<Index>& indices, unsigned level,
                                       const TelltaleAssignment& telltales) {
  std::vector<Language> langs;
  langs.reserve(indices.size());
  for (Index i : indices) langs.push_back(c.language_at(i));
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < indices.size(); ++a) {
    const ElementSet* t = telltales.lookup(indices[a], level);
    for (std::size_t b = 0; b < indices.size(); ++b) {
      if (!proper_subset(langs[b], langs[a])) continue;
      // An unassigned tell-tale never certifies anything, so it cannot be escaped.
      bool covers = t != nullptr;
      if (t) {
        for (Element x : *t) covers = covers && langs[b].contains(x);
      }
      if (covers || !t) edges.emplace_back(indices[a], indices[b]);
    }
  }
  return edges;
}

/// Partition of a collection into k strata, listed from level k down to 1.
///
/// Explicit families carry index lists. Canonical families carry, per
/// stratum, the exclusion-set size it holds (or none for an empty stratum).
struct Stratification {
  unsigned k = 0;
  bool canonical = false;
  std::vector<std::vector<Index>> strata;
  std::vector<std::optional<std::size_t>> exclusion_sizes;
  TelltaleAssignment telltales = TelltaleAssignment::all_empty();

  unsigned level_of(std::size_t stratum) const { return k - static_cast<unsigned>(stratum); }

  bool stratum_contains(const Collection& c, std::size_t stratum, Index i) const {
    if (canonical) {
      const auto& sz = exclusion_sizes[stratum];
      return sz && c.exclusion_at(i).size() == *sz;
    }
    const auto& s = strata[stratum];
    return std::find(s.begin(), s.end(), i) != s.end();
  }

  /// Members with index <= n.
  std::vector<Index> members_upto(const Collection& c, std::size_t stratum, Index n) const {
    std::vector<Index> out;
    if (canonical) {
      for (Index i = 1; i <= n; ++i) {
        if (stratum_contains(c, stratum, i)) out.push_back(i);
      }
      return out;
    }
    for (Index i : strata[stratum]) {
      if (i <= n) out.push_back(i);
    }
    return out;
  }
};

/// Greedy peeling: at each level from k down to 1, the indices with no
/// incoming edge form the stratum and are removed. The residue after level 1
/// must be empty.
inline Stratification stratify_generic(const Collection& c, unsigned k, TelltaleAssignment telltales) {
  if (c.is_canonical()) throw Error(ErrorCode::UndecidableFamily, "generic peeling needs an explicit family");
  Stratification out;
  out.k = k;
  out.telltales = std::move(telltales);
  std::vector<Index> rest;
  for (Index i = 1; i <= *c.size(); ++i) rest.push_back(i);
  for (unsigned level = k; level >= 1; --level) {
    std::set<Index> targets;
    for (const auto& e : peel_relation(c, rest, level, out.telltales)) targets.insert(e.second);
    std::vector<Index> stratum;
    std::vector<Index> next;
    for (Index i : rest) (targets.count(i) ? next : stratum).push_back(i);
    out.strata.push_back(std::move(stratum));
    if (level == 1 && !next.empty()) {
      throw Error(ErrorCode::ResidueNonEmpty, std::to_string(next.size()) + " indices left after level 1");
    }
    rest = std::move(next);
  }
  return out;
}

/// Stratification of a family satisfying the level-k predicate. Canonical
/// families are split by exclusion-set size: level k - s holds |F| = s.
inline Stratification stratify(const Collection& c, unsigned k) {
  const AngluinCheck check = check_k_angluin(c, k);
  if (!check.holds) {
    throw Error(ErrorCode::ConditionNotSatisfied, c.describe() + " fails level " + std::to_string(k));
  }
  if (!c.is_canonical()) return stratify_generic(c, k, assign_telltales(c, k));
  Stratification out;
  out.k = k;
  out.canonical = true;
  const unsigned m = *c.k_max();
  for (unsigned s = 0; s < k; ++s) {
    out.strata.emplace_back();
    out.exclusion_sizes.push_back(s <= m ? std::optional<std::size_t>(s) : std::nullopt);
  }
  return out;
}

/// Base predicate inside a stratum: no member contains the tell-tale of a
/// strict superset member.
inline bool verify_stratum_identifiable(const Collection& c, const std::vector<Index>& stratum, unsigned level,
                                        const TelltaleAssignment& telltales) {
  return peel_relation(c, stratum, level, telltales).empty();
}

/// Single-guess identifier for one stratum: the least member consistent with
/// the sample whose tell-tale has been seen, or index 1.
inline Identifier stratum_identifier(const Collection& c, const Stratification& st, std::size_t stratum) {
  if (st.canonical) {
    const auto size = st.exclusion_sizes[stratum];
    return [&c, size](const Sample& s) {
      if (!size) return GuessList{};
      // Least index with |F| = size avoiding the sample: the first `size` unseen spiral positions.
      ElementSet f;
      std::uint64_t p = 0;
      for (std::size_t n = 0; n < *size; ++n) {
        p = s.first_missing_position(p + 1);
        f.push_back(spiral_at(p));
      }
      return GuessList{{c.index_of_exclusion(make_set(std::move(f)))}};
    };
  }
  return [&c, &st, stratum](const Sample& s) {
    const auto& members = st.strata[stratum];
    if (members.empty()) return GuessList{};
    const unsigned level = st.level_of(stratum);
    for (Index i : members) {
      const Language& l = c.languages()[i - 1];
      bool ok = std::all_of(s.distinct().begin(), s.distinct().end(), [&](Element x) { return l.contains(x); });
      const ElementSet* t = st.telltales.lookup(i, level);
      ok = ok && t && std::all_of(t->begin(), t->end(), [&](Element x) { return s.contains(x); });
      if (ok) return GuessList{{i}};
    }
    return GuessList{{1}, true};
  };
}

/// One guess per non-empty stratum, in stratum order. The stratification
/// and collection must outlive the identifier.
inline Identifier stratified_identifier(const Collection& c, const Stratification& st) {
  std::vector<Identifier> parts;
  for (std::size_t s = 0; s < st.strata.size(); ++s) parts.push_back(stratum_identifier(c, st, s));
  return stratified_identifier(std::move(parts));
}

}  // namespace listid
