#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "listid/collection.hpp"
#include "listid/error.hpp"
#include "listid/language.hpp"

namespace listid {

inline constexpr unsigned kMaxLevel = 16;

/// Tell-tale sets T_i^(level). One set per (index, level); a level with no
/// entry falls back to the nearest lower level that has one, since a
/// tell-tale certifying level k also certifies every level above k.
class TelltaleAssignment {
 public:
  enum class Kind { AllEmpty, Table };
  using Key = std::pair<Index, unsigned>;

  static TelltaleAssignment all_empty() { return TelltaleAssignment(Kind::AllEmpty, {}); }
  static TelltaleAssignment table(std::map<Key, ElementSet> entries) {
    return TelltaleAssignment(Kind::Table, std::move(entries));
  }

  Kind kind() const { return kind_; }
  bool is_all_empty() const { return kind_ == Kind::AllEmpty; }
  const std::map<Key, ElementSet>& entries() const { return entries_; }

  /// nullptr when neither this level nor a lower one has an entry.
  const ElementSet* lookup(Index i, unsigned level) const {
    static const ElementSet kEmpty;
    if (kind_ == Kind::AllEmpty) return &kEmpty;
    auto it = entries_.upper_bound({i, level});
    if (it == entries_.begin()) return nullptr;
    --it;
    if (it->first.first != i) return nullptr;
    return &it->second;
  }

 private:
  TelltaleAssignment(Kind kind, std::map<Key, ElementSet> entries) : kind_(kind), entries_(std::move(entries)) {}

  Kind kind_;
  std::map<Key, ElementSet> entries_;
};

struct PsiVerdict {
  bool holds = false;
  /// Certifying tell-tale when holds.
  ElementSet telltale;
  /// When the predicate fails: i = j_0, j_1, ..., j_k with each language a
  /// strict subset of the previous one.
  std::vector<Index> chain;
  /// False when a tell-tale size cap below the language size was in force and
  /// the verdict is negative.
  bool exact = true;
};

/// Closed form of the predicate on C_{k_max}: Z\F satisfies level j iff
/// |F| >= k_max - j + 1. C_infinity fails every finite level; level 0 fails.
inline bool psi_canonical(std::optional<unsigned> k_max, std::size_t exclusion_size, unsigned level) {
  if (!k_max || level == 0) return false;
  return exclusion_size + level >= *k_max + 1;
}

/// Exhaustive evaluation of the tell-tale predicate on an explicit family.
///
/// Tell-tales are searched in order of size, then lexicographically on their
/// sorted elements, so the first certificate found is the minimal one. A size
/// cap restricts the search; with the cap at or above the largest language the
/// result is exact. Results are memoized per (index, level).
class PsiSolver {
 public:
  explicit PsiSolver(const Collection& c, std::optional<std::size_t> cap = std::nullopt) : c_(c) {
    if (c.is_canonical()) throw Error(ErrorCode::UndecidableFamily, "brute force needs an explicit family");
    const auto& u = c.universe();
    if (u.size() > 64) throw Error(ErrorCode::UniverseTooLarge, "brute force supports at most 64 universe elements");
    cap_ = cap ? cap : c.telltale_cap();
    const auto& langs = c.languages();
    masks_.reserve(langs.size());
    for (const auto& l : langs) {
      std::uint64_t m = 0;
      for (Element x : l.elements()) {
        m |= std::uint64_t(1) << (std::lower_bound(u.begin(), u.end(), x) - u.begin());
      }
      masks_.push_back(m);
    }
    strict_subsets_.resize(langs.size());
    for (std::size_t i = 0; i < langs.size(); ++i) {
      for (std::size_t j = 0; j < langs.size(); ++j) {
        if (masks_[j] != masks_[i] && (masks_[j] & ~masks_[i]) == 0) strict_subsets_[i].push_back(j + 1);
      }
    }
  }

  const Collection& collection() const { return c_; }
  std::optional<std::size_t> cap() const { return cap_; }

  bool is_strict_subset(Index j, Index i) const {
    return masks_[j - 1] != masks_[i - 1] && (masks_[j - 1] & ~masks_[i - 1]) == 0;
  }

  const std::vector<Index>& strict_subsets(Index i) const { return strict_subsets_[i - 1]; }

  bool holds(Index i, unsigned level) { return psi(i, level).holds; }

  const PsiVerdict& psi(Index i, unsigned level) {
    c_.check_index(i);
    if (level > kMaxLevel) throw Error(ErrorCode::UndecidableFamily, "level exceeds recursion bound 16");
    auto key = std::make_pair(i, level);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    PsiVerdict v = evaluate(i, level);
    return memo_.emplace(key, std::move(v)).first->second;
  }

 private:
  PsiVerdict evaluate(Index i, unsigned level) {
    PsiVerdict v;
    if (level == 0) {
      v.chain = {i};
      return v;
    }
    const std::uint64_t li = masks_[i - 1];
    // Languages that would defeat a tell-tale they contain.
    std::vector<std::pair<Index, std::uint64_t>> foolers;
    for (Index j : strict_subsets_[i - 1]) {
      if (!holds(j, level - 1)) foolers.emplace_back(j, li & ~masks_[j - 1]);
    }
    std::vector<int> bits;
    for (int b = 0; b < 64; ++b) {
      if (li >> b & 1U) bits.push_back(b);
    }
    const std::size_t n = bits.size();
    const std::size_t max_size = cap_ ? std::min(*cap_, n) : n;
    for (std::size_t s = 0; s <= max_size; ++s) {
      if (auto t = search_size(bits, s, foolers)) {
        v.holds = true;
        for (std::size_t p = 0; p < bits.size(); ++p) {
          if (*t >> bits[p] & 1U) v.telltale.push_back(c_.universe()[bits[p]]);
        }
        return v;
      }
    }
    v.exact = max_size >= n;
    // The empty tell-tale is defeated too; the least defeating index extends the chain.
    const Index next = foolers.front().first;
    v.chain = {i};
    const auto& rest = psi(next, level - 1).chain;
    v.chain.insert(v.chain.end(), rest.begin(), rest.end());
    return v;
  }

  // Lexicographic walk over s-combinations of bit positions.
  static std::optional<std::uint64_t> search_size(const std::vector<int>& bits, std::size_t s,
                                                  const std::vector<std::pair<Index, std::uint64_t>>& foolers) {
    const std::size_t n = bits.size();
    std::vector<std::size_t> idx(s);
    for (std::size_t p = 0; p < s; ++p) idx[p] = p;
    for (;;) {
      std::uint64_t t = 0;
      for (std::size_t p : idx) t |= std::uint64_t(1) << bits[p];
      bool ok = true;
      for (const auto& f : foolers) {
        if ((t & f.second) == 0) {
          ok = false;
          break;
        }
      }
      if (ok) return t;
      std::size_t p = s;
      while (p > 0 && idx[p - 1] == n - s + p - 1) --p;
      if (p == 0) return std::nullopt;
      ++idx[p - 1];
      for (std::size_t q = p; q < s; ++q) idx[q] = idx[q - 1] + 1;
    }
  }

  const Collection& c_;
  std::optional<std::size_t> cap_;
  std::vector<std::uint64_t> masks_;
  std::vector<std::vector<Index>> strict_subsets_;
  std::map<std::pair<Index, unsigned>, PsiVerdict> memo_;
};

inline PsiVerdict psi_bruteforce(const Collection& c, Index i, unsigned level,
                                 std::optional<std::size_t> max_telltale_size = std::nullopt) {
  PsiSolver solver(c, max_telltale_size);
  return solver.psi(i, level);
}

/// Uniform predicate access for canonical (closed form) and explicit
/// (brute force) families.
class PsiOracle {
 public:
  explicit PsiOracle(const Collection& c) : c_(c) {
    if (!c.is_canonical()) solver_.emplace(c);
  }

  bool holds(Index i, unsigned level) {
    if (c_.is_canonical()) return psi_canonical(c_.k_max(), c_.exclusion_at(i).size(), level);
    return solver_->holds(i, level);
  }

  const Collection& collection() const { return c_; }
  PsiSolver* solver() { return solver_ ? &*solver_ : nullptr; }

 private:
  const Collection& c_;
  std::optional<PsiSolver> solver_;
};

struct AngluinCheck {
  bool holds = false;
  std::optional<Index> failing_index;
  bool exact = true;
};

/// Whether every language of the family satisfies the level-k predicate.
inline AngluinCheck check_k_angluin(const Collection& c, unsigned k) {
  AngluinCheck out;
  if (c.is_canonical()) {
    // Z carries the smallest exclusion set and the closed form is monotone in |F|.
    out.holds = psi_canonical(c.k_max(), 0, k);
    if (!out.holds) out.failing_index = 1;
    return out;
  }
  PsiSolver solver(c);
  for (Index i = 1; i <= c.languages().size(); ++i) {
    const auto& v = solver.psi(i, k);
    if (!v.holds) {
      out.failing_index = i;
      out.exact = v.exact;
      return out;
    }
  }
  out.holds = true;
  return out;
}

/// Minimal certificate for every (index, level <= k) whose predicate holds,
/// without requiring the family to pass the level-k check. Canonical families
/// get the empty assignment.
inline TelltaleAssignment available_telltales(const Collection& c, unsigned k) {
  if (c.is_canonical()) return TelltaleAssignment::all_empty();
  PsiSolver solver(c);
  std::map<TelltaleAssignment::Key, ElementSet> table;
  for (Index i = 1; i <= c.languages().size(); ++i) {
    for (unsigned level = 1; level <= k; ++level) {
      const auto& v = solver.psi(i, level);
      if (v.holds) table[{i, level}] = v.telltale;
    }
  }
  return TelltaleAssignment::table(std::move(table));
}

/// Tell-tales for levels 1..k of a family satisfying the level-k predicate.
inline TelltaleAssignment assign_telltales(const Collection& c, unsigned k) {
  const AngluinCheck check = check_k_angluin(c, k);
  if (!check.holds) {
    throw Error(ErrorCode::ConditionNotSatisfied,
                c.describe() + " fails level " + std::to_string(k) + " at index " +
                    std::to_string(check.failing_index.value_or(0)));
  }
  return available_telltales(c, k);
}

}  // namespace listid
