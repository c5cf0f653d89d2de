#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "listid/error.hpp"
#include "listid/language.hpp"

namespace listid {

namespace detail {

using u128 = unsigned __int128;

inline constexpr u128 kSaturated = u128(1) << 100;

/// Binomial coefficient, saturating at kSaturated.
inline u128 binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  u128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    if (acc >= kSaturated) return kSaturated;
  }
  return acc;
}

inline std::uint64_t checked_u64(u128 v, const char* what) {
  if (v > std::numeric_limits<std::uint64_t>::max()) throw Error(ErrorCode::IndexOutOfRange, what);
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

/// An indexed family of languages (1-based).
///
/// Two kinds exist. Explicit families list finitely many finite languages over
/// a finite universe. Canonical families C_m contain Z and every Z\F with
/// 1 <= |F| <= m (m may be unbounded). Canonical indices: 1 is Z; exclusion
/// sets are grouped by their largest spiral position, groups in increasing
/// order; within a group by size, then lexicographically on sorted spiral
/// positions. Every finite F therefore sits at a finite index.
class Collection {
 public:
  /// k_max = nullopt stands for C_infinity.
  static Collection canonical(std::optional<unsigned> k_max) {
    if (k_max && *k_max == 0) throw Error(ErrorCode::InvalidLanguage, "canonical k_max must be >= 1");
    Collection c;
    c.canonical_ = true;
    c.k_max_ = k_max;
    return c;
  }

  /// Languages given as cofinite are taken relative to the universe. An empty
  /// universe is replaced by the union of all listed members.
  static Collection explicit_family(std::vector<Language> languages, std::vector<Element> universe = {},
                                    std::optional<std::size_t> telltale_cap = std::nullopt) {
    if (languages.empty()) throw Error(ErrorCode::InvalidLanguage, "explicit collection needs at least one language");
    Collection c;
    c.universe_ = make_set(std::move(universe));
    if (c.universe_.empty()) {
      for (const auto& l : languages) {
        if (!l.is_finite()) throw Error(ErrorCode::InvalidLanguage, "cofinite member needs an explicit universe");
        c.universe_.insert(c.universe_.end(), l.elements().begin(), l.elements().end());
      }
      c.universe_ = make_set(std::move(c.universe_));
    }
    for (auto& l : languages) {
      if (l.is_finite()) {
        if (!set_includes(c.universe_, l.elements())) {
          throw Error(ErrorCode::InvalidLanguage, "language " + l.describe() + " leaves the universe");
        }
        c.languages_.push_back(std::move(l));
      } else {
        ElementSet members;
        for (Element x : c.universe_) {
          if (l.contains(x)) members.push_back(x);
        }
        c.languages_.push_back(Language::finite(std::move(members)));
      }
    }
    c.first_.resize(c.languages_.size());
    for (std::size_t i = 0; i < c.languages_.size(); ++i) {
      c.first_[i] = i + 1;
      for (std::size_t j = 0; j < i; ++j) {
        if (c.languages_[j] == c.languages_[i]) {
          c.first_[i] = j + 1;
          break;
        }
      }
    }
    c.telltale_cap_ = telltale_cap;
    return c;
  }

  /// Truncation of C_m to a finite window: every F inside the window with
  /// |F| <= m, ordered as in the canonical family, complemented in the window.
  static Collection truncated_canonical(unsigned k_max, std::vector<Element> window,
                                        std::optional<std::size_t> telltale_cap) {
    const Collection full = canonical(k_max);
    ElementSet u = make_set(std::move(window));
    std::uint64_t max_pos = 0;
    for (Element x : u) max_pos = std::max(max_pos, spiral_position(x));
    std::vector<Language> langs;
    std::vector<ElementSet> exclusions;
    for (Index i = 1;; ++i) {
      ElementSet f = full.exclusion_at(i);
      bool inside = true;
      std::uint64_t top = 0;
      for (Element x : f) {
        inside = inside && set_contains(u, x);
        top = std::max(top, spiral_position(x));
      }
      if (top > max_pos) break;
      if (inside) langs.push_back(Language::cofinite(std::move(f)));
    }
    return explicit_family(std::move(langs), std::vector<Element>(u.begin(), u.end()), telltale_cap);
  }

  bool is_canonical() const { return canonical_; }
  std::optional<unsigned> k_max() const { return k_max_; }

  /// Number of languages; nullopt for canonical (infinite) families.
  std::optional<Index> size() const {
    if (canonical_) return std::nullopt;
    return languages_.size();
  }

  const ElementSet& universe() const { return universe_; }
  const std::vector<Language>& languages() const { return languages_; }
  std::optional<std::size_t> telltale_cap() const { return telltale_cap_; }

  void check_index(Index i) const {
    if (i == 0) throw Error(ErrorCode::IndexOutOfRange, "indices start at 1");
    if (!canonical_ && i > languages_.size()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "index " + std::to_string(i) + " exceeds collection size " + std::to_string(languages_.size()));
    }
  }

  Language language_at(Index i) const {
    check_index(i);
    if (canonical_) return Language::cofinite(exclusion_at(i));
    return languages_[i - 1];
  }

  /// Smallest index holding the same language as index l.
  Index first_index(Index l) const {
    check_index(l);
    return canonical_ ? l : first_[l - 1];
  }

  /// Exclusion set of canonical index i (empty for index 1).
  ElementSet exclusion_at(Index i) const {
    require_canonical();
    check_index(i);
    if (i == 1) return {};
    const std::uint64_t o = i - 2;  // rank among non-empty exclusion sets
    std::uint64_t lo = 1;
    std::uint64_t hi = k_max_ ? o + 1 : 63;
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (cumulative(mid) >= detail::u128(o) + 1) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const std::uint64_t m = lo;
    detail::u128 rank = o - cumulative(m - 1);
    std::uint64_t size = 1;
    for (;; ++size) {
      const detail::u128 in_size = detail::binomial(m - 1, size - 1);
      if (rank < in_size) break;
      rank -= in_size;
    }
    std::vector<std::uint64_t> positions = unrank_combination(m - 1, size - 1, rank);
    positions.push_back(m);
    ElementSet f;
    for (std::uint64_t p : positions) f.push_back(spiral_at(p));
    return make_set(std::move(f));
  }

  /// Canonical index of Z\F; throws if |F| exceeds k_max.
  Index index_of_exclusion(const ElementSet& f) const {
    require_canonical();
    if (f.empty()) return 1;
    if (k_max_ && f.size() > *k_max_) {
      throw Error(ErrorCode::IndexOutOfRange, "exclusion set larger than k_max");
    }
    std::vector<std::uint64_t> pos = spiral_positions(f);
    const std::uint64_t m = pos.back();
    const std::uint64_t s = pos.size();
    detail::u128 idx = 2 + cumulative(m - 1);
    for (std::uint64_t sz = 1; sz < s; ++sz) idx += detail::binomial(m - 1, sz - 1);
    pos.pop_back();
    idx += rank_combination(m - 1, pos);
    return detail::checked_u64(idx, "canonical index exceeds 64 bits");
  }

  std::string describe() const {
    if (canonical_) return k_max_ ? "C_" + std::to_string(*k_max_) : std::string("C_inf");
    return "explicit(" + std::to_string(languages_.size()) + " languages)";
  }

 private:
  Collection() = default;

  void require_canonical() const {
    if (!canonical_) throw Error(ErrorCode::UndecidableFamily, "operation requires a canonical family");
  }

  /// Number of non-empty exclusion sets whose largest spiral position is <= m.
  detail::u128 cumulative(std::uint64_t m) const {
    if (!k_max_) {
      if (m >= 100) return detail::kSaturated;
      return (detail::u128(1) << m) - 1;
    }
    detail::u128 acc = 0;
    for (std::uint64_t s = 1; s <= *k_max_ && s <= m; ++s) {
      acc += detail::binomial(m, s);
      if (acc >= detail::kSaturated) return detail::kSaturated;
    }
    return acc;
  }

  // Sum over v in [prev+1, v_end] of C(n - v, q), via the hockey-stick identity.
  static detail::u128 count_prefix(std::uint64_t n, std::uint64_t q, std::uint64_t prev, std::uint64_t v_end) {
    return detail::binomial(n - prev, q + 1) - detail::binomial(n - v_end, q + 1);
  }

  /// Lexicographic rank of sorted combination c (values in 1..n).
  static detail::u128 rank_combination(std::uint64_t n, const std::vector<std::uint64_t>& c) {
    const std::uint64_t r = c.size();
    detail::u128 rank = 0;
    std::uint64_t prev = 0;
    for (std::uint64_t i = 1; i <= r; ++i) {
      const std::uint64_t q = r - i;
      rank += count_prefix(n, q, prev, c[i - 1] - 1);
      prev = c[i - 1];
    }
    return rank;
  }

  static std::vector<std::uint64_t> unrank_combination(std::uint64_t n, std::uint64_t r, detail::u128 rank) {
    std::vector<std::uint64_t> c;
    std::uint64_t prev = 0;
    for (std::uint64_t i = 1; i <= r; ++i) {
      const std::uint64_t q = r - i;
      std::uint64_t lo = prev + 1;
      std::uint64_t hi = n - q;
      while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (count_prefix(n, q, prev, mid) > rank) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      rank -= count_prefix(n, q, prev, lo - 1);
      c.push_back(lo);
      prev = lo;
    }
    return c;
  }

  bool canonical_ = false;
  std::optional<unsigned> k_max_;
  std::vector<Language> languages_;
  std::vector<Index> first_;
  ElementSet universe_;
  std::optional<std::size_t> telltale_cap_;
};

inline Language language_at(const Collection& c, Index i) { return c.language_at(i); }
inline Index first_index(const Collection& c, Index l) { return c.first_index(l); }

/// L_z appears among the guesses, up to duplicate copies at other indices.
inline bool identifies(const Collection& c, std::span<const Index> guesses, Index z) {
  const Index target = c.first_index(z);
  for (Index g : guesses) {
    if (g >= 1 && (c.is_canonical() || g <= c.languages().size()) && c.first_index(g) == target) return true;
  }
  return false;
}

}  // namespace listid
