#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "listid/error.hpp"

namespace listid {

/// Universe element. String universes must be encoded to integers first.
using Element = std::int64_t;

/// 1-based index into a collection.
using Index = std::uint64_t;

/// Sorted, duplicate-free set of elements.
using ElementSet = std::vector<Element>;

inline ElementSet make_set(std::vector<Element> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

inline bool set_contains(const ElementSet& s, Element x) {
  return std::binary_search(s.begin(), s.end(), x);
}

inline bool set_includes(const ElementSet& outer, const ElementSet& inner) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

inline bool set_disjoint(const ElementSet& a, const ElementSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return false;
    }
  }
  return true;
}

// Spiral order 0, -1, 1, -2, 2, ... with 1-based positions.

constexpr std::uint64_t spiral_position(Element x) {
  return x >= 0 ? 2 * static_cast<std::uint64_t>(x) + 1 : 2 * static_cast<std::uint64_t>(-(x + 1)) + 2;
}

constexpr Element spiral_at(std::uint64_t pos) {
  return pos % 2 == 1 ? static_cast<Element>((pos - 1) / 2) : -static_cast<Element>(pos / 2);
}

inline bool spiral_less(Element a, Element b) { return spiral_position(a) < spiral_position(b); }

/// A member of a collection: an explicit non-empty finite set, or Z minus a
/// finite exclusion set.
class Language {
 public:
  enum class Kind { ExplicitFinite, CofiniteInt };

  static Language finite(std::vector<Element> members) {
    ElementSet m = make_set(std::move(members));
    if (m.empty()) throw Error(ErrorCode::InvalidLanguage, "explicit languages must be non-empty");
    return Language(Kind::ExplicitFinite, std::move(m));
  }

  static Language cofinite(std::vector<Element> excluded = {}) {
    return Language(Kind::CofiniteInt, make_set(std::move(excluded)));
  }

  static Language integers() { return cofinite({}); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::ExplicitFinite; }

  /// Members of an explicit language, or the exclusion set of a cofinite one.
  const ElementSet& elements() const { return elements_; }

  bool contains(Element x) const {
    const bool listed = set_contains(elements_, x);
    return is_finite() ? listed : !listed;
  }

  std::optional<std::size_t> size() const {
    if (is_finite()) return elements_.size();
    return std::nullopt;
  }

  friend bool operator==(const Language&, const Language&) = default;

  std::string describe() const {
    std::string out = is_finite() ? "{" : "Z\\{";
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(elements_[i]);
    }
    return out + "}";
  }

 private:
  Language(Kind kind, ElementSet elements) : kind_(kind), elements_(std::move(elements)) {}

  Kind kind_;
  ElementSet elements_;
};

inline bool member(const Language& lang, Element x) { return lang.contains(x); }

inline bool subset(const Language& a, const Language& b) {
  using K = Language::Kind;
  if (a.kind() == K::ExplicitFinite && b.kind() == K::ExplicitFinite) {
    return set_includes(b.elements(), a.elements());
  }
  if (a.kind() == K::ExplicitFinite) return set_disjoint(a.elements(), b.elements());
  if (b.kind() == K::ExplicitFinite) return false;
  return set_includes(a.elements(), b.elements());
}

/// a is a strict subset of b.
inline bool proper_subset(const Language& a, const Language& b) { return a != b && subset(a, b); }

/// Observed input: the ordered sequence plus an incremental view of its
/// distinct elements, including which spiral positions have been covered.
class Sample {
 public:
  Sample() = default;

  explicit Sample(std::span<const Element> xs) {
    for (Element x : xs) push(x);
  }

  void push(Element x) {
    sequence_.push_back(x);
    if (!seen_.insert(x).second) return;
    distinct_.push_back(x);
    cover(spiral_position(x));
  }

  std::span<const Element> sequence() const { return sequence_; }
  std::size_t size() const { return sequence_.size(); }
  bool empty() const { return sequence_.empty(); }

  const std::vector<Element>& distinct() const { return distinct_; }
  bool contains(Element x) const { return seen_.count(x) != 0; }

  /// Smallest spiral position >= from whose element has not been observed.
  std::uint64_t first_missing_position(std::uint64_t from = 1) const {
    auto it = runs_.upper_bound(from);
    if (it == runs_.begin()) return from;
    --it;
    return it->second >= from ? it->second + 1 : from;
  }

  /// Smallest spiral position >= from that is neither observed nor listed.
  std::uint64_t first_missing_position_avoiding(const std::vector<std::uint64_t>& sorted_skip,
                                                std::uint64_t from = 1) const {
    std::uint64_t p = first_missing_position(from);
    while (std::binary_search(sorted_skip.begin(), sorted_skip.end(), p)) {
      p = first_missing_position(p + 1);
    }
    return p;
  }

 private:
  void cover(std::uint64_t p) {
    // runs_ maps run start to run end (inclusive); runs never touch.
    std::uint64_t lo = p;
    std::uint64_t hi = p;
    auto next = runs_.find(p + 1);
    if (next != runs_.end()) {
      hi = next->second;
      runs_.erase(next);
    }
    auto it = runs_.lower_bound(p);
    if (it != runs_.begin()) {
      auto prev = std::prev(it);
      if (prev->second + 1 == p) {
        lo = prev->first;
        runs_.erase(prev);
      }
    }
    runs_[lo] = hi;
  }

  std::vector<Element> sequence_;
  std::vector<Element> distinct_;
  std::unordered_set<Element> seen_;
  std::map<std::uint64_t, std::uint64_t> runs_;
};

/// Spiral positions of a set of elements, ascending.
inline std::vector<std::uint64_t> spiral_positions(const ElementSet& xs) {
  std::vector<std::uint64_t> out;
  out.reserve(xs.size());
  for (Element x : xs) out.push_back(spiral_position(x));
  std::sort(out.begin(), out.end());
  return out;
}

/// Deterministic stream x_1, x_2, ... of members of a language.
///
/// The canonical enumeration walks the spiral order and skips non-members.
/// Finite streams (explicit languages, explicit sequences) repeat their final
/// element once exhausted.
class Enumeration {
 public:
  static Enumeration canonical(const Language& lang) {
    Enumeration e;
    e.language_ = lang;
    if (lang.is_finite()) {
      e.finite_ = lang.elements();
      std::sort(e.finite_.begin(), e.finite_.end(), spiral_less);
    } else {
      e.excluded_positions_ = spiral_positions(lang.elements());
    }
    return e;
  }

  static Enumeration sequence(std::vector<Element> xs) {
    if (xs.empty()) throw Error(ErrorCode::InvalidLanguage, "enumeration sequence must be non-empty");
    Enumeration e;
    e.finite_ = std::move(xs);
    return e;
  }

  /// 1-based.
  Element at(std::size_t i) const {
    if (i == 0) throw Error(ErrorCode::IndexOutOfRange, "enumeration positions start at 1");
    if (!finite_.empty()) return finite_[std::min(i, finite_.size()) - 1];
    std::uint64_t p = i;
    for (std::uint64_t q : excluded_positions_) {
      if (q <= p) ++p;
    }
    return spiral_at(p);
  }

  std::vector<Element> prefix(std::size_t t) const {
    std::vector<Element> out;
    out.reserve(t);
    if (!finite_.empty()) {
      for (std::size_t i = 1; i <= t; ++i) out.push_back(at(i));
      return out;
    }
    // Walk positions once instead of calling at() per element.
    std::uint64_t p = 0;
    std::size_t skip = 0;
    while (out.size() < t) {
      ++p;
      if (skip < excluded_positions_.size() && excluded_positions_[skip] == p) {
        ++skip;
        continue;
      }
      out.push_back(spiral_at(p));
    }
    return out;
  }

  /// Number of terms before the stream starts repeating; nullopt if infinite.
  std::optional<std::size_t> length() const {
    if (!finite_.empty()) return finite_.size();
    return std::nullopt;
  }

  const std::optional<Language>& language() const { return language_; }

 private:
  Enumeration() = default;

  std::optional<Language> language_;
  std::vector<Element> finite_;
  std::vector<std::uint64_t> excluded_positions_;
};

inline std::vector<Element> canonical_enumeration(const Language& lang, std::size_t t) {
  return Enumeration::canonical(lang).prefix(t);
}

/// First member of lang, in canonical order, that the sample has not shown.
/// For an exhausted explicit language this is its last canonical element.
inline Element first_unseen_member(const Language& lang, const Sample& sample) {
  if (lang.is_finite()) {
    ElementSet ordered = lang.elements();
    std::sort(ordered.begin(), ordered.end(), spiral_less);
    for (Element x : ordered) {
      if (!sample.contains(x)) return x;
    }
    return ordered.back();
  }
  return spiral_at(sample.first_missing_position_avoiding(spiral_positions(lang.elements())));
}

}  // namespace listid
