#pragma once

#include <bit>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "listid/error.hpp"
#include "listid/language.hpp"
#include "listid/rng.hpp"

namespace listid {

/// Draws a position i >= 1 with probability 2^-i: the index of the first set
/// bit in a stream of fair bits.
inline std::size_t draw_geometric_position(Rng& rng) {
  std::size_t base = 0;
  for (;;) {
    const std::uint64_t word = rng();
    if (word != 0) return base + static_cast<std::size_t>(std::countr_zero(word)) + 1;
    base += 64;
  }
}

/// Distribution whose support is exactly one language.
///
/// EnumerationGeometric puts mass 2^-i on the i-th term of an enumeration
/// (summed over repeats). A finite enumeration of length n keeps repeating its
/// last term, which folds the tail mass 2^-n onto that term.
/// HalfMassPoint puts 1/2 on x0 and spreads the other half geometrically over
/// the canonical enumeration of language \ {x0}.
class ValidDistribution {
 public:
  enum class Kind { EnumerationGeometric, HalfMassPoint };

  static ValidDistribution enumeration_geometric(Enumeration sigma) {
    return ValidDistribution(Kind::EnumerationGeometric, std::move(sigma), 0, std::nullopt);
  }

  static ValidDistribution half_mass_point(Element x0, const Language& lang) {
    if (!lang.contains(x0)) throw Error(ErrorCode::InvalidLanguage, "half-mass point must be a member");
    std::optional<Language> residual;
    if (lang.is_finite()) {
      ElementSet rest;
      for (Element x : lang.elements()) {
        if (x != x0) rest.push_back(x);
      }
      if (!rest.empty()) residual = Language::finite(std::move(rest));
    } else {
      ElementSet ex = lang.elements();
      ex.push_back(x0);
      residual = Language::cofinite(std::move(ex));
    }
    std::optional<Enumeration> rest_enum;
    if (residual) rest_enum = Enumeration::canonical(*residual);
    ValidDistribution d(Kind::HalfMassPoint, rest_enum.value_or(Enumeration::sequence({x0})), x0, lang);
    d.point_only_ = !residual.has_value();
    return d;
  }

  Kind kind() const { return kind_; }
  Element anchor() const { return x0_; }
  const Enumeration& enumeration() const { return sigma_; }

  Element draw(Rng& rng) const {
    if (kind_ == Kind::HalfMassPoint) {
      if (point_only_ || rng.bit()) return x0_;
    }
    return sigma_.at(draw_geometric_position(rng));
  }

  std::vector<Element> sample(Rng& rng, std::size_t t) const {
    std::vector<Element> out;
    out.reserve(t);
    for (std::size_t i = 0; i < t; ++i) out.push_back(draw(rng));
    return out;
  }

  /// Analytic probability of x.
  double mass(Element x) const {
    if (kind_ == Kind::HalfMassPoint) {
      if (point_only_) return x == x0_ ? 1.0 : 0.0;
      return (x == x0_ ? 0.5 : 0.0) + 0.5 * geometric_mass(x);
    }
    return geometric_mass(x);
  }

 private:
  ValidDistribution(Kind kind, Enumeration sigma, Element x0, std::optional<Language> lang)
      : kind_(kind), sigma_(std::move(sigma)), x0_(x0), language_(std::move(lang)) {}

  double geometric_mass(Element x) const {
    if (auto n = sigma_.length()) {
      double m = 0.0;
      for (std::size_t i = 1; i < *n; ++i) {
        if (sigma_.at(i) == x) m += std::ldexp(1.0, -static_cast<int>(i));
      }
      if (sigma_.at(*n) == x) m += std::ldexp(1.0, -static_cast<int>(*n) + 1);
      return m;
    }
    const auto& lang = sigma_.language();
    if (!lang || !lang->contains(x)) return 0.0;
    std::uint64_t pos = spiral_position(x);
    std::uint64_t before = 0;
    for (Element e : lang->elements()) {
      if (spiral_position(e) < pos) ++before;
    }
    return std::ldexp(1.0, -static_cast<int>(std::min<std::uint64_t>(pos - before, 1100)));
  }

  Kind kind_;
  Enumeration sigma_;
  Element x0_;
  std::optional<Language> language_;
  bool point_only_ = false;
};

inline std::vector<Element> sample(const ValidDistribution& d, Rng& rng, std::size_t t) { return d.sample(rng, t); }

}  // namespace listid
