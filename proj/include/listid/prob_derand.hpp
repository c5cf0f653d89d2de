#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "listid/collection.hpp"
#include "listid/distribution.hpp"
#include "listid/error.hpp"
#include "listid/identify.hpp"
#include "listid/language.hpp"

namespace listid {

/// Exact non-negative rational with a power-of-two denominator, kept reduced.
class Dyadic {
 public:
  Dyadic() = default;
  Dyadic(std::uint64_t num, unsigned exp) : num_(num), exp_(exp) { reduce(); }

  std::uint64_t numerator() const { return num_; }
  unsigned exponent() const { return exp_; }

  double to_double() const { return std::ldexp(static_cast<double>(num_), -static_cast<int>(exp_)); }

  std::string str() const {
    if (exp_ == 0) return std::to_string(num_);
    return std::to_string(num_) + "/2^" + std::to_string(exp_);
  }

  friend Dyadic operator+(Dyadic a, Dyadic b) {
    const unsigned e = std::max(a.exp_, b.exp_);
    return Dyadic((a.num_ << (e - a.exp_)) + (b.num_ << (e - b.exp_)), e);
  }

  Dyadic& operator+=(Dyadic o) { return *this = *this + o; }

  friend bool operator==(const Dyadic&, const Dyadic&) = default;

  friend std::strong_ordering operator<=>(Dyadic a, Dyadic b) {
    const unsigned e = std::max(a.exp_, b.exp_);
    return (a.num_ << (e - a.exp_)) <=> (b.num_ << (e - b.exp_));
  }

 private:
  void reduce() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    const unsigned tz = std::min<unsigned>(static_cast<unsigned>(std::countr_zero(num_)), exp_);
    num_ >>= tz;
    exp_ -= tz;
  }

  std::uint64_t num_ = 0;
  unsigned exp_ = 0;
};

using Bits = std::vector<std::uint8_t>;

/// Probabilistic list identifier: guesses as a function of the sample and the
/// random bits drawn so far (one bit per observed element).
using ProbabilisticIdentifier = std::function<GuessList(const Sample&, std::span<const std::uint8_t>)>;

/// Ignores its bits.
inline ProbabilisticIdentifier derandomizable(Identifier id) {
  return [id = std::move(id)](const Sample& s, std::span<const std::uint8_t>) { return id(s); };
}

namespace detail {

// Value of the most recent (up to 64) bits, earliest bit most significant.
inline std::uint64_t bits_value(std::span<const std::uint8_t> bits, std::size_t count) {
  std::uint64_t v = 0;
  for (std::size_t i = count > 64 ? count - 64 : 0; i < count; ++i) v = (v << 1) | bits[i];
  return v;
}

}  // namespace detail

/// Good identifier with probability num/2^resolution, otherwise k of the
/// k+1 decoys (the one left out chosen by the bit value). The decision reads
/// the first `resolution` bits as a binary number and is bad iff it is at
/// least num; before that many bits exist the good identifier answers.
inline ProbabilisticIdentifier coin_mixture(std::uint64_t num, unsigned resolution, Identifier good,
                                           std::vector<Index> decoys) {
  if (resolution > 62 || num > (std::uint64_t(1) << resolution)) {
    throw Error(ErrorCode::ParseError, "mixture probability must be a dyadic rational in [0, 1]");
  }
  return [num, resolution, good = std::move(good), decoys = std::move(decoys)](
             const Sample& s, std::span<const std::uint8_t> bits) {
    if (bits.size() < resolution || detail::bits_value(bits, resolution) < num) return good(s);
    const std::size_t drop = decoys.empty() ? 0 : detail::bits_value(bits, bits.size()) % decoys.size();
    GuessList out;
    for (std::size_t i = 0; i < decoys.size(); ++i) {
      if (i != drop) out.indices.push_back(decoys[i]);
    }
    return out;
  };
}

/// Always bad: an even split over the decoys.
inline ProbabilisticIdentifier decoy_splitter(std::vector<Index> decoys) {
  return coin_mixture(0, 0, [](const Sample&) { return GuessList{}; }, std::move(decoys));
}

inline constexpr unsigned kMaxTreeDepth = 20;

/// Labels of a finite-depth computation tree. Nodes are numbered breadth
/// first from 1 (the root); node n sits at level floor(log2 n) + 1 and the
/// bits on its path are the binary digits of n after the leading 1. The label
/// at level i is the identifier's answer on x_1..x_{i-1} with those bits.
class ComputationTree {
 public:
  unsigned depth() const { return depth_; }
  std::size_t node_count() const { return labels_.size() - 1; }

  static unsigned level_of(std::size_t n) { return static_cast<unsigned>(std::bit_width(n)); }

  static Bits path_bits(std::size_t n) {
    const unsigned level = level_of(n);
    Bits bits(level - 1);
    for (unsigned i = 0; i + 1 < level; ++i) bits[i] = (n >> (level - 2 - i)) & 1U;
    return bits;
  }

  const GuessList& label(std::size_t n) const { return labels_.at(n); }

  static ComputationTree build(const ProbabilisticIdentifier& a, std::span<const Element> prefix, unsigned depth) {
    if (depth == 0 || depth > kMaxTreeDepth) {
      throw Error(ErrorCode::DepthTooLarge, "tree depth must be in 1.." + std::to_string(kMaxTreeDepth));
    }
    if (prefix.size() + 1 < depth) throw Error(ErrorCode::InsufficientStream, "input prefix shorter than depth - 1");
    ComputationTree tree;
    tree.depth_ = depth;
    tree.labels_.resize(std::size_t(1) << depth);
    Sample s;
    for (unsigned level = 1; level <= depth; ++level) {
      if (level > 1) s.push(prefix[level - 2]);
      const std::size_t first = std::size_t(1) << (level - 1);
      for (std::size_t n = first; n < 2 * first; ++n) {
        const Bits bits = path_bits(n);
        tree.labels_[n] = a(s, bits);
      }
    }
    return tree;
  }

 private:
  unsigned depth_ = 0;
  std::vector<GuessList> labels_;  // slot 0 unused
};

inline ComputationTree build_tree(const ProbabilisticIdentifier& a, std::span<const Element> prefix, unsigned depth) {
  return ComputationTree::build(a, prefix, depth);
}

/// Fraction of level-d nodes whose label identifies L_z.
inline Dyadic level_fraction_identifying(const ComputationTree& tree, const Collection& c, Index z, unsigned d) {
  if (d == 0 || d > tree.depth()) throw Error(ErrorCode::DepthTooLarge, "level outside the tree");
  const std::size_t first = std::size_t(1) << (d - 1);
  std::uint64_t hits = 0;
  for (std::size_t n = first; n < 2 * first; ++n) hits += identifies(c, tree.label(n), z);
  return Dyadic(hits, d - 1);
}

/// Probability that the path through n starts identifying L_z at n and keeps
/// doing so through level d: zero unless n is at level 2 or its parent's list
/// misses L_z; otherwise the share of level-d descendants whose whole path
/// from n identifies.
inline Dyadic prob_converged_at_node(const ComputationTree& tree, const Collection& c, Index z, std::size_t n,
                                     unsigned d) {
  const unsigned dn = ComputationTree::level_of(n);
  if (dn < 2 || d < dn || d > tree.depth()) throw Error(ErrorCode::DepthTooLarge, "node or level outside the tree");
  if (dn > 2 && identifies(c, tree.label(n / 2), z)) return {};
  // Walk the subtree level by level, keeping only nodes whose path from n identifies.
  std::vector<std::size_t> alive;
  if (identifies(c, tree.label(n), z)) alive.push_back(n);
  for (unsigned level = dn; level < d && !alive.empty(); ++level) {
    std::vector<std::size_t> next;
    for (std::size_t m : alive) {
      for (std::size_t child : {2 * m, 2 * m + 1}) {
        if (identifies(c, tree.label(child), z)) next.push_back(child);
      }
    }
    alive = std::move(next);
  }
  return Dyadic(alive.size(), d - 1);
}

/// Top-k vote over the first-index-collapsed lists at level t+1.
inline GuessList derandomize(const ComputationTree& tree, const Collection& c, std::size_t k, unsigned t) {
  if (t + 1 > tree.depth()) throw Error(ErrorCode::DepthTooLarge, "tree too shallow for time " + std::to_string(t));
  std::vector<Index> votes;
  const std::size_t first = std::size_t(1) << t;
  for (std::size_t n = first; n < 2 * first; ++n) {
    for (Index l : tree.label(n).indices) votes.push_back(c.first_index(l));
  }
  return topk_multiset(votes, k);
}

inline GuessList derandomize(const ProbabilisticIdentifier& a, const Collection& c, std::size_t k,
                             std::span<const Element> prefix, unsigned t) {
  if (t + 1 > kMaxTreeDepth) throw Error(ErrorCode::DepthTooLarge, "time exceeds tree depth bound");
  return derandomize(build_tree(a, prefix, t + 1), c, k, t);
}

/// Unbiased bits from an i.i.d. stream. a is the first element and b the
/// first element different from it (at position j). Pairs of even positions
/// (2(j+1), 2(j+2)), (2(j+3), 2(j+4)), ... are then scanned: (a, b) yields 1,
/// (b, a) yields 0, anything else is skipped.
class BitExtractor {
 public:
  /// Feeds the next stream element; returns the bit it completes, if any.
  std::optional<std::uint8_t> feed(Element x) {
    ++pos_;
    if (pos_ == 1) {
      a_ = x;
      return std::nullopt;
    }
    if (!b_) {
      if (x != a_) {
        b_ = x;
        pair_start_ = 2 * (pos_ + 1);
      }
      return std::nullopt;
    }
    if (pos_ == pair_start_) {
      first_ = x;
      return std::nullopt;
    }
    if (pos_ != pair_start_ + 2) return std::nullopt;
    pair_start_ += 4;
    if (first_ == a_ && x == *b_) return 1;
    if (first_ == *b_ && x == a_) return 0;
    return std::nullopt;
  }

  std::size_t consumed() const { return pos_; }
  bool anchored() const { return b_.has_value(); }
  Element a() const { return a_; }
  std::optional<Element> b() const { return b_; }

 private:
  std::size_t pos_ = 0;
  Element a_ = 0;
  std::optional<Element> b_;
  std::size_t pair_start_ = 0;
  Element first_ = 0;
};

struct ExtractedBits {
  Bits bits;
  /// Stream positions read, up to the element that completed the last bit.
  std::size_t consumed = 0;
  bool complete = false;
};

inline ExtractedBits extract_bits(std::span<const Element> stream, std::size_t n_bits) {
  ExtractedBits out;
  if (n_bits == 0) {
    out.complete = true;
    return out;
  }
  BitExtractor ex;
  for (Element x : stream) {
    if (auto bit = ex.feed(x)) {
      out.bits.push_back(*bit);
      out.consumed = ex.consumed();
      if (out.bits.size() == n_bits) {
        out.complete = true;
        return out;
      }
    }
  }
  return out;
}

inline ValidDistribution reduce_enumeration_to_distribution(Enumeration sigma) {
  return ValidDistribution::enumeration_geometric(std::move(sigma));
}

/// Deterministic identifier built from a probabilistic one: odd positions of
/// the input go to the probabilistic identifier, even positions feed the bit
/// extractor.
inline Identifier extractor_identifier(ProbabilisticIdentifier a) {
  return [a = std::move(a)](const Sample& s) {
    const auto xs = s.sequence();
    Sample odd;
    for (std::size_t i = 0; i < xs.size(); i += 2) odd.push(xs[i]);
    ExtractedBits bits = extract_bits(xs, odd.size());
    return a(odd, bits.bits);
  };
}

}  // namespace listid
