#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "listid/angluin.hpp"
#include "listid/collection.hpp"
#include "listid/error.hpp"
#include "listid/identify.hpp"
#include "listid/language.hpp"

namespace listid {

/// Least index whose language fails the level-k predicate.
inline Index find_unfoolable_root(PsiOracle& oracle, unsigned k) {
  const Collection& c = oracle.collection();
  if (c.is_canonical()) {
    // Z has the smallest exclusion set, and the closed form is monotone in |F|.
    if (!psi_canonical(c.k_max(), 0, k)) return 1;
  } else {
    for (Index i = 1; i <= *c.size(); ++i) {
      if (!oracle.holds(i, k)) return i;
    }
  }
  throw Error(ErrorCode::ConditionSatisfied, c.describe() + " satisfies level " + std::to_string(k));
}

inline Index find_unfoolable_root(const Collection& c, unsigned k) {
  PsiOracle oracle(c);
  return find_unfoolable_root(oracle, k);
}

/// Least strict subset of L_parent that contains the sample and fails the
/// level-j predicate.
inline Index find_descendant(PsiOracle& oracle, Index parent, const Sample& s, unsigned j) {
  const Collection& c = oracle.collection();
  const std::string where = "below index " + std::to_string(parent) + " at level " + std::to_string(j);
  if (c.is_canonical()) {
    ElementSet f = c.exclusion_at(parent);
    const std::uint64_t p = s.first_missing_position_avoiding(spiral_positions(f));
    f.push_back(spiral_at(p));
    f = make_set(std::move(f));
    if ((c.k_max() && f.size() > *c.k_max()) || psi_canonical(c.k_max(), f.size(), j)) {
      throw Error(ErrorCode::NoDescendant, where);
    }
    return c.index_of_exclusion(f);
  }
  PsiSolver& solver = *oracle.solver();
  for (Index i : solver.strict_subsets(parent)) {
    const Language& li = c.languages()[i - 1];
    bool consistent = true;
    for (Element x : s.distinct()) {
      if (!li.contains(x)) {
        consistent = false;
        break;
      }
    }
    if (consistent && !solver.holds(i, j)) return i;
  }
  throw Error(ErrorCode::NoDescendant, where);
}

inline Index find_descendant(const Collection& c, Index parent, const Sample& s, unsigned j) {
  PsiOracle oracle(c);
  return find_descendant(oracle, parent, s, j);
}

struct Witness {
  enum class Kind {
    /// The identifier named the deepest chain language but missed a shallower one.
    Jump,
    /// A step of an inner loop that never saw the deepest language named.
    Starve,
  };
  std::size_t t;
  std::size_t level;
  Kind kind;

  friend bool operator==(const Witness&, const Witness&) = default;
};

enum class AdversaryStatus {
  BudgetExhausted,
  /// The identifier named a full chain of length root_level + 1, which ends
  /// the construction.
  ChainCovered,
};

struct AdversaryRun {
  unsigned k = 0;
  /// Level the chain is built against. Equals k unless every language
  /// satisfies the level-k predicate, in which case the largest lower level
  /// with an unfoolable root is used.
  unsigned root_level = 0;
  std::size_t budget = 0;
  std::vector<Element> emitted;
  /// Chain at every invocation boundary, with the sample size at that time.
  std::vector<std::vector<Index>> chain_history;
  std::vector<std::size_t> invocation_times;
  std::vector<Witness> witnesses;
  AdversaryStatus status = AdversaryStatus::BudgetExhausted;
  std::optional<Index> starved_on;
  std::size_t invariant_checks = 0;
};

namespace detail {

inline bool sample_inside(const Language& l, const Sample& s) {
  if (!l.is_finite()) {
    for (Element x : l.elements()) {
      if (s.contains(x)) return false;
    }
    return true;
  }
  for (Element x : s.distinct()) {
    if (!l.contains(x)) return false;
  }
  return true;
}

inline void check_chain(PsiOracle& oracle, const std::vector<Index>& chain, unsigned root_level, const Sample& s) {
  const Collection& c = oracle.collection();
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvariantViolation, what + " at t=" + std::to_string(s.size()));
  };
  if (chain.empty() || chain.size() > root_level + 1) fail("chain length " + std::to_string(chain.size()));
  std::optional<Language> prev;
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const Language l = c.language_at(chain[j]);
    if (prev && !proper_subset(l, *prev)) fail("chain not strictly decreasing at level " + std::to_string(j + 1));
    if (oracle.holds(chain[j], root_level - static_cast<unsigned>(j))) {
      fail("chain level " + std::to_string(j + 1) + " satisfies its predicate");
    }
    if (!sample_inside(l, s)) fail("sample leaves chain language at level " + std::to_string(j + 1));
    prev = l;
  }
}

}  // namespace detail

/// Adversarial enumeration against a black-box k-list identifier.
///
/// Keeps a chain of strictly nested languages, each failing the predicate at a
/// decreasing level, and enumerates the deepest one until the identifier names
/// it. If some shallower chain language is then missing from the list, the
/// chain is cut back to the shallowest miss and a jump witness is logged;
/// otherwise a deeper descendant is appended. Runs until step_budget elements
/// have been emitted. Chain invariants are checked at every invocation.
inline AdversaryRun adv_enum(const Collection& c, unsigned k, const Identifier& id, std::size_t step_budget) {
  PsiOracle oracle(c);
  AdversaryRun run;
  run.k = k;
  run.budget = step_budget;
  std::optional<Index> root;
  for (unsigned level = k; level >= 1 && !root; --level) {
    try {
      root = find_unfoolable_root(oracle, level);
      run.root_level = level;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConditionSatisfied) throw;
    }
  }
  if (!root) throw Error(ErrorCode::ConditionSatisfied, c.describe() + " has no unfoolable language at any level");

  Sample s;
  std::vector<Index> chain{*root};
  for (;;) {
    detail::check_chain(oracle, chain, run.root_level, s);
    ++run.invariant_checks;
    run.chain_history.push_back(chain);
    run.invocation_times.push_back(s.size());
    if (s.size() >= step_budget) break;

    const Index deepest = chain.back();
    const Language lang = c.language_at(deepest);
    const std::size_t loop_start = s.size();
    GuessList g;
    bool named = false;
    while (s.size() < step_budget) {
      s.push(first_unseen_member(lang, s));
      g = id(s);
      if (identifies(c, g, deepest)) {
        named = true;
        break;
      }
    }
    if (!named) {
      for (std::size_t t = loop_start + 1; t <= s.size(); ++t) {
        run.witnesses.push_back({t, chain.size(), Witness::Kind::Starve});
      }
      run.starved_on = deepest;
      break;
    }

    std::optional<std::size_t> missed;
    for (std::size_t j = 0; j < chain.size(); ++j) {
      if (!identifies(c, g, chain[j])) {
        missed = j + 1;
        break;
      }
    }
    if (missed) {
      run.witnesses.push_back({s.size(), *missed, Witness::Kind::Jump});
      chain.resize(*missed);
      continue;
    }
    if (chain.size() > run.root_level) {
      run.status = AdversaryStatus::ChainCovered;
      break;
    }
    try {
      chain.push_back(find_descendant(oracle, deepest, s, run.root_level - static_cast<unsigned>(chain.size())));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoDescendant) throw;
      throw Error(ErrorCode::InvariantViolation, std::string("descendant search failed: ") + e.what());
    }
  }
  const auto seq = s.sequence();
  run.emitted.assign(seq.begin(), seq.end());
  return run;
}

struct LimitReport {
  std::size_t level = 0;
  Index index = 0;
  std::vector<Index> prefix;
  /// The level-ℓ* prefix is the same at every invocation in the window.
  bool stable = false;
  /// First invocation after which chain length never drops below ℓ* and the
  /// prefix never changes.
  std::size_t settle_invocation = 0;
  std::size_t window_start = 0;
  std::size_t window_size = 0;
};

/// Empirical liminf of the chain length. A run that ended starving reports
/// its final chain; otherwise the minimum over the second half of the
/// invocations is taken.
inline LimitReport limit_language(const AdversaryRun& run) {
  LimitReport r;
  const auto& h = run.chain_history;
  if (h.empty()) return r;
  r.window_start = run.starved_on ? h.size() - 1 : h.size() / 2;
  r.window_size = h.size() - r.window_start;
  r.level = h[r.window_start].size();
  for (std::size_t i = r.window_start; i < h.size(); ++i) r.level = std::min(r.level, h[i].size());
  r.prefix.assign(h.back().begin(), h.back().begin() + static_cast<std::ptrdiff_t>(r.level));
  r.index = r.prefix.back();
  auto matches = [&](const std::vector<Index>& chain) {
    return chain.size() >= r.level && std::equal(r.prefix.begin(), r.prefix.end(), chain.begin());
  };
  r.stable = true;
  for (std::size_t i = r.window_start; i < h.size(); ++i) r.stable = r.stable && matches(h[i]);
  r.settle_invocation = h.size() - 1;
  while (r.settle_invocation > 0 && matches(h[r.settle_invocation - 1])) --r.settle_invocation;
  return r;
}

}  // namespace listid
