#include <algorithm>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "listid/identify.hpp"
#include "listid/rng.hpp"
#include "listid/stratify.hpp"

using namespace listid;

namespace {

Sample sample_of(std::vector<Element> xs) { return Sample(xs); }

// Line-1 search done the slow way: scan indices in order and test the
// definition directly.
std::optional<Index> scan_feasible(const LazyIndexSet& set, const Sample& s, Index limit) {
  const Collection& c = set.collection();
  for (Index j = set.lower_bound() + 1; j <= limit; ++j) {
    if (!set.contains(j)) continue;
    const Language l = c.language_at(j);
    if (std::all_of(s.distinct().begin(), s.distinct().end(), [&](Element x) { return l.contains(x); })) return j;
  }
  return std::nullopt;
}

}  // namespace

TEST(FeasibleMinIndex, SpecExamples) {
  const auto c1 = Collection::canonical(1);
  const auto empty = TelltaleAssignment::all_empty();
  const Sample s = sample_of({0, -1, 1});
  LazyIndexSet all(c1);
  EXPECT_EQ(feasible_min_index(all, s, 2, empty).index, 1U);
  const auto below_z = all.narrowed(1, {});
  EXPECT_EQ(feasible_min_index(below_z, s, 1, empty).index, c1.index_of_exclusion({-2}));

  const auto two = Collection::explicit_family({Language::finite({1, 2}), Language::finite({1})});
  const auto t = assign_telltales(two, 1);
  EXPECT_EQ(feasible_min_index(LazyIndexSet(two), sample_of({1}), 1, t).index, 2U);
}

TEST(FeasibleMinIndex, ClosedFormMatchesScanOnCanonical) {
  Rng rng(8);
  const auto empty = TelltaleAssignment::all_empty();
  for (unsigned m : {1U, 2U, 3U}) {
    const auto c = Collection::canonical(m);
    for (int trial = 0; trial < 200; ++trial) {
      Sample s;
      const std::size_t n = rng.below(6);
      for (std::size_t i = 0; i < n; ++i) s.push(static_cast<Element>(rng.below(7)) - 3);
      // Descend through random frames that keep the sample consistent.
      LazyIndexSet set(c);
      for (unsigned depth = 0; depth <= m; ++depth) {
        const auto fast = feasible_min_index(set, s, 1, empty);
        const auto slow = scan_feasible(set, s, 3000);
        ASSERT_EQ(fast.index, slow) << "m=" << m << " trial=" << trial << " depth=" << depth;
        if (!fast.index) {
          ASSERT_TRUE(set.empty());
          break;
        }
        set = set.narrowed(*fast.index, {});
      }
    }
  }
}

TEST(LazyIndexSet, MembershipMirrorsConstraints) {
  const auto c = Collection::canonical(2);
  LazyIndexSet set(c);
  const Index z0 = c.index_of_exclusion({0});
  const auto below = set.narrowed(1, {}).narrowed(z0, {});
  EXPECT_FALSE(below.contains(z0));
  EXPECT_TRUE(below.contains(c.index_of_exclusion({0, 1})));
  EXPECT_FALSE(below.contains(c.index_of_exclusion({-1, 1})));
  EXPECT_TRUE(below.empty() == false);
  EXPECT_TRUE(below.narrowed(c.index_of_exclusion({0, 1}), {}).empty());
}

TEST(ListIdentify, SpecExamples) {
  const auto c1 = Collection::canonical(1);
  EXPECT_EQ(list_identify(c1, 2, sample_of({0, -1, 1})).indices,
            (std::vector<Index>{1, c1.index_of_exclusion({-2})}));
  EXPECT_EQ(list_identify(c1, 2, Sample{}).indices, (std::vector<Index>{1, c1.index_of_exclusion({0})}));
  const auto two = Collection::explicit_family({Language::finite({1, 2}), Language::finite({1})});
  EXPECT_EQ(list_identify(two, 1, sample_of({1})).indices, (std::vector<Index>{2}));
}

TEST(ListIdentify, ZeroLevelAndFallback) {
  const auto c1 = Collection::canonical(1);
  EXPECT_TRUE(list_identify(c1, TelltaleAssignment::all_empty(), 0, Sample{}).indices.empty());
  // No language contains 9, so nothing is feasible.
  const auto two = Collection::explicit_family({Language::finite({1, 2}), Language::finite({1})});
  const auto g = list_identify(two, 1, sample_of({1, 2, 9}));
  EXPECT_EQ(g.indices, (std::vector<Index>{1}));
  EXPECT_TRUE(g.fallback);
  EXPECT_EQ(g.padded(3).indices, (std::vector<Index>{1, 1, 1}));
}

TEST(ListIdentify, ArityBound) {
  Rng rng(1);
  for (unsigned m : {1U, 2U, 3U}) {
    const auto c = Collection::canonical(m);
    for (unsigned k = m + 1; k <= m + 3; ++k) {
      const auto t = assign_telltales(c, k);
      for (int trial = 0; trial < 50; ++trial) {
        Sample s;
        for (std::size_t i = 0, n = rng.below(10); i < n; ++i) s.push(static_cast<Element>(rng.below(11)) - 5);
        EXPECT_LE(list_identify(c, t, k, s).size(), k);
      }
    }
  }
}

TEST(RunIdentifier, ConvergesOnCanonicalTargets) {
  const auto c1 = Collection::canonical(1);
  const Index target = c1.index_of_exclusion({-2});
  const auto tr = run_identifier(c1, 2, Enumeration::canonical(c1.language_at(target)), 10);
  for (const auto& e : tr) {
    if (e.t >= 4) {
      EXPECT_TRUE(e.guesses.contains(target)) << e.t;
    }
  }
  const auto trz = run_identifier(c1, 2, Enumeration::canonical(Language::integers()), 10);
  for (const auto& e : trz) EXPECT_EQ(e.guesses.indices.front(), 1U);

  const auto c2 = Collection::canonical(2);
  const Index z = c2.index_of_exclusion({0, 1});
  const auto tr2 = run_identifier(c2, 3, Enumeration::canonical(c2.language_at(z)), 20);
  const auto t_star = converged_at(tr2, c2, z);
  ASSERT_TRUE(t_star.has_value());
  EXPECT_LE(*t_star, 20U);
}

TEST(RunIdentifier, Deterministic) {
  const auto c2 = Collection::canonical(2);
  const auto e = Enumeration::canonical(c2.language_at(9));
  const auto a = run_identifier(c2, 3, e, 50);
  const auto b = run_identifier(c2, 3, e, 50);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].guesses, b[i].guesses);
}

TEST(RunIdentifier, StabilizesToClosedFormMinimum) {
  // After convergence the first-level choice is the least index whose
  // language contains the target (every tell-tale is empty here).
  const auto c = Collection::canonical(2);
  const auto t = TelltaleAssignment::all_empty();
  for (Index z = 1; z <= 60; ++z) {
    const auto e = Enumeration::canonical(c.language_at(z));
    const auto tr = run_identifier(make_list_identifier(c, 3, t), e, 200);
    const auto t_star = converged_at(tr, c, z);
    ASSERT_TRUE(t_star) << z;
    Sample s;
    for (const auto& row : tr) {
      s.push(row.x);
      if (row.t < *t_star) continue;
      std::vector<ListIdentifyStep> trace;
      list_identify(c, t, 3, s, &trace);
      for (const auto& step : trace) {
        if (!step.set.contains(z)) continue;
        std::optional<Index> expect;
        for (Index i = 1; i <= z && !expect; ++i) {
          if (step.set.contains(i) && subset(c.language_at(z), c.language_at(i))) expect = i;
        }
        ASSERT_EQ(step.chosen, expect) << "z=" << z << " t=" << row.t;
      }
    }
  }
}

TEST(ConvergedAt, Examples) {
  const auto c = Collection::canonical(1);
  auto make = [](std::vector<bool> ok) {
    Transcript tr;
    for (std::size_t t = 1; t <= ok.size(); ++t) tr.push_back({t, 0, GuessList{{ok[t - 1] ? Index(2) : Index(3)}}});
    return tr;
  };
  EXPECT_EQ(converged_at(make({true, true, true}), c, 2), 1U);
  std::vector<bool> gap(10, true);
  gap[4] = false;
  EXPECT_EQ(converged_at(make(gap), c, 2), 6U);
  std::vector<bool> last(10, true);
  last[9] = false;
  EXPECT_FALSE(converged_at(make(last), c, 2).has_value());
  EXPECT_FALSE(converged_at(Transcript{}, c, 2).has_value());
}

TEST(ConvergedAt, UsesFirstIndex) {
  const auto dup = Collection::explicit_family({Language::finite({1}), Language::finite({2}), Language::finite({1})});
  Transcript tr{{1, 1, GuessList{{3}}}};
  EXPECT_EQ(converged_at(tr, dup, 1), 1U);
}

TEST(TopK, Examples) {
  const std::vector<Index> a = {1, 1, 2, 3};
  EXPECT_EQ(topk_multiset(a, 2).indices, (std::vector<Index>{1, 2}));
  const std::vector<Index> b = {5, 5, 5};
  EXPECT_EQ(topk_multiset(b, 2).indices, (std::vector<Index>{5}));
  // 100 lists of arity <= 2, 70 of which contain 9.
  std::vector<Index> votes;
  for (int i = 0; i < 70; ++i) {
    votes.push_back(9);
    votes.push_back(static_cast<Index>(i % 5 + 1));
  }
  for (int i = 0; i < 30; ++i) {
    votes.push_back(static_cast<Index>(20 + i % 3));
    votes.push_back(static_cast<Index>(30 + i % 2));
  }
  EXPECT_TRUE(topk_multiset(votes, 2).contains(9));
}

TEST(TopK, SortedByCountThenIndex) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Index> votes;
    for (std::size_t i = 0, n = rng.below(30); i < n; ++i) votes.push_back(1 + rng.below(6));
    std::map<Index, std::size_t> counts;
    for (Index v : votes) ++counts[v];
    std::vector<std::pair<std::size_t, Index>> order;
    for (auto [i, n] : counts) order.emplace_back(n, i);
    std::sort(order.begin(), order.end(), [](auto a, auto b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    const auto out = topk_multiset(votes, 3);
    ASSERT_EQ(out.size(), std::min<std::size_t>(3, order.size()));
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out.indices[i], order[i].second);
  }
}

TEST(StratifiedIdentifier, SingleStratumMatchesListIdentify) {
  const auto two = Collection::explicit_family({Language::finite({1, 2}), Language::finite({1})});
  const auto st = stratify(two, 1);
  const auto id = stratified_identifier(two, st);
  for (const auto& xs : std::vector<std::vector<Element>>{{1}, {2}, {1, 2}, {}}) {
    const Sample s(xs);
    EXPECT_EQ(id(s).indices, list_identify(two, 1, s).indices);
  }
}

TEST(StratifiedIdentifier, CanonicalStrata) {
  const auto c2 = Collection::canonical(2);
  const auto st = stratify(c2, 3);
  const auto g = stratified_identifier(c2, st)(Sample{});
  EXPECT_EQ(g.indices, (std::vector<Index>{1, c2.index_of_exclusion({0}), c2.index_of_exclusion({0, -1})}));
}
