#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "listid/collection.hpp"
#include "listid/distribution.hpp"
#include "listid/error.hpp"
#include "listid/identify.hpp"
#include "listid/language.hpp"
#include "listid/rng.hpp"
#include "listid/stats.hpp"

namespace listid {

/// Draws one element per call from the trial's stream.
using Sampler = std::function<Element(Rng&)>;

inline Sampler sampler_of(ValidDistribution d) {
  return [d = std::move(d)](Rng& rng) { return d.draw(rng); };
}

/// Runs `trials` independent trials split over `threads` workers. Trial r gets
/// Rng(seed).split(r) and reports, for each t = 1..horizon, whether it failed.
/// Counts are summed, so the result does not depend on the thread count.
inline std::vector<std::uint64_t> count_failures(
    std::size_t trials, std::size_t horizon, std::uint64_t seed, unsigned threads,
    const std::function<void(Rng&, std::vector<std::uint8_t>&)>& trial) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
  std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(horizon + 1, 0));
  const Rng master(seed);
  auto work = [&](unsigned w) {
    std::vector<std::uint8_t> failed(horizon + 1);
    for (std::size_t r = w; r < trials; r += threads) {
      std::fill(failed.begin(), failed.end(), 0);
      Rng rng = master.split(r);
      trial(rng, failed);
      for (std::size_t t = 1; t <= horizon; ++t) partial[w][t] += failed[t];
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  std::vector<std::uint64_t> total(horizon + 1, 0);
  for (const auto& p : partial) {
    for (std::size_t t = 0; t <= horizon; ++t) total[t] += p[t];
  }
  return total;
}

struct CurvePoint {
  std::size_t t;
  std::uint64_t failures;
  std::uint64_t trials;
  double e_hat;
  double ci_lo;
  double ci_hi;
};

struct ErrorCurve {
  std::vector<CurvePoint> points;

  const CurvePoint& at(std::size_t t) const { return points.at(t - 1); }
};

inline ErrorCurve make_curve(const std::vector<std::uint64_t>& failures, std::uint64_t trials) {
  ErrorCurve curve;
  for (std::size_t t = 1; t < failures.size(); ++t) {
    const auto ci = stats::clopper_pearson(failures[t], trials);
    curve.points.push_back({t, failures[t], trials,
                            trials ? static_cast<double>(failures[t]) / static_cast<double>(trials) : 0.0, ci.lo,
                            ci.hi});
  }
  return curve;
}

struct RateExperiment {
  const Collection* collection = nullptr;
  std::size_t k = 1;
  Index target = 1;
  Sampler sampler;
  Identifier identifier;
  std::size_t horizon = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Failure frequency per t. Each trial draws one stream of length T and
/// evaluates the identifier on every prefix.
inline ErrorCurve run_rate_experiment(const RateExperiment& exp) {
  if (exp.trials == 0) throw Error(ErrorCode::ParseError, "trials must be >= 1");
  const Collection& c = *exp.collection;
  auto failures = count_failures(exp.trials, exp.horizon, exp.seed, exp.threads,
                                 [&](Rng& rng, std::vector<std::uint8_t>& failed) {
                                   Sample s;
                                   for (std::size_t t = 1; t <= exp.horizon; ++t) {
                                     s.push(exp.sampler(rng));
                                     failed[t] = !identifies(c, exp.identifier(s), exp.target);
                                   }
                                 });
  return make_curve(failures, exp.trials);
}

/// Same, but every t uses a fresh stream (stream id trial * (T+1) + t).
inline ErrorCurve run_rate_experiment_resampled(const RateExperiment& exp) {
  const Collection& c = *exp.collection;
  auto failures = count_failures(exp.trials, exp.horizon, exp.seed, exp.threads,
                                 [&](Rng& rng, std::vector<std::uint8_t>& failed) {
                                   for (std::size_t t = 1; t <= exp.horizon; ++t) {
                                     Rng fresh = rng.split(t);
                                     Sample s;
                                     for (std::size_t i = 0; i < t; ++i) s.push(exp.sampler(fresh));
                                     failed[t] = !identifies(c, exp.identifier(s), exp.target);
                                   }
                                 });
  return make_curve(failures, exp.trials);
}

struct ExponentialFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::size_t points = 0;
  /// Points whose zero frequency was replaced by the CI upper bound.
  std::size_t clamped = 0;
};

/// Least squares of log e_hat(t) on t over [t_lo, t_hi].
inline ExponentialFit fit_exponential(const ErrorCurve& curve, std::size_t t_lo, std::size_t t_hi) {
  std::vector<double> xs, ys;
  ExponentialFit fit;
  std::size_t positive = 0;
  for (const auto& p : curve.points) {
    if (p.t < t_lo || p.t > t_hi) continue;
    double v = p.e_hat;
    if (v > 0) {
      ++positive;
    } else {
      v = p.ci_hi;
      ++fit.clamped;
    }
    xs.push_back(static_cast<double>(p.t));
    ys.push_back(std::log(v));
  }
  if (positive < 3) {
    throw Error(ErrorCode::InsufficientPositivePoints,
                std::to_string(positive) + " positive points in window " + std::to_string(t_lo) + ".." +
                    std::to_string(t_hi));
  }
  const auto lf = stats::least_squares(xs, ys);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  fit.points = xs.size();
  return fit;
}

/// Range of t with a positive failure frequency, from the first to the last.
inline std::optional<std::pair<std::size_t, std::size_t>> positive_window(const ErrorCurve& curve) {
  std::optional<std::pair<std::size_t, std::size_t>> w;
  for (const auto& p : curve.points) {
    if (p.failures == 0) continue;
    if (!w) w.emplace(p.t, p.t);
    w->second = p.t;
  }
  return w;
}

// ---- Boosting -------------------------------------------------------------

struct BatchPlan {
  std::size_t batches;
  std::size_t batch_size;
};

/// ceil(ln t) per batch (at least 1), and max(1, floor(t / size)) batches.
inline BatchPlan batch_plan(std::size_t t) {
  const std::size_t size =
      t <= 1 ? 1 : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(t)))));
  return {std::max<std::size_t>(1, t / size), size};
}

/// Runs the base identifier on disjoint batches of the sample and returns the
/// top-k vote over first indices. The leftover tail is discarded.
inline GuessList boosted_identify(const Identifier& base, const Collection& c, std::size_t k,
                                  std::span<const Element> xs) {
  const BatchPlan plan = batch_plan(xs.size());
  std::vector<Index> votes;
  for (std::size_t b = 0; b < plan.batches; ++b) {
    const std::size_t lo = b * plan.batch_size;
    const std::size_t hi = std::min(xs.size(), lo + plan.batch_size);
    const Sample batch(xs.subspan(lo, hi - lo));
    for (Index l : base(batch).indices) votes.push_back(c.first_index(l));
  }
  return topk_multiset(votes, k);
}

inline Identifier boosted_identifier(Identifier base, const Collection& c, std::size_t k) {
  return [base = std::move(base), &c, k](const Sample& s) { return boosted_identify(base, c, k, s.sequence()); };
}

/// Hoeffding tail for M batches at margin eps.
inline double hoeffding_bound(std::size_t batches, double eps) {
  return std::exp(-static_cast<double>(batches) * eps * eps / 8.0);
}

/// Margin above the k/(k+1) threshold for a base success probability p.
inline double boosting_margin(double p, std::size_t k) {
  return 2.0 * (p - static_cast<double>(k) / static_cast<double>(k + 1));
}

// ---- Lower bound ----------------------------------------------------------

struct LowerBoundReport {
  std::vector<Index> languages;
  Element shared_x = 0;
  /// Per t = 1..T on the constant input: how many designated languages the
  /// list names, and the first designated language it misses.
  std::vector<std::size_t> named_count;
  std::vector<std::optional<Index>> missed;
  bool pigeonhole_holds = true;
  /// Per designated language.
  std::vector<ErrorCurve> curves;
  /// Per t: CI upper bound of the missed language's failure rate is >= 2^-t.
  std::vector<bool> floor_holds;
};

struct LowerBoundExperiment {
  const Collection* collection = nullptr;
  std::size_t k = 1;
  Element shared_x = 0;
  std::vector<Index> languages;
  Identifier identifier;
  std::size_t horizon = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Monte Carlo curves are computed up to this t (the constant-input check
  /// always covers the full horizon).
  std::optional<std::size_t> monte_carlo_horizon;
};

inline LowerBoundReport lower_bound_experiment(const LowerBoundExperiment& exp) {
  const Collection& c = *exp.collection;
  if (exp.languages.size() != exp.k + 1) {
    throw Error(ErrorCode::NonTrivialityUnwitnessed, "need exactly k+1 designated languages");
  }
  for (std::size_t a = 0; a < exp.languages.size(); ++a) {
    if (!c.language_at(exp.languages[a]).contains(exp.shared_x)) {
      throw Error(ErrorCode::NonTrivialityUnwitnessed,
                  "index " + std::to_string(exp.languages[a]) + " does not contain the shared element");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (c.first_index(exp.languages[a]) == c.first_index(exp.languages[b])) {
        throw Error(ErrorCode::NonTrivialityUnwitnessed, "designated languages must be distinct");
      }
    }
  }
  LowerBoundReport rep;
  rep.languages = exp.languages;
  rep.shared_x = exp.shared_x;
  Sample constant;
  for (std::size_t t = 1; t <= exp.horizon; ++t) {
    constant.push(exp.shared_x);
    const GuessList g = exp.identifier(constant);
    std::size_t named = 0;
    std::optional<Index> miss;
    for (Index l : exp.languages) {
      if (identifies(c, g, l)) {
        ++named;
      } else if (!miss) {
        miss = l;
      }
    }
    rep.named_count.push_back(named);
    rep.missed.push_back(miss);
    rep.pigeonhole_holds = rep.pigeonhole_holds && named <= exp.k;
  }
  const std::size_t mc_t = std::min(exp.horizon, exp.monte_carlo_horizon.value_or(exp.horizon));
  for (std::size_t j = 0; j < exp.languages.size(); ++j) {
    RateExperiment re;
    re.collection = &c;
    re.k = exp.k;
    re.target = exp.languages[j];
    re.sampler = sampler_of(ValidDistribution::half_mass_point(exp.shared_x, c.language_at(exp.languages[j])));
    re.identifier = exp.identifier;
    re.horizon = mc_t;
    re.trials = exp.trials;
    re.seed = Rng(exp.seed).split(j)();
    re.threads = exp.threads;
    rep.curves.push_back(run_rate_experiment(re));
  }
  for (std::size_t t = 1; t <= mc_t; ++t) {
    const auto& miss = rep.missed[t - 1];
    if (!miss) {
      rep.floor_holds.push_back(false);
      continue;
    }
    const std::size_t j = static_cast<std::size_t>(
        std::find(exp.languages.begin(), exp.languages.end(), *miss) - exp.languages.begin());
    rep.floor_holds.push_back(rep.curves[j].at(t).ci_hi >= std::ldexp(1.0, -static_cast<int>(t)));
  }
  return rep;
}

}  // namespace listid
