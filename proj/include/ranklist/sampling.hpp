#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "ranklist/dataset.hpp"
#include "ranklist/errors.hpp"
#include "ranklist/rng.hpp"

namespace ranklist {

// Dataset indices ordered by descending ground-truth score. margin is the
// smallest adjacent gap, which for a sorted list equals the smallest gap
// over all pairs.
struct RankedList {
  std::vector<std::size_t> indices;
  double margin = 0.0;
};

// hi ranks strictly above lo; the preference label is always 1 with hi first.
struct PreferencePair {
  std::size_t hi = 0;
  std::size_t lo = 0;
};

// Strict descent with at least `margin` separation. With margin == 0 this
// still excludes ties, so sampled preferences are never ambiguous.
inline bool margin_gap_ok(double prev, double next, double margin) {
  return (prev - next) >= margin && prev > next;
}

namespace detail {

inline std::vector<std::size_t> score_order_desc(const Dataset& ds) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ds[a].score != ds[b].score) return ds[a].score > ds[b].score;
    return a < b;
  });
  return order;
}

// Greedy chain over the descending order: take the next sample whose score
// clears the margin below the previous pick. Starting at offset 0 this finds
// n picks iff some feasible list of length n exists.
inline std::vector<std::size_t> greedy_chain(const Dataset& ds,
                                             const std::vector<std::size_t>& order,
                                             std::size_t start, std::size_t n,
                                             double margin) {
  std::vector<std::size_t> picks;
  double prev = 0.0;
  for (std::size_t t = start; t < order.size() && picks.size() < n; ++t) {
    const double s = ds[order[t]].score;
    if (picks.empty() || margin_gap_ok(prev, s, margin)) {
      picks.push_back(order[t]);
      prev = s;
    }
  }
  return picks;
}

inline void validate_margin(double margin) {
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw ConfigError("margin must be finite and >= 0");
  }
}

}  // namespace detail

inline bool list_feasible(const Dataset& ds, std::size_t n, double margin) {
  detail::validate_margin(margin);
  if (n < 2) throw ConfigError("list size must be at least 2");
  if (n > ds.size()) return false;
  const std::vector<std::size_t> order = detail::score_order_desc(ds);
  return detail::greedy_chain(ds, order, 0, n, margin).size() >= n;
}

// Rejection sampling: draw n distinct indices uniformly, keep the draw if the
// score-sorted list clears the margin everywhere. After 1000 rejections fall
// back to a greedy pass over the score-sorted dataset from a random offset
// (then from the top), erroring exactly when no feasible list exists.
inline RankedList sample_list(const Dataset& ds, std::size_t n, double margin,
                              Rng& rng) {
  detail::validate_margin(margin);
  if (n < 2) throw ConfigError("list size must be at least 2");
  if (n > ds.size()) {
    throw InfeasibleError("list size " + std::to_string(n) +
                          " exceeds dataset size " + std::to_string(ds.size()));
  }

  const auto finish = [&](std::vector<std::size_t> idx) {
    RankedList list;
    list.indices = std::move(idx);
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t < list.indices.size(); ++t) {
      min_gap = std::min(min_gap, ds[list.indices[t - 1]].score -
                                      ds[list.indices[t]].score);
    }
    list.margin = min_gap;
    return list;
  };

  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::size_t> idx = rng.sample_indices(ds.size(), n);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (ds[a].score != ds[b].score) return ds[a].score > ds[b].score;
      return a < b;
    });
    bool ok = true;
    for (std::size_t t = 1; t < n && ok; ++t) {
      ok = margin_gap_ok(ds[idx[t - 1]].score, ds[idx[t]].score, margin);
    }
    if (ok) return finish(std::move(idx));
  }

  const std::vector<std::size_t> order = detail::score_order_desc(ds);
  std::vector<std::size_t> canonical = detail::greedy_chain(ds, order, 0, n, margin);
  if (canonical.size() < n) {
    throw InfeasibleError("no list of size " + std::to_string(n) +
                          " with margin " + format_real(margin) +
                          " exists in the dataset");
  }
  std::vector<std::size_t> picks = detail::greedy_chain(
      ds, order, static_cast<std::size_t>(rng.below(order.size())), n, margin);
  if (picks.size() < n) picks = std::move(canonical);
  return finish(std::move(picks));
}

// Pairs are drawn uniformly over the set of margin-feasible ordered pairs,
// located through prefix counts over the descending score order.
inline std::vector<PreferencePair> sample_pairs(const Dataset& ds,
                                                std::size_t count, double margin,
                                                Rng& rng) {
  detail::validate_margin(margin);
  if (ds.size() < 2) {
    throw InfeasibleError("dataset has fewer than two samples");
  }

  const std::vector<std::size_t> order = detail::score_order_desc(ds);
  const std::size_t n = order.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = ds[order[i]].score;

  // partner_start[i]: first position j > i with s[j] <= s[i] - margin and
  // s[j] < s[i]; both conditions select a suffix of the descending order.
  std::vector<std::size_t> partner_start(n);
  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double cutoff = s[i] - margin;
    const auto begin = s.begin() + static_cast<std::ptrdiff_t>(i) + 1;
    std::size_t ja = static_cast<std::size_t>(
        std::partition_point(begin, s.end(),
                             [&](double v) { return v > cutoff; }) -
        s.begin());
    std::size_t jb = static_cast<std::size_t>(
        std::partition_point(begin, s.end(),
                             [&](double v) { return v >= s[i]; }) -
        s.begin());
    partner_start[i] = std::max(ja, jb);
    prefix[i + 1] = prefix[i] + (n - partner_start[i]);
  }
  const std::uint64_t total = prefix[n];
  if (total == 0) {
    throw InfeasibleError("no pair with margin " + format_real(margin) +
                          " exists in the dataset");
  }

  std::vector<PreferencePair> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t t = rng.below(total);
    const std::size_t i = static_cast<std::size_t>(
        std::upper_bound(prefix.begin(), prefix.end(), t) - prefix.begin() - 1);
    const std::size_t j = partner_start[i] + static_cast<std::size_t>(t - prefix[i]);
    pairs.push_back(PreferencePair{order[i], order[j]});
  }
  return pairs;
}

}  // namespace ranklist
