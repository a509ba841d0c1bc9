#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ranklist/dataset.hpp"
#include "ranklist/errors.hpp"
#include "ranklist/rng.hpp"
#include "ranklist/scorer.hpp"

namespace ranklist {

namespace detail {

// Pairs (i < j) with v[i] > v[j], counted during an ascending merge sort.
// Ties never count: equal elements are taken from the left run first.
inline std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& tmp,
                                 std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t count = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t li = lo, ri = mid, out = lo;
  while (li < mid && ri < hi) {
    if (v[ri] < v[li]) {
      count += mid - li;
      tmp[out++] = v[ri++];
    } else {
      tmp[out++] = v[li++];
    }
  }
  while (li < mid) tmp[out++] = v[li++];
  while (ri < hi) tmp[out++] = v[ri++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
            tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

inline std::uint64_t count_inversions(std::vector<double> v) {
  std::vector<double> tmp(v.size());
  return merge_count(v, tmp, 0, v.size());
}

struct PairCounts {
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t total = 0;
};

inline PairCounts count_pairs(const std::vector<double>& pred,
                              const std::vector<double>& truth) {
  const std::size_t n = pred.size();
  if (n != truth.size()) throw ConfigError("metric input lengths differ");
  if (n < 2) throw ConfigError("rank metrics need at least 2 items");

  PairCounts pc;
  pc.total = static_cast<std::uint64_t>(n) * (n - 1) / 2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (truth[a] != truth[b]) return truth[a] > truth[b];
    return a < b;
  });

  bool truth_ties = false;
  for (std::size_t t = 1; t < n && !truth_ties; ++t) {
    truth_ties = truth[order[t - 1]] == truth[order[t]];
  }
  if (truth_ties) {
    // Out of the distinct-truth contract; fall back to the direct count with
    // pairs tied on either side staying neutral.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dt = truth[i] - truth[j];
        const double dp = pred[i] - pred[j];
        if (dt == 0.0 || dp == 0.0) continue;
        if ((dt > 0.0) == (dp > 0.0)) {
          ++pc.concordant;
        } else {
          ++pc.discordant;
        }
      }
    }
    return pc;
  }

  // In truth-descending order a discordant pair is an ascending pred pair,
  // which equals an inversion of the negated sequence.
  std::vector<double> seq(n);
  for (std::size_t t = 0; t < n; ++t) seq[t] = -pred[order[t]];
  pc.discordant = count_inversions(std::move(seq));

  std::vector<double> sorted_pred = pred;
  std::sort(sorted_pred.begin(), sorted_pred.end());
  std::uint64_t tied = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && sorted_pred[j] == sorted_pred[i]) ++j;
    const std::uint64_t run = j - i;
    tied += run * (run - 1) / 2;
    i = j;
  }
  pc.concordant = pc.total - pc.discordant - tied;
  return pc;
}

}  // namespace detail

// Kendall tau-a: (concordant - discordant) / C(n,2); predicted ties add 0.
inline double kendall_tau(const std::vector<double>& pred,
                          const std::vector<double>& truth) {
  const detail::PairCounts pc = detail::count_pairs(pred, truth);
  return (static_cast<double>(pc.concordant) - static_cast<double>(pc.discordant)) /
         static_cast<double>(pc.total);
}

// Percentage of correctly ordered pairs; equals 50 * (kendall_tau + 1) when
// the predictions are tie-free.
inline double pairwise_accuracy(const std::vector<double>& pred,
                                const std::vector<double>& truth) {
  const detail::PairCounts pc = detail::count_pairs(pred, truth);
  return 100.0 * static_cast<double>(pc.concordant) / static_cast<double>(pc.total);
}

// Ranks 1..n with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

// Spearman rank correlation (Pearson over average ranks). A zero-variance
// side makes the coefficient undefined; it is reported as 0 and flagged.
inline double spearman_rho(const std::vector<double>& pred,
                           const std::vector<double>& truth,
                           bool* degenerate = nullptr) {
  if (pred.size() != truth.size()) throw ConfigError("metric input lengths differ");
  if (pred.size() < 2) throw ConfigError("rank metrics need at least 2 items");
  if (degenerate) *degenerate = false;

  const std::vector<double> ra = average_ranks(pred);
  const std::vector<double> rb = average_ranks(truth);
  const double n = static_cast<double>(pred.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return sab / std::sqrt(saa * sbb);
}

namespace detail {

// Continued-fraction core of the regularized incomplete beta function.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

inline double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// P(T >= t) for Student's t with df degrees of freedom.
inline double student_t_upper_tail(double t, double df) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw ConfigError("degrees of freedom must be finite and > 0");
  }
  if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
  const double half = 0.5 * detail::incbeta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? half : 1.0 - half;
}

struct SignificanceResult {
  std::string baseline;
  double t = 0.0;
  double p_raw = 1.0;
  double p_corrected = 1.0;
  bool significant = false;
  bool degenerate = false;
};

// One-tailed paired t-test of mean(a - b) > 0 with Bonferroni correction
// over n_comparisons tests.
inline SignificanceResult paired_t_test(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        std::size_t n_comparisons) {
  if (a.size() != b.size()) throw ConfigError("paired t-test lengths differ");
  if (a.size() < 2) throw ConfigError("paired t-test needs at least 2 pairs");
  if (n_comparisons < 1) throw ConfigError("n_comparisons must be >= 1");

  const double m = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= m;
  double ssq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ssq += d * d;
  }
  const double sd = std::sqrt(ssq / (m - 1.0));

  SignificanceResult r;
  if (sd == 0.0) {
    r.degenerate = true;
    if (mean > 0.0) {
      r.t = std::numeric_limits<double>::infinity();
      r.p_raw = 0.0;
    } else if (mean < 0.0) {
      r.t = -std::numeric_limits<double>::infinity();
      r.p_raw = 1.0;
    } else {
      r.t = 0.0;
      r.p_raw = 0.5;
    }
  } else {
    r.t = mean / (sd / std::sqrt(m));
    r.p_raw = student_t_upper_tail(r.t, m - 1.0);
  }
  r.p_corrected = std::min(1.0, r.p_raw * static_cast<double>(n_comparisons));
  r.significant = r.p_corrected < 0.05;
  return r;
}

struct EvalReport {
  std::string method;
  std::size_t subset_size = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  double kt_mean = 0.0, kt_std = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
  double srcc_mean = 0.0, srcc_std = 0.0;
};

struct SubsetMetrics {
  std::vector<double> kt, acc, srcc;
};

// Subset draws are a pure function of (seed, repeats, subset_size, n).
inline std::vector<std::vector<std::size_t>> draw_subset_indices(
    std::size_t n, std::size_t subset_size, std::size_t repeats,
    std::uint64_t seed) {
  if (subset_size < 2) throw ConfigError("subset_size must be at least 2");
  if (subset_size > n) {
    throw Error("subset_size " + std::to_string(subset_size) +
                " exceeds dataset size " + std::to_string(n));
  }
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  Rng rng(derive_seed(seed, 0x5EB5E7ULL));
  std::vector<std::vector<std::size_t>> subsets(repeats);
  for (auto& s : subsets) s = rng.sample_indices(n, subset_size);
  return subsets;
}

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) {
    sd = 0.0;
    return;
  }
  double ssq = 0.0;
  for (double x : v) ssq += (x - mean) * (x - mean);
  sd = std::sqrt(ssq / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// Repeated-subset evaluation over precomputed predicted scores (one score
// per dataset sample, aligned by index).
inline std::pair<EvalReport, SubsetMetrics> eval_subsets(
    const std::vector<double>& pred, const Dataset& ds, std::size_t subset_size,
    std::size_t repeats, std::uint64_t seed, const std::string& method = "") {
  if (pred.size() != ds.size()) {
    throw ConfigError("prediction count does not match the dataset");
  }
  const auto subsets = draw_subset_indices(ds.size(), subset_size, repeats, seed);

  SubsetMetrics m;
  m.kt.reserve(repeats);
  m.acc.reserve(repeats);
  m.srcc.reserve(repeats);
  std::vector<double> sub_pred(subset_size), sub_true(subset_size);
  for (const auto& subset : subsets) {
    for (std::size_t t = 0; t < subset_size; ++t) {
      sub_pred[t] = pred[subset[t]];
      sub_true[t] = ds[subset[t]].score;
    }
    m.kt.push_back(kendall_tau(sub_pred, sub_true));
    m.acc.push_back(pairwise_accuracy(sub_pred, sub_true));
    m.srcc.push_back(spearman_rho(sub_pred, sub_true));
  }

  EvalReport r;
  r.method = method;
  r.subset_size = subset_size;
  r.repeats = repeats;
  r.seed = seed;
  detail::mean_std(m.kt, r.kt_mean, r.kt_std);
  detail::mean_std(m.acc, r.acc_mean, r.acc_std);
  detail::mean_std(m.srcc, r.srcc_mean, r.srcc_std);
  return {r, m};
}

// Scores every dataset member once, then evaluates subsets on the cache.
inline std::pair<EvalReport, SubsetMetrics> eval_subsets(
    const ScorerModel& model, const Dataset& ds, std::size_t subset_size,
    std::size_t repeats, std::uint64_t seed, const std::string& method = "") {
  std::vector<double> pred(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pred[i] = model.score(ds[i].features);
  return eval_subsets(pred, ds, subset_size, repeats, seed, method);
}

}  // namespace ranklist
