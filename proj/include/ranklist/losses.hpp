#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ranklist/errors.hpp"

namespace ranklist {

enum class LossKind {
  pairwise,
  listwise_adjacent,
  extended,
  ranklist,
  listnet,
  listmle,
  softrank,
  rnc,
};

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::pairwise: return "pairwise";
    case LossKind::listwise_adjacent: return "listwise_adjacent";
    case LossKind::extended: return "extended";
    case LossKind::ranklist: return "ranklist";
    case LossKind::listnet: return "listnet";
    case LossKind::listmle: return "listmle";
    case LossKind::softrank: return "softrank";
    case LossKind::rnc: return "rnc";
  }
  return "?";
}

inline LossKind parse_loss_kind(const std::string& name) {
  for (LossKind k : {LossKind::pairwise, LossKind::listwise_adjacent,
                     LossKind::extended, LossKind::ranklist, LossKind::listnet,
                     LossKind::listmle, LossKind::softrank, LossKind::rnc}) {
    if (name == loss_kind_name(k)) return k;
  }
  throw ConfigError(
      "unknown loss '" + name +
      "' (valid: pairwise, listwise_adjacent, extended, ranklist, listnet, "
      "listmle, softrank, rnc)");
}

struct LossConfig {
  LossKind kind = LossKind::ranklist;
  double sigma = 1.0;                  // pairwise steepness
  std::size_t max_skip = 2;            // K: offsets 1..K+1 enter the term set
  double rnc_temperature = 1.0;        // tau
  double softrank_smoothing = 1.0;     // sigma_r, rank-kernel width
  double listnet_target_scale = 1.0;   // beta applied to standardized truth

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("sigma must be finite and > 0");
    }
    if (!(rnc_temperature > 0.0) || !std::isfinite(rnc_temperature)) {
      throw ConfigError("rnc_temperature must be finite and > 0");
    }
    if (!(softrank_smoothing > 0.0) || !std::isfinite(softrank_smoothing)) {
      throw ConfigError("softrank_smoothing must be finite and > 0");
    }
    if (!(listnet_target_scale > 0.0) || !std::isfinite(listnet_target_scale)) {
      throw ConfigError("listnet_target_scale must be finite and > 0");
    }
  }
};

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

// One comparison (i, j) with j = i + offset; i ranks above j in ground truth.
struct ComparisonTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t offset = 0;
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// P(item i beats item j) under the logistic model.
inline double pairwise_prob(double si, double sj, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be finite and > 0");
  }
  return sigmoid(sigma * (si - sj));
}

// Logistic pairwise loss; label 1 means si should rank above sj.
inline LossResult ranknet_loss(double si, double sj, int label, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be finite and > 0");
  }
  if (label != 0 && label != 1) {
    throw ConfigError("ranknet label must be 0 or 1");
  }
  const double delta = si - sj;
  LossResult out;
  out.grad.resize(2);
  if (label == 1) {
    out.value = softplus(-sigma * delta);
    const double g = sigma * sigmoid(-sigma * delta);
    out.grad[0] = -g;
    out.grad[1] = g;
  } else {
    out.value = softplus(sigma * delta);
    const double g = sigma * sigmoid(sigma * delta);
    out.grad[0] = g;
    out.grad[1] = -g;
  }
  return out;
}

// All comparisons with position offsets 1..max_skip+1, offsets clipped at the
// list length. Ordered by offset, then by left index.
inline std::vector<ComparisonTerm> enumerate_terms(std::size_t n,
                                                   std::size_t max_skip) {
  if (n < 2) throw ConfigError("term enumeration needs a list of length >= 2");
  std::vector<ComparisonTerm> terms;
  for (std::size_t k = 0; k <= max_skip; ++k) {
    const std::size_t offset = k + 1;
    if (offset >= n) break;
    for (std::size_t i = 0; i + offset < n; ++i) {
      terms.push_back(ComparisonTerm{i, i + offset, offset});
    }
  }
  return terms;
}

namespace detail {

inline void require_list(const std::vector<double>& scores) {
  if (scores.size() < 2) {
    throw ConfigError("listwise losses need at least 2 scores");
  }
}

}  // namespace detail

// Sum of independent logistic terms over the skip-extended comparison set.
inline LossResult extended_loss(const std::vector<double>& scores,
                                const LossConfig& cfg) {
  cfg.validate();
  detail::require_list(scores);
  const std::vector<ComparisonTerm> terms = enumerate_terms(scores.size(), cfg.max_skip);
  LossResult out;
  out.grad.assign(scores.size(), 0.0);
  for (const ComparisonTerm& t : terms) {
    const double diff = scores[t.i] - scores[t.j];
    out.value += softplus(-cfg.sigma * diff);
    const double g = cfg.sigma * sigmoid(-cfg.sigma * diff);
    out.grad[t.i] -= g;
    out.grad[t.j] += g;
  }
  return out;
}

inline LossResult listwise_adjacent_loss(const std::vector<double>& scores,
                                         const LossConfig& cfg) {
  LossConfig adjacent = cfg;
  adjacent.max_skip = 0;
  return extended_loss(scores, adjacent);
}

// log(1 + sum_t exp(-sigma * diff_t)) over the same term set as
// extended_loss, evaluated through a shifted log-sum-exp. The softmax-style
// term weights sum to Z/(1+Z) < 1, which caps every gradient component below
// sigma and the gradient L1 norm below 2*sigma regardless of how misordered
// the scores are. Under saturation the stored weight sum can round up to 1
// and component-wise accumulation can creep one ulp past any single-ulp
// pullback, so the weights are rescaled into a 1e-12 guard band; the bias is
// orders of magnitude below finite-difference noise.
inline LossResult ranklist_loss(const std::vector<double>& scores,
                                const LossConfig& cfg) {
  cfg.validate();
  detail::require_list(scores);
  const std::vector<ComparisonTerm> terms = enumerate_terms(scores.size(), cfg.max_skip);

  std::vector<double> a(terms.size());
  double peak = 0.0;  // the implicit exp(0) term of 1 + Z
  for (std::size_t t = 0; t < terms.size(); ++t) {
    a[t] = -cfg.sigma * (scores[terms[t].i] - scores[terms[t].j]);
    peak = std::max(peak, a[t]);
  }

  LossResult out;
  out.grad.assign(scores.size(), 0.0);
  std::vector<double> w(terms.size());
  if (peak <= 0.0) {
    double z = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      w[t] = std::exp(a[t]);
      z += w[t];
    }
    out.value = std::log1p(z);
    const double denom = 1.0 + z;
    for (double& wt : w) wt /= denom;
  } else {
    double sum = std::exp(-peak);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      w[t] = std::exp(a[t] - peak);
      sum += w[t];
    }
    out.value = peak + std::log(sum);
    for (double& wt : w) wt /= sum;
  }

  double total = 0.0;
  for (double wt : w) total += wt;
  constexpr double cap = 1.0 - 1e-12;
  double scale = 1.0;
  if (total > cap) scale = cap / total;

  for (std::size_t t = 0; t < terms.size(); ++t) {
    const double g = cfg.sigma * w[t] * scale;
    out.grad[terms[t].i] -= g;
    out.grad[terms[t].j] += g;
  }
  return out;
}

// Top-one softmax cross-entropy. The target distribution is the softmax of
// the standardized true scores scaled by listnet_target_scale; a constant
// true-score list yields a uniform target.
inline LossResult listnet_loss(const std::vector<double>& pred,
                               const std::vector<double>& truth,
                               const LossConfig& cfg) {
  cfg.validate();
  detail::require_list(pred);
  if (pred.size() != truth.size()) {
    throw ConfigError("listnet: prediction and truth lengths differ");
  }
  const std::size_t n = pred.size();

  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double y : truth) var += (y - mean) * (y - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);

  std::vector<double> target(n);
  double tmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = sd > 0.0 ? cfg.listnet_target_scale * (truth[i] - mean) / sd : 0.0;
    tmax = std::max(tmax, target[i]);
  }
  double tsum = 0.0;
  for (double& t : target) {
    t = std::exp(t - tmax);
    tsum += t;
  }
  for (double& t : target) t /= tsum;

  const double pmax = *std::max_element(pred.begin(), pred.end());
  double psum = 0.0;
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(pred[i] - pmax);
    psum += p[i];
  }
  const double lse = pmax + std::log(psum);

  LossResult out;
  out.grad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] /= psum;
    out.value += target[i] * (lse - pred[i]);
    out.grad[i] = p[i] - target[i];
  }
  return out;
}

// Plackett-Luce negative log-likelihood of the given order (scores arrive
// already arranged by descending ground truth).
inline LossResult listmle_loss(const std::vector<double>& scores,
                               const LossConfig& cfg) {
  cfg.validate();
  detail::require_list(scores);
  const std::size_t n = scores.size();

  std::vector<double> suffix_lse(n);
  suffix_lse[n - 1] = scores[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    suffix_lse[i] = logaddexp(scores[i], suffix_lse[i + 1]);
  }

  LossResult out;
  out.grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out.value += suffix_lse[i] - scores[i];
  // d/ds_j = sum_{i <= j} softmax_i(j) - 1; each exponent is <= 0.
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i <= j; ++i) {
      acc += std::exp(scores[j] - suffix_lse[i]);
    }
    out.grad[j] = acc - 1.0;
  }
  return out;
}

// Smoothed expected ranks: mu_i = 1 + sum_{j != i} P(s_j > s_i) under the
// unit-steepness logistic model. The expected ranks always sum to n(n+1)/2.
inline std::vector<double> softrank_expected_ranks(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<double> mu(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      mu[i] += sigmoid(scores[j] - scores[i]);
    }
  }
  return mu;
}

// Gaussian rank-distribution cross-entropy against one-hot true ranks.
// true_ranks must be a permutation of 1..n.
inline LossResult softrank_loss(const std::vector<double>& pred,
                                const std::vector<std::size_t>& true_ranks,
                                const LossConfig& cfg) {
  cfg.validate();
  detail::require_list(pred);
  const std::size_t n = pred.size();
  if (true_ranks.size() != n) {
    throw ConfigError("softrank: prediction and rank lengths differ");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t r : true_ranks) {
    if (r < 1 || r > n || seen[r - 1]) {
      throw ConfigError("softrank: true_ranks must be a permutation of 1..n");
    }
    seen[r - 1] = true;
  }

  const double sr = cfg.softrank_smoothing;
  const std::vector<double> mu = softrank_expected_ranks(pred);

  LossResult out;
  out.grad.assign(n, 0.0);
  std::vector<double> dl_dmu(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::vector<double> g(n);
    for (std::size_t r = 1; r <= n; ++r) {
      const double d = static_cast<double>(r) - mu[i];
      g[r - 1] = -d * d / (2.0 * sr * sr);
      gmax = std::max(gmax, g[r - 1]);
    }
    double wsum = 0.0, rsum = 0.0;
    for (std::size_t r = 1; r <= n; ++r) {
      const double w = std::exp(g[r - 1] - gmax);
      wsum += w;
      rsum += w * static_cast<double>(r);
    }
    const double log_z = gmax + std::log(wsum);
    out.value += log_z - g[true_ranks[i] - 1];
    dl_dmu[i] = (rsum / wsum - static_cast<double>(true_ranks[i])) / (sr * sr);
  }

  // mu couples every pair of scores through sigmoid(s_j - s_i); the sigmoid
  // slope is symmetric in the pair.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double q = sigmoid(pred[j] - pred[i]);
      const double slope = q * (1.0 - q);
      out.grad[j] += (dl_dmu[i] - dl_dmu[j]) * slope;
      out.grad[i] += (dl_dmu[j] - dl_dmu[i]) * slope;
    }
  }
  return out;
}

// Label-contrastive loss over embeddings: softmax over cosine similarities
// at temperature tau, positive = nearest label to the anchor (lowest index
// on ties). The gradient spans all embeddings, flattened row-major.
inline LossResult rnc_loss(const std::vector<std::vector<double>>& embeddings,
                           const std::vector<double>& labels, std::size_t anchor,
                           const LossConfig& cfg) {
  cfg.validate();
  const std::size_t n = embeddings.size();
  if (n < 3) throw ConfigError("rnc needs at least 3 items");
  if (labels.size() != n) throw ConfigError("rnc: label count mismatch");
  if (anchor >= n) throw ConfigError("rnc: anchor index out of range");
  const std::size_t dim = embeddings[0].size();
  if (dim == 0) throw ConfigError("rnc: empty embeddings");

  std::vector<double> norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (embeddings[i].size() != dim) {
      throw ConfigError("rnc: inconsistent embedding dimensions");
    }
    double sq = 0.0;
    for (double v : embeddings[i]) sq += v * v;
    norm[i] = std::sqrt(sq);
    if (norm[i] == 0.0) throw Error("rnc: zero-norm embedding");
  }

  std::size_t pos = anchor == 0 ? 1 : 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == anchor) continue;
    if (std::abs(labels[j] - labels[anchor]) <
        std::abs(labels[pos] - labels[anchor])) {
      pos = j;
    }
  }

  const std::vector<double>& za = embeddings[anchor];
  std::vector<double> cosv(n, 0.0), sim(n, 0.0);
  double smax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == anchor) continue;
    double dot = 0.0;
    for (std::size_t t = 0; t < dim; ++t) dot += za[t] * embeddings[j][t];
    cosv[j] = dot / (norm[anchor] * norm[j]);
    sim[j] = cosv[j] / cfg.rnc_temperature;
    smax = std::max(smax, sim[j]);
  }
  double zsum = 0.0;
  std::vector<double> soft(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == anchor) continue;
    soft[j] = std::exp(sim[j] - smax);
    zsum += soft[j];
  }
  const double lse = smax + std::log(zsum);

  LossResult out;
  out.value = lse - sim[pos];
  out.grad.assign(n * dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == anchor) continue;
    const double coef = soft[j] / zsum - (j == pos ? 1.0 : 0.0);
    if (coef == 0.0) continue;
    const double c = coef / cfg.rnc_temperature;
    const std::vector<double>& zj = embeddings[j];
    for (std::size_t t = 0; t < dim; ++t) {
      out.grad[anchor * dim + t] +=
          c * (zj[t] / (norm[anchor] * norm[j]) -
               cosv[j] * za[t] / (norm[anchor] * norm[anchor]));
      out.grad[j * dim + t] +=
          c * (za[t] / (norm[anchor] * norm[j]) -
               cosv[j] * zj[t] / (norm[j] * norm[j]));
    }
  }
  return out;
}

// Central-difference check of an analytic gradient. Returns the worst
// component error |analytic - numeric| / max(1, |numeric|).
template <class Eval>
double check_gradient(Eval&& f, std::vector<double> point, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ConfigError("finite-difference step must be finite and > 0");
  }
  const LossResult base = f(point);
  if (base.grad.size() != point.size()) {
    throw Error("gradient length does not match the evaluation point");
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < point.size(); ++j) {
    const double orig = point[j];
    point[j] = orig + eps;
    const double fp = f(point).value;
    point[j] = orig - eps;
    const double fm = f(point).value;
    point[j] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw Error("non-finite loss value during finite-difference probe");
    }
    const double numeric = (fp - fm) / (2.0 * eps);
    const double err =
        std::abs(base.grad[j] - numeric) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

// Dispatch for losses that consume a predicted score list aligned with a
// ground-truth-descending list. pairwise and rnc are handled elsewhere.
inline LossResult listwise_loss(const LossConfig& cfg,
                                const std::vector<double>& pred,
                                const std::vector<double>& truth) {
  switch (cfg.kind) {
    case LossKind::ranklist: return ranklist_loss(pred, cfg);
    case LossKind::extended: return extended_loss(pred, cfg);
    case LossKind::listwise_adjacent: return listwise_adjacent_loss(pred, cfg);
    case LossKind::listnet: return listnet_loss(pred, truth, cfg);
    case LossKind::listmle: return listmle_loss(pred, cfg);
    case LossKind::softrank: {
      std::vector<std::size_t> ranks(pred.size());
      for (std::size_t r = 0; r < ranks.size(); ++r) ranks[r] = r + 1;
      return softrank_loss(pred, ranks, cfg);
    }
    default:
      throw ConfigError(std::string("loss '") + loss_kind_name(cfg.kind) +
                        "' does not operate on a score list");
  }
}

}  // namespace ranklist
