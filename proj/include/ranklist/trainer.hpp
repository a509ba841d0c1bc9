#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ranklist/dataset.hpp"
#include "ranklist/errors.hpp"
#include "ranklist/losses.hpp"
#include "ranklist/metrics.hpp"
#include "ranklist/rng.hpp"
#include "ranklist/sampling.hpp"
#include "ranklist/scorer.hpp"

namespace ranklist {

struct TrainConfig {
  LossConfig loss;                        // finetune objective
  std::size_t list_size = 8;              // N
  double margin = 0.3;                    // W
  std::size_t lists_per_epoch = 100;
  std::size_t pairs_per_epoch = 700;
  std::size_t pretrain_epochs = 20;
  std::size_t finetune_epochs = 80;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  double clip = 0.0;                      // max gradient L2 norm; 0 disables
  std::vector<std::size_t> hidden_dims{64, 32};
  Activation activation = Activation::relu;
  std::size_t embedding_dim = 16;         // rnc head width

  void validate() const {
    loss.validate();
    if (list_size < 2) throw ConfigError("list size must be at least 2");
    if (!(margin >= 0.0) || !std::isfinite(margin)) {
      throw ConfigError("margin must be finite and >= 0");
    }
    if (lists_per_epoch < 1) throw ConfigError("lists_per_epoch must be >= 1");
    if (pairs_per_epoch < 1) throw ConfigError("pairs_per_epoch must be >= 1");
    if (pretrain_epochs + finetune_epochs < 1) {
      throw ConfigError("at least one training epoch is required");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning rate must be finite and > 0");
    }
    if (!(clip >= 0.0) || !std::isfinite(clip)) {
      throw ConfigError("clip must be finite and >= 0");
    }
    if (hidden_dims.empty()) throw ConfigError("at least one hidden layer is required");
    for (std::size_t h : hidden_dims) {
      if (h == 0) throw ConfigError("hidden dimensions must be positive");
    }
    if (embedding_dim < 2) throw ConfigError("embedding_dim must be at least 2");
  }
};

struct TrainLogEntry {
  std::string phase;       // "pretrain" or "finetune"; epoch restarts per phase
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double mean_grad_l1 = 0.0;   // score-space gradient, averaged over draws
  double mean_grad_max = 0.0;  // largest |component|, averaged over draws
  double wall_time_ms = 0.0;   // excluded from determinism guarantees
};

struct TrainResult {
  ScorerModel model;
  std::vector<TrainLogEntry> log;
};

inline nlohmann::json log_entry_json(const TrainLogEntry& e) {
  return nlohmann::json{{"phase", e.phase},
                        {"epoch", e.epoch},
                        {"mean_loss", e.mean_loss},
                        {"mean_grad_l1", e.mean_grad_l1},
                        {"mean_grad_max", e.mean_grad_max},
                        {"wall_time_ms", e.wall_time_ms}};
}

namespace detail {

inline void check_dataset(const Dataset& ds) {
  if (ds.size() < 2) throw ConfigError("dataset has fewer than 2 samples");
  const std::size_t dim = ds.dim();
  if (dim == 0) throw ConfigError("dataset has no features");
  for (const LabeledSample& s : ds.samples) {
    if (s.features.size() != dim) {
      throw ConfigError("sample '" + s.id + "' has inconsistent dimension");
    }
  }
}

inline void maybe_clip(Gradients& grads, double clip) {
  if (clip <= 0.0) return;
  const double norm = grads.l2_norm();
  if (norm > clip) grads.scale(clip / norm);
}

struct EpochStats {
  double loss_sum = 0.0;
  double l1_sum = 0.0;
  double max_sum = 0.0;
  std::size_t draws = 0;

  void add(double value, const std::vector<double>& score_grad) {
    double l1 = 0.0, mx = 0.0;
    for (double g : score_grad) {
      l1 += std::abs(g);
      mx = std::max(mx, std::abs(g));
    }
    loss_sum += value;
    l1_sum += l1;
    max_sum += mx;
    ++draws;
  }

  TrainLogEntry entry(const std::string& phase, std::size_t epoch,
                      double wall_ms) const {
    TrainLogEntry e;
    e.phase = phase;
    e.epoch = epoch;
    const double n = static_cast<double>(draws);
    e.mean_loss = loss_sum / n;
    e.mean_grad_l1 = l1_sum / n;
    e.mean_grad_max = max_sum / n;
    e.wall_time_ms = wall_ms;
    return e;
  }
};

class EpochTimer {
 public:
  EpochTimer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// One pairwise epoch: every sampled pair is a separate optimizer step.
inline TrainLogEntry run_pair_epoch(const Dataset& ds, const TrainConfig& cfg,
                                    ScorerModel& model, OptimizerState& opt,
                                    Rng& rng, const std::string& phase,
                                    std::size_t epoch) {
  const EpochTimer timer;
  EpochStats stats;
  Gradients grads(model);
  const std::vector<PreferencePair> pairs =
      sample_pairs(ds, cfg.pairs_per_epoch, cfg.margin, rng);
  for (const PreferencePair& pair : pairs) {
    ForwardCache hi_cache, lo_cache;
    const double s_hi = model.forward(ds[pair.hi].features, &hi_cache)[0];
    const double s_lo = model.forward(ds[pair.lo].features, &lo_cache)[0];
    const LossResult loss = ranknet_loss(s_hi, s_lo, 1, cfg.loss.sigma);
    if (!std::isfinite(loss.value)) {
      throw Error("non-finite loss in " + phase + " epoch " + std::to_string(epoch));
    }
    grads.zero();
    backward(model, hi_cache, std::vector<double>{loss.grad[0]}, grads);
    backward(model, lo_cache, std::vector<double>{loss.grad[1]}, grads);
    maybe_clip(grads, cfg.clip);
    step(model, grads, opt);
    stats.add(loss.value, loss.grad);
  }
  return stats.entry(phase, epoch, timer.ms());
}

// One listwise epoch: every sampled list is a separate optimizer step.
inline TrainLogEntry run_list_epoch(const Dataset& ds, const TrainConfig& cfg,
                                    ScorerModel& model, OptimizerState& opt,
                                    Rng& rng, std::size_t epoch) {
  const EpochTimer timer;
  EpochStats stats;
  Gradients grads(model);
  const std::size_t n = cfg.list_size;
  std::vector<ForwardCache> caches(n);
  std::vector<double> pred(n), truth(n);
  for (std::size_t l = 0; l < cfg.lists_per_epoch; ++l) {
    const RankedList list = sample_list(ds, n, cfg.margin, rng);
    for (std::size_t t = 0; t < n; ++t) {
      pred[t] = model.forward(ds[list.indices[t]].features, &caches[t])[0];
      truth[t] = ds[list.indices[t]].score;
    }
    const LossResult loss = listwise_loss(cfg.loss, pred, truth);
    if (!std::isfinite(loss.value)) {
      throw Error("non-finite loss in finetune epoch " + std::to_string(epoch));
    }
    grads.zero();
    for (std::size_t t = 0; t < n; ++t) {
      backward(model, caches[t], std::vector<double>{loss.grad[t]}, grads);
    }
    maybe_clip(grads, cfg.clip);
    step(model, grads, opt);
    stats.add(loss.value, loss.grad);
  }
  return stats.entry("finetune", epoch, timer.ms());
}

inline TrainResult train_rnc(const Dataset& ds, const TrainConfig& cfg);

}  // namespace detail

// Curriculum training: pairwise pretraining epochs followed by listwise
// finetuning with the configured loss. Each sampled pair or list is one
// optimizer step; logged statistics are means over the epoch's draws.
// Identical (dataset, config) inputs give identical parameter trajectories.
inline TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  detail::check_dataset(ds);
  if (cfg.loss.kind == LossKind::rnc) return detail::train_rnc(ds, cfg);

  std::vector<std::size_t> dims;
  dims.push_back(ds.dim());
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(1);

  TrainResult out;
  out.model = ScorerModel(dims, cfg.activation, cfg.seed);
  OptimizerState opt = make_optimizer(out.model, cfg.optimizer, cfg.learning_rate);
  Rng rng(derive_seed(cfg.seed, 0x7261696EULL));

  for (std::size_t e = 0; e < cfg.pretrain_epochs; ++e) {
    out.log.push_back(
        detail::run_pair_epoch(ds, cfg, out.model, opt, rng, "pretrain", e));
  }
  for (std::size_t e = 0; e < cfg.finetune_epochs; ++e) {
    if (cfg.loss.kind == LossKind::pairwise) {
      out.log.push_back(
          detail::run_pair_epoch(ds, cfg, out.model, opt, rng, "finetune", e));
    } else {
      out.log.push_back(detail::run_list_epoch(ds, cfg, out.model, opt, rng, e));
    }
  }
  return out;
}

namespace detail {

// Solves (A + ridge*I) x = y in place; A is symmetric positive definite up
// to rounding. Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> y) {
  const std::size_t n = y.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw Error("singular system in linear probe fit");
    std::swap(a[col], a[pivot]);
    std::swap(y[col], y[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      y[r] -= f * y[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double acc = y[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

// The embedding head has no pairwise pretraining phase: the whole epoch
// budget trains with the contrastive loss, anchors averaged per list. A
// least-squares probe from embedding to score is appended afterwards so the
// result scores samples like any other model.
inline TrainResult train_rnc(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<std::size_t> dims;
  dims.push_back(ds.dim());
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.embedding_dim);

  TrainResult out;
  out.model = ScorerModel(dims, cfg.activation, cfg.seed);
  OptimizerState opt = make_optimizer(out.model, cfg.optimizer, cfg.learning_rate);
  Rng rng(derive_seed(cfg.seed, 0x7261696EULL));

  const std::size_t n = cfg.list_size;
  const std::size_t edim = cfg.embedding_dim;
  const std::size_t epochs = cfg.pretrain_epochs + cfg.finetune_epochs;
  std::vector<ForwardCache> caches(n);
  std::vector<std::vector<double>> emb(n);
  std::vector<double> labels(n);
  Gradients grads(out.model);

  for (std::size_t e = 0; e < epochs; ++e) {
    const EpochTimer timer;
    EpochStats stats;
    for (std::size_t l = 0; l < cfg.lists_per_epoch; ++l) {
      const RankedList list = sample_list(ds, n, cfg.margin, rng);
      for (std::size_t t = 0; t < n; ++t) {
        emb[t] = out.model.forward(ds[list.indices[t]].features, &caches[t]);
        labels[t] = ds[list.indices[t]].score;
      }
      double value = 0.0;
      std::vector<double> demb(n * edim, 0.0);
      for (std::size_t anchor = 0; anchor < n; ++anchor) {
        const LossResult part = rnc_loss(emb, labels, anchor, cfg.loss);
        value += part.value / static_cast<double>(n);
        for (std::size_t k = 0; k < demb.size(); ++k) {
          demb[k] += part.grad[k] / static_cast<double>(n);
        }
      }
      if (!std::isfinite(value)) {
        throw Error("non-finite loss in finetune epoch " + std::to_string(e));
      }
      grads.zero();
      for (std::size_t t = 0; t < n; ++t) {
        backward(out.model, caches[t],
                 std::span<const double>(demb.data() + t * edim, edim), grads);
      }
      maybe_clip(grads, cfg.clip);
      step(out.model, grads, opt);
      stats.add(value, demb);
    }
    out.log.push_back(stats.entry("finetune", e, timer.ms()));
  }

  // Ridge-stabilized least squares of score on [embedding, 1].
  const std::size_t cols = edim + 1;
  std::vector<std::vector<double>> xtx(cols, std::vector<double>(cols, 0.0));
  std::vector<double> xty(cols, 0.0);
  std::vector<double> row(cols, 1.0);
  for (const LabeledSample& s : ds.samples) {
    const std::vector<double> z = out.model.forward(s.features);
    for (std::size_t c = 0; c < edim; ++c) row[c] = z[c];
    row[edim] = 1.0;
    for (std::size_t r = 0; r < cols; ++r) {
      for (std::size_t c = r; c < cols; ++c) xtx[r][c] += row[r] * row[c];
      xty[r] += row[r] * s.score;
    }
  }
  double scale = 0.0;
  for (std::size_t r = 0; r < cols; ++r) {
    for (std::size_t c = 0; c < r; ++c) xtx[r][c] = xtx[c][r];
    scale = std::max(scale, xtx[r][r]);
  }
  for (std::size_t r = 0; r < cols; ++r) xtx[r][r] += 1e-8 * std::max(scale, 1.0);
  const std::vector<double> beta = solve_linear(std::move(xtx), std::move(xty));

  std::vector<double> probe_w(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(edim));
  out.model.append_identity_layer(std::move(probe_w), {beta[edim]});
  return out;
}

}  // namespace detail

enum class AblationVariant { full, wa, skip1, skip3, no_skip, wo_pt };

inline const char* ablation_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::full: return "full";
    case AblationVariant::wa: return "WA";
    case AblationVariant::skip1: return "skip1";
    case AblationVariant::skip3: return "skip3";
    case AblationVariant::no_skip: return "no_skip";
    case AblationVariant::wo_pt: return "wo_pt";
  }
  return "?";
}

inline AblationVariant parse_ablation(const std::string& name) {
  for (AblationVariant v :
       {AblationVariant::full, AblationVariant::wa, AblationVariant::skip1,
        AblationVariant::skip3, AblationVariant::no_skip, AblationVariant::wo_pt}) {
    if (name == ablation_name(v)) return v;
  }
  throw ConfigError("unknown ablation variant '" + name +
                    "' (valid: full, WA, skip1, skip3, no_skip, wo_pt)");
}

// full: curriculum + ranklist K=2. WA: extended loss in place of ranklist.
// skip1/skip3/no_skip: ranklist with K=1/3/0. wo_pt: no pairwise phase.
inline TrainConfig ablation_config(TrainConfig base, AblationVariant v) {
  base.loss.kind = LossKind::ranklist;
  base.loss.max_skip = 2;
  switch (v) {
    case AblationVariant::full: break;
    case AblationVariant::wa: base.loss.kind = LossKind::extended; break;
    case AblationVariant::skip1: base.loss.max_skip = 1; break;
    case AblationVariant::skip3: base.loss.max_skip = 3; break;
    case AblationVariant::no_skip: base.loss.max_skip = 0; break;
    case AblationVariant::wo_pt: base.pretrain_epochs = 0; break;
  }
  return base;
}

struct EvalProtocol {
  std::size_t subset_size = 200;
  std::size_t repeats = 100;
  std::uint64_t seed = 0;
};

struct AblationResult {
  TrainResult trained;
  EvalReport report;
  SubsetMetrics subsets;
};

inline AblationResult run_ablation(const Dataset& ds, const TrainConfig& base,
                                   AblationVariant variant,
                                   const EvalProtocol& protocol) {
  AblationResult out;
  out.trained = train(ds, ablation_config(base, variant));
  auto [report, subsets] =
      eval_subsets(out.trained.model, ds, protocol.subset_size, protocol.repeats,
                   protocol.seed, ablation_name(variant));
  out.report = std::move(report);
  out.subsets = std::move(subsets);
  return out;
}

struct DiagnoseConfig {
  double sigma = 1.0;
  std::size_t max_skip = 2;
  std::size_t list_size = 8;
  double margin = 0.3;
  std::size_t n_lists = 100;
  std::uint64_t seed = 0;
};

struct DiagnosticsReport {
  double loss_ratio = 0.0;
  double grad_ratio = 0.0;
  std::size_t n_lists = 0;
  double ranklist_loss_sum = 0.0;
  double extended_loss_sum = 0.0;
  double ranklist_grad_l1_sum = 0.0;
  double extended_grad_l1_sum = 0.0;
};

// Accumulates both objectives over freshly sampled lists at the model's
// current parameters. The loss ratio is bounded by 1 from above because the
// bounded objective is dominated termwise by the additive one.
inline DiagnosticsReport diagnose(const ScorerModel& model, const Dataset& ds,
                                  const DiagnoseConfig& cfg) {
  if (model.output_dim() != 1) {
    throw ConfigError("diagnostics need a scoring model (output dimension 1)");
  }
  if (cfg.n_lists < 1) throw ConfigError("n_lists must be >= 1");
  detail::check_dataset(ds);

  LossConfig lc;
  lc.sigma = cfg.sigma;
  lc.max_skip = cfg.max_skip;
  lc.validate();

  Rng rng(derive_seed(cfg.seed, 0xD1A6ULL));
  DiagnosticsReport rep;
  rep.n_lists = cfg.n_lists;
  std::vector<double> pred(cfg.list_size);
  for (std::size_t l = 0; l < cfg.n_lists; ++l) {
    const RankedList list = sample_list(ds, cfg.list_size, cfg.margin, rng);
    for (std::size_t t = 0; t < cfg.list_size; ++t) {
      pred[t] = model.score(ds[list.indices[t]].features);
    }
    const LossResult rl = ranklist_loss(pred, lc);
    const LossResult ex = extended_loss(pred, lc);
    rep.ranklist_loss_sum += rl.value;
    rep.extended_loss_sum += ex.value;
    for (double g : rl.grad) rep.ranklist_grad_l1_sum += std::abs(g);
    for (double g : ex.grad) rep.extended_grad_l1_sum += std::abs(g);
  }
  rep.loss_ratio = rep.ranklist_loss_sum / rep.extended_loss_sum;
  rep.grad_ratio = rep.ranklist_grad_l1_sum / rep.extended_grad_l1_sum;
  return rep;
}

inline nlohmann::json diagnostics_json(const DiagnosticsReport& r) {
  return nlohmann::json{{"loss_ratio", r.loss_ratio},
                        {"grad_ratio", r.grad_ratio},
                        {"n_lists", r.n_lists},
                        {"ranklist_loss_sum", r.ranklist_loss_sum},
                        {"extended_loss_sum", r.extended_loss_sum},
                        {"ranklist_grad_l1_sum", r.ranklist_grad_l1_sum},
                        {"extended_grad_l1_sum", r.extended_grad_l1_sum}};
}

inline nlohmann::json report_json(const EvalReport& r) {
  return nlohmann::json{{"method", r.method},
                        {"subset_size", r.subset_size},
                        {"repeats", r.repeats},
                        {"seed", r.seed},
                        {"kt_mean", r.kt_mean},
                        {"kt_std", r.kt_std},
                        {"acc_mean", r.acc_mean},
                        {"acc_std", r.acc_std},
                        {"srcc_mean", r.srcc_mean},
                        {"srcc_std", r.srcc_std}};
}

inline std::string subsets_csv(const SubsetMetrics& m) {
  std::string out = "subset_idx,kt,acc,srcc\n";
  for (std::size_t i = 0; i < m.kt.size(); ++i) {
    out += std::to_string(i) + ',' + format_real(m.kt[i]) + ',' +
           format_real(m.acc[i]) + ',' + format_real(m.srcc[i]) + '\n';
  }
  return out;
}

inline const std::vector<LossKind>& benchmark_method_order() {
  static const std::vector<LossKind> order = {
      LossKind::pairwise, LossKind::listnet, LossKind::listmle,
      LossKind::softrank, LossKind::rnc,     LossKind::extended,
      LossKind::ranklist};
  return order;
}

struct BenchConfig {
  TrainConfig train;      // loss.kind is overridden per method
  EvalProtocol protocol;
};

struct BenchRow {
  std::string method;
  TrainResult trained;
  EvalReport report;
  SubsetMetrics subsets;
  bool has_significance = false;
  SignificanceResult sig;
};

struct BenchResult {
  std::vector<BenchRow> rows;
};

// Trains every method with a shared architecture, seed and epoch budget,
// evaluates all of them on identical subsets, and tests ranklist against
// each other method on the per-subset Kendall taus (Bonferroni-corrected).
// The pairwise method spends the whole budget on its pairwise phase; the
// listwise methods share the pairwise pretraining curriculum.
inline BenchResult benchmark(const Dataset& ds,
                             const std::vector<LossKind>& methods,
                             const BenchConfig& cfg) {
  if (methods.empty()) throw ConfigError("no benchmark methods given");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i] == LossKind::listwise_adjacent) {
      throw ConfigError("listwise_adjacent is not a benchmark method");
    }
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      if (methods[i] == methods[j]) {
        throw ConfigError(std::string("duplicate benchmark method '") +
                          loss_kind_name(methods[i]) + "'");
      }
    }
  }

  BenchResult out;
  std::size_t ranklist_row = methods.size();
  for (LossKind m : methods) {
    TrainConfig mc = cfg.train;
    mc.loss.kind = m;
    if (m == LossKind::pairwise) {
      mc.pretrain_epochs = cfg.train.pretrain_epochs + cfg.train.finetune_epochs;
      mc.finetune_epochs = 0;
    }
    BenchRow row;
    row.method = loss_kind_name(m);
    row.trained = train(ds, mc);
    auto [report, subsets] =
        eval_subsets(row.trained.model, ds, cfg.protocol.subset_size,
                     cfg.protocol.repeats, cfg.protocol.seed, row.method);
    row.report = std::move(report);
    row.subsets = std::move(subsets);
    if (m == LossKind::ranklist) ranklist_row = out.rows.size();
    out.rows.push_back(std::move(row));
  }

  if (ranklist_row < out.rows.size() && out.rows.size() >= 2) {
    const std::vector<double>& ours = out.rows[ranklist_row].subsets.kt;
    const std::size_t n_comparisons = out.rows.size() - 1;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      if (i == ranklist_row) continue;
      out.rows[i].sig = paired_t_test(ours, out.rows[i].subsets.kt, n_comparisons);
      out.rows[i].sig.baseline = out.rows[i].method;
      out.rows[i].has_significance = true;
    }
  }
  return out;
}

inline std::string benchmark_csv(const BenchResult& res) {
  std::string out =
      "method,kt_mean,kt_std,acc_mean,acc_std,srcc_mean,srcc_std,"
      "p_raw,p_corrected,significant\n";
  for (const BenchRow& row : res.rows) {
    out += row.method + ',' + format_real(row.report.kt_mean) + ',' +
           format_real(row.report.kt_std) + ',' + format_real(row.report.acc_mean) +
           ',' + format_real(row.report.acc_std) + ',' +
           format_real(row.report.srcc_mean) + ',' + format_real(row.report.srcc_std);
    if (row.has_significance) {
      out += ',' + format_real(row.sig.p_raw) + ',' +
             format_real(row.sig.p_corrected) + ',' +
             (row.sig.significant ? "true" : "false");
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json benchmark_json(const BenchResult& res,
                                     const EvalProtocol& protocol) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow& row : res.rows) {
    nlohmann::json j = report_json(row.report);
    if (row.has_significance) {
      j["p_raw"] = row.sig.p_raw;
      j["p_corrected"] = row.sig.p_corrected;
      j["significant"] = row.sig.significant;
      j["t_statistic"] = row.sig.t;
    } else {
      j["p_raw"] = nullptr;
      j["p_corrected"] = nullptr;
      j["significant"] = nullptr;
    }
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"methods", rows},
                        {"protocol",
                         {{"subset_size", protocol.subset_size},
                          {"repeats", protocol.repeats},
                          {"seed", protocol.seed}}}};
}

}  // namespace ranklist
