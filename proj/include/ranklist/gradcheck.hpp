#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranklist/errors.hpp"
#include "ranklist/losses.hpp"
#include "ranklist/rng.hpp"

namespace ranklist {

struct GradCheckOptions {
  std::size_t trials = 100;
  std::size_t max_list = 8;   // list length drawn from [2, max_list]
  std::size_t max_skip = 2;   // K drawn from [0, max_skip]
  double sigma = 1.0;
  double eps = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  LossKind kind = LossKind::ranklist;
  double tolerance = 1e-5;
  double worst_err = 0.0;
  nlohmann::json worst_instance;

  bool passed() const { return worst_err <= tolerance; }
};

// The smoothed-rank and contrastive losses route their gradients through an
// extra nonlinearity (rank kernel, cosine), so they get a looser bar.
inline double grad_check_tolerance(LossKind k) {
  return k == LossKind::softrank || k == LossKind::rnc ? 1e-4 : 1e-5;
}

// Randomized finite-difference audit of one loss kind. Returns the worst
// relative error over `trials` random instances along with the instance that
// produced it, serialized for reproduction.
inline GradCheckReport run_grad_check(LossKind kind, const GradCheckOptions& opt) {
  if (opt.trials < 1) throw ConfigError("grad check needs at least one trial");
  if (opt.max_list < 2) throw ConfigError("grad check list bound must be >= 2");
  Rng rng(derive_seed(opt.seed, 0x6C05ULL));

  GradCheckReport rep;
  rep.kind = kind;
  rep.tolerance = grad_check_tolerance(kind);

  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    LossConfig cfg;
    cfg.kind = kind;
    cfg.sigma = opt.sigma;
    cfg.max_skip = rng.below(opt.max_skip + 1);

    double err = 0.0;
    nlohmann::json instance{{"loss", loss_kind_name(kind)},
                            {"sigma", cfg.sigma},
                            {"eps", opt.eps}};

    switch (kind) {
      case LossKind::pairwise: {
        const int label = static_cast<int>(rng.below(2));
        std::vector<double> point{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        instance["label"] = label;
        instance["scores"] = point;
        err = check_gradient(
            [&](const std::vector<double>& x) {
              return ranknet_loss(x[0], x[1], label, cfg.sigma);
            },
            point, opt.eps);
        break;
      }
      case LossKind::listwise_adjacent:
      case LossKind::extended:
      case LossKind::ranklist:
      case LossKind::listmle: {
        const std::size_t n = 2 + rng.below(opt.max_list - 1);
        std::vector<double> point(n);
        for (double& s : point) s = rng.uniform(-3.0, 3.0);
        instance["max_skip"] = cfg.max_skip;
        instance["scores"] = point;
        err = check_gradient(
            [&](const std::vector<double>& x) {
              switch (kind) {
                case LossKind::listwise_adjacent:
                  return listwise_adjacent_loss(x, cfg);
                case LossKind::extended: return extended_loss(x, cfg);
                case LossKind::ranklist: return ranklist_loss(x, cfg);
                default: return listmle_loss(x, cfg);
              }
            },
            point, opt.eps);
        break;
      }
      case LossKind::listnet: {
        const std::size_t n = 2 + rng.below(opt.max_list - 1);
        cfg.listnet_target_scale = rng.uniform(0.5, 2.0);
        std::vector<double> point(n), truth(n);
        for (double& s : point) s = rng.uniform(-3.0, 3.0);
        for (double& y : truth) y = rng.uniform(1.0, 7.0);
        instance["target_scale"] = cfg.listnet_target_scale;
        instance["scores"] = point;
        instance["truth"] = truth;
        err = check_gradient(
            [&](const std::vector<double>& x) {
              return listnet_loss(x, truth, cfg);
            },
            point, opt.eps);
        break;
      }
      case LossKind::softrank: {
        const std::size_t n = 2 + rng.below(opt.max_list - 1);
        cfg.softrank_smoothing = rng.uniform(0.5, 2.0);
        std::vector<double> point(n);
        for (double& s : point) s = rng.uniform(-3.0, 3.0);
        std::vector<std::size_t> ranks(n);
        for (std::size_t r = 0; r < n; ++r) ranks[r] = r + 1;
        rng.shuffle(ranks);
        instance["smoothing"] = cfg.softrank_smoothing;
        instance["scores"] = point;
        instance["true_ranks"] = ranks;
        err = check_gradient(
            [&](const std::vector<double>& x) {
              return softrank_loss(x, ranks, cfg);
            },
            point, opt.eps);
        break;
      }
      case LossKind::rnc: {
        const std::size_t items = 3 + rng.below(std::max<std::size_t>(opt.max_list, 3) - 2);
        const std::size_t dim = 8;
        cfg.rnc_temperature = rng.uniform(0.5, 2.0);
        const std::size_t anchor = rng.below(items);
        std::vector<double> labels(items), point(items * dim);
        for (double& y : labels) y = rng.uniform(1.0, 7.0);
        for (double& v : point) v = rng.normal();
        instance["temperature"] = cfg.rnc_temperature;
        instance["anchor"] = anchor;
        instance["labels"] = labels;
        instance["embeddings"] = point;
        instance["dim"] = dim;
        err = check_gradient(
            [&](const std::vector<double>& x) {
              std::vector<std::vector<double>> emb(items);
              for (std::size_t i = 0; i < items; ++i) {
                emb[i].assign(x.begin() + static_cast<std::ptrdiff_t>(i * dim),
                              x.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
              }
              return rnc_loss(emb, labels, anchor, cfg);
            },
            point, opt.eps);
        break;
      }
    }

    if (err > rep.worst_err) {
      rep.worst_err = err;
      rep.worst_instance = std::move(instance);
    }
  }
  return rep;
}

}  // namespace ranklist
