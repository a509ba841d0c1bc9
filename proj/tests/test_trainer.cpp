#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "ranklist/dataset.hpp"
#include "ranklist/trainer.hpp"

using ranklist::AblationVariant;
using ranklist::Dataset;
using ranklist::LossKind;
using ranklist::TrainConfig;
using ranklist::TrainResult;

namespace {

Dataset small_data(std::size_t n = 60, std::uint64_t seed = 3) {
  ranklist::SyntheticConfig cfg;
  cfg.n = n;
  cfg.d = 4;
  cfg.noise = 0.2;
  cfg.seed = seed;
  return ranklist::generate_synthetic(cfg).data;
}

TrainConfig quick_config(LossKind kind) {
  TrainConfig cfg;
  cfg.loss.kind = kind;
  cfg.list_size = 4;
  cfg.margin = 0.05;
  cfg.lists_per_epoch = 10;
  cfg.pairs_per_epoch = 40;
  cfg.pretrain_epochs = 2;
  cfg.finetune_epochs = 3;
  cfg.hidden_dims = {8};
  cfg.embedding_dim = 4;
  return cfg;
}

bool same_stats(const ranklist::TrainLogEntry& a, const ranklist::TrainLogEntry& b) {
  return a.phase == b.phase && a.epoch == b.epoch && a.mean_loss == b.mean_loss &&
         a.mean_grad_l1 == b.mean_grad_l1 && a.mean_grad_max == b.mean_grad_max;
}

}  // namespace

TEST_CASE("training runs every loss kind end to end") {
  const Dataset ds = small_data();
  for (LossKind kind :
       {LossKind::pairwise, LossKind::listwise_adjacent, LossKind::extended,
        LossKind::ranklist, LossKind::listnet, LossKind::listmle,
        LossKind::softrank, LossKind::rnc}) {
    const TrainResult r = ranklist::train(ds, quick_config(kind));
    INFO("loss " << ranklist::loss_kind_name(kind));
    REQUIRE(r.model.output_dim() == 1);
    REQUIRE(r.model.input_dim() == ds.dim());
    REQUIRE(std::isfinite(r.model.score(ds[0].features)));
    REQUIRE(r.log.size() == 5);
    for (const auto& e : r.log) {
      REQUIRE(std::isfinite(e.mean_loss));
      REQUIRE(e.mean_grad_l1 >= 0.0);
      REQUIRE(e.wall_time_ms >= 0.0);
    }
  }
}

TEST_CASE("curriculum phases are logged in order with restarting epochs") {
  const Dataset ds = small_data();
  const TrainResult r = ranklist::train(ds, quick_config(LossKind::ranklist));
  REQUIRE(r.log[0].phase == "pretrain");
  REQUIRE(r.log[0].epoch == 0);
  REQUIRE(r.log[1].phase == "pretrain");
  REQUIRE(r.log[1].epoch == 1);
  REQUIRE(r.log[2].phase == "finetune");
  REQUIRE(r.log[2].epoch == 0);
  REQUIRE(r.log[4].epoch == 2);
}

TEST_CASE("training is deterministic for identical inputs") {
  const Dataset ds = small_data();
  const TrainConfig cfg = quick_config(LossKind::ranklist);
  const TrainResult a = ranklist::train(ds, cfg);
  const TrainResult b = ranklist::train(ds, cfg);
  REQUIRE(ranklist::parameter_hash(a.model) == ranklist::parameter_hash(b.model));
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    REQUIRE(same_stats(a.log[i], b.log[i]));
  }

  TrainConfig other = cfg;
  other.seed = 1;
  const TrainResult c = ranklist::train(ds, other);
  REQUIRE(ranklist::parameter_hash(a.model) != ranklist::parameter_hash(c.model));
}

TEST_CASE("the pretraining phase ignores the finetune objective") {
  const Dataset ds = small_data();
  const TrainResult rl = ranklist::train(ds, quick_config(LossKind::ranklist));
  const TrainResult ex = ranklist::train(ds, quick_config(LossKind::extended));
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(same_stats(rl.log[i], ex.log[i]));
  }
  REQUIRE_FALSE(same_stats(rl.log[2], ex.log[2]));
}

TEST_CASE("bounded-loss score gradients respect the bound in vivo") {
  const Dataset ds = small_data(120, 9);
  TrainConfig cfg = quick_config(LossKind::ranklist);
  cfg.loss.sigma = 1.0;
  cfg.finetune_epochs = 6;
  const TrainResult r = ranklist::train(ds, cfg);
  for (const auto& e : r.log) {
    if (e.phase != "finetune") continue;
    REQUIRE(e.mean_grad_max < cfg.loss.sigma);
    REQUIRE(e.mean_grad_l1 < 2.0 * cfg.loss.sigma);
  }
}

TEST_CASE("pairwise finetuning keeps taking pair steps") {
  const Dataset ds = small_data();
  const TrainResult r = ranklist::train(ds, quick_config(LossKind::pairwise));
  REQUIRE(r.log.size() == 5);
  REQUIRE(r.log[2].phase == "finetune");
  // Pair gradients always have exactly two components summing to sigma.
  REQUIRE(r.log[2].mean_grad_l1 == Catch::Approx(2.0 * r.log[2].mean_grad_max));
}

TEST_CASE("gradient clipping changes the trajectory") {
  const Dataset ds = small_data();
  TrainConfig cfg = quick_config(LossKind::ranklist);
  TrainConfig clipped = cfg;
  clipped.clip = 1e-3;
  const TrainResult a = ranklist::train(ds, cfg);
  const TrainResult b = ranklist::train(ds, clipped);
  REQUIRE(ranklist::parameter_hash(a.model) != ranklist::parameter_hash(b.model));
}

TEST_CASE("training propagates infeasible sampling") {
  Dataset ds;
  for (int i = 0; i < 10; ++i) {
    ranklist::LabeledSample s;
    s.id = "t" + std::to_string(i);
    s.score = 4.0;  // all tied: no strict pair exists
    s.features = {0.5, 0.5};
    ds.samples.push_back(std::move(s));
  }
  REQUIRE_THROWS_AS(ranklist::train(ds, quick_config(LossKind::ranklist)),
                    ranklist::InfeasibleError);
}

TEST_CASE("train validates config and dataset") {
  const Dataset ds = small_data();
  TrainConfig cfg = quick_config(LossKind::ranklist);
  cfg.pretrain_epochs = 0;
  cfg.finetune_epochs = 0;
  REQUIRE_THROWS_AS(ranklist::train(ds, cfg), ranklist::ConfigError);

  cfg = quick_config(LossKind::ranklist);
  cfg.learning_rate = 0.0;
  REQUIRE_THROWS_AS(ranklist::train(ds, cfg), ranklist::ConfigError);

  cfg = quick_config(LossKind::ranklist);
  cfg.hidden_dims = {};
  REQUIRE_THROWS_AS(ranklist::train(ds, cfg), ranklist::ConfigError);

  Dataset tiny;
  tiny.samples.push_back({"a", {1.0}, 1.0});
  REQUIRE_THROWS_AS(ranklist::train(tiny, quick_config(LossKind::ranklist)),
                    ranklist::ConfigError);
}

TEST_CASE("rnc training appends a linear probe over the embedding") {
  const Dataset ds = small_data();
  TrainConfig cfg = quick_config(LossKind::rnc);
  const TrainResult r = ranklist::train(ds, cfg);
  const auto& dims = r.model.layer_dims();
  REQUIRE(dims == std::vector<std::size_t>{4, 8, 4, 1});
  REQUIRE(r.model.layers().back().act == ranklist::Activation::identity);
  // All epochs are contrastive: no pretrain phase in the log.
  REQUIRE(r.log.size() == 5);
  for (const auto& e : r.log) REQUIRE(e.phase == "finetune");
  const TrainResult again = ranklist::train(ds, cfg);
  REQUIRE(ranklist::parameter_hash(r.model) == ranklist::parameter_hash(again.model));
}

TEST_CASE("ablation variants map onto configs") {
  const TrainConfig base = quick_config(LossKind::listnet);  // kind is overridden

  const TrainConfig full = ranklist::ablation_config(base, AblationVariant::full);
  REQUIRE(full.loss.kind == LossKind::ranklist);
  REQUIRE(full.loss.max_skip == 2);
  REQUIRE(full.pretrain_epochs == base.pretrain_epochs);

  REQUIRE(ranklist::ablation_config(base, AblationVariant::wa).loss.kind ==
          LossKind::extended);
  REQUIRE(ranklist::ablation_config(base, AblationVariant::skip1).loss.max_skip == 1);
  REQUIRE(ranklist::ablation_config(base, AblationVariant::skip3).loss.max_skip == 3);
  REQUIRE(ranklist::ablation_config(base, AblationVariant::no_skip).loss.max_skip == 0);
  const TrainConfig wo = ranklist::ablation_config(base, AblationVariant::wo_pt);
  REQUIRE(wo.pretrain_epochs == 0);
  REQUIRE(wo.loss.kind == LossKind::ranklist);

  REQUIRE(std::string(ranklist::ablation_name(AblationVariant::wa)) == "WA");
  REQUIRE(ranklist::parse_ablation("WA") == AblationVariant::wa);
  REQUIRE(ranklist::parse_ablation("no_skip") == AblationVariant::no_skip);
  REQUIRE_THROWS_AS(ranklist::parse_ablation("wa"), ranklist::ConfigError);
}

TEST_CASE("run_ablation trains and evaluates one variant") {
  const Dataset ds = small_data();
  ranklist::EvalProtocol protocol;
  protocol.subset_size = 15;
  protocol.repeats = 8;
  const ranklist::AblationResult r = ranklist::run_ablation(
      ds, quick_config(LossKind::ranklist), AblationVariant::skip1, protocol);
  REQUIRE(r.report.method == "skip1");
  REQUIRE(r.subsets.kt.size() == 8);
  REQUIRE(r.report.subset_size == 15);
}

TEST_CASE("diagnostics bound the loss ratio by one") {
  const Dataset ds = small_data(100, 4);
  const TrainResult trained = ranklist::train(ds, quick_config(LossKind::ranklist));

  ranklist::DiagnoseConfig cfg;
  cfg.list_size = 6;
  cfg.margin = 0.05;
  cfg.n_lists = 50;
  const ranklist::DiagnosticsReport rep = ranklist::diagnose(trained.model, ds, cfg);
  REQUIRE(rep.loss_ratio > 0.0);
  REQUIRE(rep.loss_ratio <= 1.0);
  REQUIRE(rep.grad_ratio > 0.0);
  REQUIRE(rep.n_lists == 50);
  REQUIRE(rep.ranklist_loss_sum <= rep.extended_loss_sum);

  // Identical inputs give identical accumulations.
  const ranklist::DiagnosticsReport again = ranklist::diagnose(trained.model, ds, cfg);
  REQUIRE(again.loss_ratio == rep.loss_ratio);
  REQUIRE(again.ranklist_grad_l1_sum == rep.ranklist_grad_l1_sum);
}

TEST_CASE("diagnostics ratios collapse to one on single-term lists") {
  const Dataset ds = small_data(80, 6);
  const TrainResult trained = ranklist::train(ds, quick_config(LossKind::ranklist));

  ranklist::DiagnoseConfig cfg;
  cfg.list_size = 2;
  cfg.max_skip = 0;
  cfg.margin = 0.05;
  const ranklist::DiagnosticsReport rep = ranklist::diagnose(trained.model, ds, cfg);
  REQUIRE(rep.loss_ratio == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(rep.grad_ratio == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("diagnostics validate their inputs") {
  const Dataset ds = small_data();
  const ranklist::ScorerModel wide({4, 6, 3}, ranklist::Activation::relu, 0);
  REQUIRE_THROWS_AS(ranklist::diagnose(wide, ds, ranklist::DiagnoseConfig{}),
                    ranklist::ConfigError);
}

TEST_CASE("benchmark runs methods in the requested order with significance") {
  const Dataset ds = small_data(80, 8);
  ranklist::BenchConfig cfg;
  cfg.train = quick_config(LossKind::ranklist);
  cfg.protocol.subset_size = 15;
  cfg.protocol.repeats = 10;

  const std::vector<LossKind> methods{LossKind::pairwise, LossKind::listmle,
                                      LossKind::ranklist};
  const ranklist::BenchResult res = ranklist::benchmark(ds, methods, cfg);
  REQUIRE(res.rows.size() == 3);
  REQUIRE(res.rows[0].method == "pairwise");
  REQUIRE(res.rows[1].method == "listmle");
  REQUIRE(res.rows[2].method == "ranklist");

  REQUIRE(res.rows[0].has_significance);
  REQUIRE(res.rows[1].has_significance);
  REQUIRE_FALSE(res.rows[2].has_significance);
  REQUIRE(res.rows[0].sig.baseline == "pairwise");
  REQUIRE(res.rows[0].sig.p_corrected ==
          Catch::Approx(std::min(1.0, 2.0 * res.rows[0].sig.p_raw)).margin(1e-15));

  // The pairwise method spends its whole budget in the pairwise phase.
  for (const auto& e : res.rows[0].trained.log) REQUIRE(e.phase == "pretrain");
  REQUIRE(res.rows[0].trained.log.size() == 5);
}

TEST_CASE("benchmark rejects bad method lists") {
  const Dataset ds = small_data();
  ranklist::BenchConfig cfg;
  cfg.train = quick_config(LossKind::ranklist);
  REQUIRE_THROWS_AS(ranklist::benchmark(ds, {}, cfg), ranklist::ConfigError);
  REQUIRE_THROWS_AS(
      ranklist::benchmark(ds, {LossKind::listwise_adjacent}, cfg),
      ranklist::ConfigError);
  REQUIRE_THROWS_AS(
      ranklist::benchmark(ds, {LossKind::listmle, LossKind::listmle}, cfg),
      ranklist::ConfigError);
}

TEST_CASE("benchmark without a ranklist row skips significance") {
  const Dataset ds = small_data();
  ranklist::BenchConfig cfg;
  cfg.train = quick_config(LossKind::ranklist);
  cfg.protocol.subset_size = 10;
  cfg.protocol.repeats = 5;
  const ranklist::BenchResult res =
      ranklist::benchmark(ds, {LossKind::pairwise, LossKind::listmle}, cfg);
  REQUIRE_FALSE(res.rows[0].has_significance);
  REQUIRE_FALSE(res.rows[1].has_significance);
}

TEST_CASE("benchmark artifacts serialize deterministically") {
  const Dataset ds = small_data(70, 2);
  ranklist::BenchConfig cfg;
  cfg.train = quick_config(LossKind::ranklist);
  cfg.protocol.subset_size = 12;
  cfg.protocol.repeats = 6;
  const std::vector<LossKind> methods{LossKind::extended, LossKind::ranklist};

  const ranklist::BenchResult a = ranklist::benchmark(ds, methods, cfg);
  const ranklist::BenchResult b = ranklist::benchmark(ds, methods, cfg);
  REQUIRE(ranklist::benchmark_csv(a) == ranklist::benchmark_csv(b));
  REQUIRE(ranklist::benchmark_json(a, cfg.protocol).dump(2) ==
          ranklist::benchmark_json(b, cfg.protocol).dump(2));

  const std::string csv = ranklist::benchmark_csv(a);
  REQUIRE(csv.rfind("method,kt_mean,kt_std,acc_mean,acc_std,srcc_mean,srcc_std,"
                    "p_raw,p_corrected,significant\n",
                    0) == 0);
  // Two data rows after the header.
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  REQUIRE(lines == 3);

  const nlohmann::json j = ranklist::benchmark_json(a, cfg.protocol);
  REQUIRE(j.at("methods").size() == 2);
  REQUIRE(j.at("methods")[1].at("p_raw").is_null());
  REQUIRE_FALSE(j.at("methods")[0].at("p_raw").is_null());
  REQUIRE(j.at("protocol").at("subset_size") == 12);
}

TEST_CASE("log entries serialize every field") {
  ranklist::TrainLogEntry e;
  e.phase = "finetune";
  e.epoch = 7;
  e.mean_loss = 0.25;
  e.mean_grad_l1 = 0.5;
  e.mean_grad_max = 0.125;
  e.wall_time_ms = 12.5;
  const nlohmann::json j = ranklist::log_entry_json(e);
  REQUIRE(j.at("phase") == "finetune");
  REQUIRE(j.at("epoch") == 7);
  REQUIRE(j.at("mean_loss") == 0.25);
  REQUIRE(j.at("mean_grad_l1") == 0.5);
  REQUIRE(j.at("mean_grad_max") == 0.125);
  REQUIRE(j.at("wall_time_ms") == 12.5);
}

TEST_CASE("subset csv lists one row per draw") {
  ranklist::SubsetMetrics m;
  m.kt = {0.5, 0.25};
  m.acc = {75.0, 62.5};
  m.srcc = {0.625, 0.375};
  REQUIRE(ranklist::subsets_csv(m) ==
          "subset_idx,kt,acc,srcc\n0,0.5,75,0.625\n1,0.25,62.5,0.375\n");
}
