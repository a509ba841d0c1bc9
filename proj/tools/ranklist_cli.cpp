// Command-line front end: data generation, training, evaluation, the
// benchmark harness, loss diagnostics and gradient audits.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ranklist/dataset.hpp"
#include "ranklist/gradcheck.hpp"
#include "ranklist/losses.hpp"
#include "ranklist/metrics.hpp"
#include "ranklist/sampling.hpp"
#include "ranklist/scorer.hpp"
#include "ranklist/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<std::size_t> parse_hidden_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      const long v = std::stol(part);
      if (v <= 0) throw std::invalid_argument(part);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("invalid hidden layer list '" + text +
                       "' (expected e.g. 64,32)");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (dims.empty()) throw UsageError("hidden layer list is empty");
  return dims;
}

std::vector<ranklist::LossKind> parse_methods(const std::string& text) {
  constexpr const char* kValid =
      "pairwise, listnet, listmle, softrank, rnc, extended, ranklist, all";
  std::vector<ranklist::LossKind> methods;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (part == "all") {
      for (ranklist::LossKind k : ranklist::benchmark_method_order()) {
        methods.push_back(k);
      }
    } else {
      ranklist::LossKind kind;
      try {
        kind = ranklist::parse_loss_kind(part);
      } catch (const ranklist::Error&) {
        throw UsageError("unknown method '" + part + "' (valid: " + kValid + ")");
      }
      if (kind == ranklist::LossKind::listwise_adjacent) {
        throw UsageError("unknown method '" + part + "' (valid: " + kValid + ")");
      }
      methods.push_back(kind);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (methods.empty()) throw UsageError("no methods given");
  return methods;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ranklist::Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw ranklist::Error("write to '" + path.string() + "' failed");
}

void write_log(const fs::path& path, const std::vector<ranklist::TrainLogEntry>& log) {
  std::string text;
  for (const ranklist::TrainLogEntry& e : log) {
    text += ranklist::log_entry_json(e).dump();
    text += '\n';
  }
  write_text(path, text);
}

// ---- gen-data ----

struct GenOpts {
  std::size_t n = 0;
  std::size_t dim = 0;
  double noise = 0.0;
  bool nonlinear = false;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_data(const GenOpts& o) {
  ranklist::SyntheticConfig cfg;
  cfg.n = o.n;
  cfg.d = o.dim;
  cfg.noise = o.noise;
  cfg.nonlinearity = o.nonlinear;
  cfg.seed = o.seed;

  const ranklist::SyntheticData data = ranklist::generate_synthetic(cfg);
  ranklist::save_csv(data.data, o.out);
  const json manifest = ranklist::synthetic_manifest(cfg, data.weights);
  fs::path manifest_path(o.out);
  manifest_path.replace_extension(".manifest.json");
  write_text(manifest_path, manifest.dump(2) + "\n");
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

// ---- train ----

struct TrainOpts {
  std::string data;
  std::string loss = "ranklist";
  double sigma = 1.0;
  std::size_t skip = 2;
  std::size_t list_size = 8;
  double margin = 0.3;
  std::size_t pretrain_epochs = 20;
  std::size_t epochs = 80;
  std::size_t lists_per_epoch = 100;
  std::size_t pairs_per_epoch = 700;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::string activation = "relu";
  std::string hidden = "64,32";
  std::size_t embedding_dim = 16;
  double clip = 0.0;
  double rnc_temperature = 1.0;
  double softrank_smoothing = 1.0;
  double listnet_target_scale = 1.0;
  std::uint64_t seed = 0;
  std::string out_model = "model.json";
  std::string log = "train_log.jsonl";
};

ranklist::TrainConfig build_train_config(const TrainOpts& o) {
  ranklist::TrainConfig cfg;
  cfg.loss.kind = ranklist::parse_loss_kind(o.loss);
  cfg.loss.sigma = o.sigma;
  cfg.loss.max_skip = o.skip;
  cfg.loss.rnc_temperature = o.rnc_temperature;
  cfg.loss.softrank_smoothing = o.softrank_smoothing;
  cfg.loss.listnet_target_scale = o.listnet_target_scale;
  cfg.list_size = o.list_size;
  cfg.margin = o.margin;
  cfg.lists_per_epoch = o.lists_per_epoch;
  cfg.pairs_per_epoch = o.pairs_per_epoch;
  cfg.pretrain_epochs = o.pretrain_epochs;
  cfg.finetune_epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.optimizer = ranklist::parse_optimizer(o.optimizer);
  cfg.activation = ranklist::parse_activation(o.activation);
  cfg.hidden_dims = parse_hidden_dims(o.hidden);
  cfg.embedding_dim = o.embedding_dim;
  cfg.clip = o.clip;
  cfg.seed = o.seed;
  if (cfg.pretrain_epochs + cfg.finetune_epochs == 0) {
    throw UsageError("nothing to do: both --pretrain-epochs and --epochs are 0");
  }
  cfg.validate();
  return cfg;
}

int run_train(const ranklist::TrainConfig& cfg, const TrainOpts& o) {
  const ranklist::Dataset ds = ranklist::load_csv(o.data);
  const ranklist::TrainResult result = ranklist::train(ds, cfg);
  ranklist::save_model(result.model, o.out_model);
  write_log(o.log, result.log);
  if (!result.log.empty()) {
    std::cout << ranklist::log_entry_json(result.log.back()).dump() << "\n";
  }
  return 0;
}

// ---- eval ----

struct EvalOpts {
  std::string model;
  std::string data;
  std::size_t subset_size = 200;
  std::size_t repeats = 100;
  std::uint64_t seed = 0;
  std::string out = "eval_report.json";
  std::string subsets_out;
};

int run_eval(const EvalOpts& o) {
  const ranklist::ScorerModel model = ranklist::load_model(o.model);
  const ranklist::Dataset ds = ranklist::load_csv(o.data);
  const auto [report, subsets] = ranklist::eval_subsets(
      model, ds, o.subset_size, o.repeats, o.seed, "eval");
  write_text(o.out, ranklist::report_json(report).dump(2) + "\n");
  if (!o.subsets_out.empty()) {
    write_text(o.subsets_out, ranklist::subsets_csv(subsets));
  }
  std::cout << "kt_mean=" << ranklist::format_real(report.kt_mean)
            << " acc_mean=" << ranklist::format_real(report.acc_mean)
            << " srcc_mean=" << ranklist::format_real(report.srcc_mean) << "\n";
  return 0;
}

// ---- bench ----

struct BenchOpts {
  std::string data;
  std::string methods = "all";
  std::uint64_t seed = 0;
  std::string out_dir = "bench_out";
  TrainOpts schedule;  // shared training knobs; loss/data ignored
  std::size_t subset_size = 200;
  std::size_t repeats = 100;
};

int run_bench(const BenchOpts& o, const std::vector<ranklist::LossKind>& methods,
              const ranklist::TrainConfig& shared) {
  const ranklist::Dataset ds = ranklist::load_csv(o.data);
  ranklist::BenchConfig cfg;
  cfg.train = shared;
  cfg.train.seed = o.seed;
  cfg.protocol.subset_size = o.subset_size;
  cfg.protocol.repeats = o.repeats;
  cfg.protocol.seed = o.seed;

  const ranklist::BenchResult result = ranklist::benchmark(ds, methods, cfg);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  const std::string table = ranklist::benchmark_csv(result);
  write_text(dir / "benchmark.csv", table);
  write_text(dir / "benchmark.json",
             ranklist::benchmark_json(result, cfg.protocol).dump(2) + "\n");
  for (const ranklist::BenchRow& row : result.rows) {
    ranklist::save_model(row.trained.model, dir / ("model_" + row.method + ".json"));
    write_log(dir / ("log_" + row.method + ".jsonl"), row.trained.log);
    write_text(dir / ("subsets_" + row.method + ".csv"),
               ranklist::subsets_csv(row.subsets));
  }
  std::cout << table;
  return 0;
}

// ---- diagnose ----

struct DiagnoseOpts {
  std::string model;
  std::string data;
  double sigma = 1.0;
  std::size_t skip = 2;
  std::size_t list_size = 8;
  double margin = 0.3;
  std::size_t lists = 100;
  std::uint64_t seed = 0;
};

int run_diagnose(const DiagnoseOpts& o) {
  const ranklist::ScorerModel model = ranklist::load_model(o.model);
  const ranklist::Dataset ds = ranklist::load_csv(o.data);
  ranklist::DiagnoseConfig cfg;
  cfg.sigma = o.sigma;
  cfg.max_skip = o.skip;
  cfg.list_size = o.list_size;
  cfg.margin = o.margin;
  cfg.n_lists = o.lists;
  cfg.seed = o.seed;
  const ranklist::DiagnosticsReport rep = ranklist::diagnose(model, ds, cfg);
  std::cout << ranklist::diagnostics_json(rep).dump(2) << "\n";
  if (!(rep.loss_ratio <= 1.0)) {
    throw ranklist::Error(
        "diagnostics violated the loss-ratio bound: accumulated ranklist loss " +
        ranklist::format_real(rep.ranklist_loss_sum) + " exceeds accumulated " +
        "extended loss " + ranklist::format_real(rep.extended_loss_sum));
  }
  return 0;
}

// ---- grad-check ----

struct GradCheckOpts {
  std::string loss = "all";
  std::size_t trials = 100;
  std::size_t n = 8;
  std::size_t skip = 2;
  double sigma = 1.0;
  double eps = 1e-5;
  std::uint64_t seed = 0;
};

int run_grad_check_cmd(const GradCheckOpts& o,
                       const std::vector<ranklist::LossKind>& kinds) {
  ranklist::GradCheckOptions opt;
  opt.trials = o.trials;
  opt.max_list = o.n;
  opt.max_skip = o.skip;
  opt.sigma = o.sigma;
  opt.eps = o.eps;
  opt.seed = o.seed;

  bool all_ok = true;
  json failures = json::array();
  for (ranklist::LossKind kind : kinds) {
    const ranklist::GradCheckReport rep = ranklist::run_grad_check(kind, opt);
    std::cout << "loss=" << ranklist::loss_kind_name(kind)
              << " worst_rel_err=" << ranklist::format_real(rep.worst_err)
              << " tolerance=" << ranklist::format_real(rep.tolerance)
              << " status=" << (rep.passed() ? "ok" : "FAIL") << "\n";
    if (!rep.passed()) {
      all_ok = false;
      json f = rep.worst_instance;
      f["worst_rel_err"] = rep.worst_err;
      f["tolerance"] = rep.tolerance;
      failures.push_back(std::move(f));
    }
  }
  if (!all_ok) {
    throw ranklist::Error("gradient check failed; failing instances: " +
                          failures.dump());
  }
  return 0;
}

void add_schedule_flags(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--sigma", o.sigma, "Pairwise steepness");
  cmd->add_option("--skip", o.skip, "Max skip K (offsets 1..K+1)");
  cmd->add_option("--list-size", o.list_size, "Sampled list length N");
  cmd->add_option("--margin", o.margin, "Score margin W")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--pretrain-epochs", o.pretrain_epochs, "Pairwise epochs");
  cmd->add_option("--epochs", o.epochs, "Finetune epochs");
  cmd->add_option("--lists-per-epoch", o.lists_per_epoch, "Lists per epoch");
  cmd->add_option("--pairs-per-epoch", o.pairs_per_epoch, "Pairs per epoch");
  cmd->add_option("--lr", o.lr, "Learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--optimizer", o.optimizer, "sgd or adam");
  cmd->add_option("--activation", o.activation, "relu or tanh");
  cmd->add_option("--hidden", o.hidden, "Hidden dims, e.g. 64,32");
  cmd->add_option("--embedding-dim", o.embedding_dim, "rnc embedding width");
  cmd->add_option("--clip", o.clip, "Max gradient L2 norm (0 disables)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--rnc-temperature", o.rnc_temperature, "rnc temperature");
  cmd->add_option("--softrank-smoothing", o.softrank_smoothing,
                  "softrank kernel width");
  cmd->add_option("--listnet-scale", o.listnet_target_scale,
                  "listnet target scale");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Listwise preference learning toolkit"};
  app.set_version_flag("--version", "ranklist 1.0.0");
  app.require_subcommand(1);

  GenOpts gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("--n", gen.n, "Number of samples")
      ->required()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--dim", gen.dim, "Feature dimension")
      ->required()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--noise", gen.noise, "Noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_flag("--nonlinear", gen.nonlinear, "Add a tanh term to the latent");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a scorer");
  train_cmd->add_option("--data", train_opts.data, "Training CSV")->required();
  train_cmd->add_option("--loss", train_opts.loss, "Finetune loss kind");
  train_cmd->add_option("--seed", train_opts.seed, "Training seed");
  train_cmd->add_option("--out-model", train_opts.out_model, "Model output path");
  train_cmd->add_option("--log", train_opts.log, "JSON-lines log path");
  add_schedule_flags(train_cmd, train_opts);

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a model on subsets");
  eval_cmd->add_option("--model", eval_opts.model, "Model JSON")->required();
  eval_cmd->add_option("--data", eval_opts.data, "Evaluation CSV")->required();
  eval_cmd->add_option("--subset-size", eval_opts.subset_size, "Subset size")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--repeats", eval_opts.repeats, "Number of subsets")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_opts.seed, "Subset draw seed");
  eval_cmd->add_option("--out", eval_opts.out, "Report JSON path");
  eval_cmd->add_option("--subsets-out", eval_opts.subsets_out,
                       "Optional per-subset CSV path");

  BenchOpts bench_opts;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Benchmark methods");
  bench_cmd->add_option("--data", bench_opts.data, "Dataset CSV")->required();
  bench_cmd->add_option("--methods", bench_opts.methods,
                        "Comma list of methods, or 'all'");
  bench_cmd->add_option("--seed", bench_opts.seed, "Shared train/eval seed");
  bench_cmd->add_option("--out-dir", bench_opts.out_dir, "Output directory");
  bench_cmd->add_option("--subset-size", bench_opts.subset_size, "Subset size")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench_opts.repeats, "Number of subsets")
      ->check(CLI::PositiveNumber);
  add_schedule_flags(bench_cmd, bench_opts.schedule);

  DiagnoseOpts diag_opts;
  CLI::App* diag_cmd =
      app.add_subcommand("diagnose", "Compare bounded and additive objectives");
  diag_cmd->add_option("--model", diag_opts.model, "Model JSON")->required();
  diag_cmd->add_option("--data", diag_opts.data, "Dataset CSV")->required();
  diag_cmd->add_option("--sigma", diag_opts.sigma, "Pairwise steepness");
  diag_cmd->add_option("--skip", diag_opts.skip, "Max skip K");
  diag_cmd->add_option("--list-size", diag_opts.list_size, "List length N");
  diag_cmd->add_option("--margin", diag_opts.margin, "Score margin W")
      ->check(CLI::NonNegativeNumber);
  diag_cmd->add_option("--lists", diag_opts.lists, "Lists to accumulate")
      ->check(CLI::PositiveNumber);
  diag_cmd->add_option("--seed", diag_opts.seed, "Sampling seed");

  GradCheckOpts gc_opts;
  CLI::App* gc_cmd =
      app.add_subcommand("grad-check", "Finite-difference gradient audit");
  gc_cmd->add_option("--loss", gc_opts.loss, "Loss kind or 'all'");
  gc_cmd->add_option("--trials", gc_opts.trials, "Random instances per loss")
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--n", gc_opts.n, "Max list length");
  gc_cmd->add_option("--skip", gc_opts.skip, "Max skip K");
  gc_cmd->add_option("--sigma", gc_opts.sigma, "Pairwise steepness");
  gc_cmd->add_option("--eps", gc_opts.eps, "Finite-difference step")
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--seed", gc_opts.seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  // Stage 1: turn flag values into validated configs (usage errors, exit 1).
  ranklist::TrainConfig train_cfg, bench_train_cfg;
  std::vector<ranklist::LossKind> bench_methods, gc_kinds;
  try {
    if (train_cmd->parsed()) train_cfg = build_train_config(train_opts);
    if (bench_cmd->parsed()) {
      bench_methods = parse_methods(bench_opts.methods);
      bench_opts.schedule.loss = "ranklist";
      bench_train_cfg = build_train_config(bench_opts.schedule);
    }
    if (gc_cmd->parsed()) {
      if (gc_opts.loss == "all") {
        gc_kinds = {ranklist::LossKind::pairwise,
                    ranklist::LossKind::listwise_adjacent,
                    ranklist::LossKind::extended,
                    ranklist::LossKind::ranklist,
                    ranklist::LossKind::listnet,
                    ranklist::LossKind::listmle,
                    ranklist::LossKind::softrank,
                    ranklist::LossKind::rnc};
      } else {
        gc_kinds = {ranklist::parse_loss_kind(gc_opts.loss)};
      }
      if (gc_opts.n < 2) throw UsageError("--n must be at least 2");
      if (!(gc_opts.sigma > 0.0)) throw UsageError("--sigma must be positive");
    }
    if (diag_cmd->parsed()) {
      if (!(diag_opts.sigma > 0.0)) throw UsageError("--sigma must be positive");
      if (diag_opts.list_size < 2) throw UsageError("--list-size must be >= 2");
    }
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  // Stage 2: execute (runtime errors, exit 2).
  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (train_cmd->parsed()) return run_train(train_cfg, train_opts);
    if (eval_cmd->parsed()) return run_eval(eval_opts);
    if (bench_cmd->parsed()) return run_bench(bench_opts, bench_methods, bench_train_cfg);
    if (diag_cmd->parsed()) return run_diagnose(diag_opts);
    if (gc_cmd->parsed()) return run_grad_check_cmd(gc_opts, gc_kinds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
