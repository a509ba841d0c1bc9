#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "ranklist/dataset.hpp"
#include "ranklist/metrics.hpp"
#include "ranklist/rng.hpp"
#include "ranklist/scorer.hpp"

using ranklist::Rng;

namespace {

// Quadratic-time reference: pairs tied on either side stay neutral.
void brute_counts(const std::vector<double>& pred, const std::vector<double>& truth,
                  long long& concordant, long long& discordant) {
  concordant = discordant = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = i + 1; j < pred.size(); ++j) {
      const double dt = truth[i] - truth[j];
      const double dp = pred[i] - pred[j];
      if (dt == 0.0 || dp == 0.0) continue;
      ((dt > 0.0) == (dp > 0.0) ? concordant : discordant) += 1;
    }
  }
}

double brute_kendall(const std::vector<double>& pred,
                     const std::vector<double>& truth) {
  long long c, d;
  brute_counts(pred, truth, c, d);
  const double total = pred.size() * (pred.size() - 1) / 2.0;
  return (c - d) / total;
}

double t_density(double x, double df) {
  const double c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                   0.5 * std::log(df * std::numbers::pi);
  return std::exp(c - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

// Composite Simpson over x = t + u/(1-u); an oracle independent of the
// incomplete-beta evaluation under test.
double upper_tail_quadrature(double t, double df) {
  const auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double om = 1.0 - u;
    const double x = t + u / om;
    return t_density(x, df) / (om * om);
  };
  const int n = 4000;
  const double h = 1.0 / n;
  double sum = g(0.0);
  for (int i = 1; i < n; ++i) sum += g(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("kendall tau on hand-checked lists") {
  REQUIRE(ranklist::kendall_tau({4.0, 3.0, 2.0, 1.0}, {8.0, 6.0, 4.0, 2.0}) == 1.0);
  REQUIRE(ranklist::kendall_tau({1.0, 2.0, 3.0}, {9.0, 5.0, 1.0}) == -1.0);
  // One discordant pair out of six.
  REQUIRE(ranklist::kendall_tau({1.0, 2.0, 4.0, 3.0}, {1.0, 2.0, 3.0, 4.0}) ==
          Catch::Approx(4.0 / 6.0).margin(1e-15));
}

TEST_CASE("kendall tau equals the brute-force count exactly") {
  Rng rng(50);
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> pred(n), truth(n);
    // Coarse grids make ties frequent; alternate with continuous draws.
    for (double& v : pred) {
      v = trial % 2 ? 0.5 * static_cast<double>(rng.below(8)) : rng.normal();
    }
    for (double& v : truth) {
      v = trial % 3 ? rng.uniform(1.0, 7.0) : static_cast<double>(rng.below(5));
    }
    REQUIRE(ranklist::kendall_tau(pred, truth) == brute_kendall(pred, truth));
  }
}

TEST_CASE("pairwise accuracy matches the brute-force count") {
  Rng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> pred(n), truth(n);
    for (double& v : pred) v = 0.25 * static_cast<double>(rng.below(10));
    for (double& v : truth) v = rng.uniform(1.0, 7.0);
    long long c, d;
    brute_counts(pred, truth, c, d);
    const double total = n * (n - 1) / 2.0;
    REQUIRE(ranklist::pairwise_accuracy(pred, truth) ==
            Catch::Approx(100.0 * c / total).margin(1e-12));
  }
}

TEST_CASE("tie-free accuracy is an affine map of kendall tau") {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> pred(n), truth(n);
    for (double& v : pred) v = rng.normal();
    for (double& v : truth) v = rng.normal();
    const double kt = ranklist::kendall_tau(pred, truth);
    const double acc = ranklist::pairwise_accuracy(pred, truth);
    REQUIRE(acc == Catch::Approx(50.0 * (kt + 1.0)).margin(1e-10));
  }
}

TEST_CASE("metric inputs are validated") {
  REQUIRE_THROWS_AS(ranklist::kendall_tau({1.0}, {1.0}), ranklist::ConfigError);
  REQUIRE_THROWS_AS(ranklist::kendall_tau({1.0, 2.0}, {1.0}),
                    ranklist::ConfigError);
  REQUIRE_THROWS_AS(ranklist::spearman_rho({1.0}, {1.0}), ranklist::ConfigError);
}

TEST_CASE("average ranks share ties") {
  REQUIRE(ranklist::average_ranks({10.0, 20.0, 20.0, 30.0}) ==
          std::vector<double>{1.0, 2.5, 2.5, 4.0});
  REQUIRE(ranklist::average_ranks({5.0, 5.0, 5.0}) ==
          std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("spearman on the swapped-tail example") {
  REQUIRE(ranklist::spearman_rho({1.0, 2.0, 4.0, 3.0}, {1.0, 2.0, 3.0, 4.0}) ==
          Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("spearman handles ties through average ranks") {
  // pred ranks (1.5, 1.5, 3) against truth ranks (1, 2, 3).
  REQUIRE(ranklist::spearman_rho({1.0, 1.0, 2.0}, {1.0, 2.0, 3.0}) ==
          Catch::Approx(1.5 / std::sqrt(3.0)).margin(1e-12));
}

TEST_CASE("spearman is monotone-invariant") {
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(20);
    std::vector<double> pred(n), truth(n);
    for (double& v : pred) v = rng.normal();
    for (double& v : truth) v = rng.normal();
    std::vector<double> warped(n);
    for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(pred[i]) * 3.0 + 1.0;
    REQUIRE(ranklist::spearman_rho(warped, truth) ==
            Catch::Approx(ranklist::spearman_rho(pred, truth)).margin(1e-12));
  }
}

TEST_CASE("spearman flags degenerate inputs") {
  bool degenerate = false;
  REQUIRE(ranklist::spearman_rho({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}, &degenerate) ==
          0.0);
  REQUIRE(degenerate);
  degenerate = false;
  REQUIRE(ranklist::spearman_rho({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, &degenerate) ==
          1.0);
  REQUIRE_FALSE(degenerate);
}

TEST_CASE("student t upper tail closed forms") {
  // Cauchy: P(T >= t) = 1/2 - atan(t)/pi.
  REQUIRE(ranklist::student_t_upper_tail(1.0, 1.0) ==
          Catch::Approx(0.25).margin(1e-12));
  REQUIRE(ranklist::student_t_upper_tail(std::sqrt(3.0), 1.0) ==
          Catch::Approx(1.0 / 6.0).margin(1e-12));
  // df = 2: P(T >= t) = (1 - t / sqrt(2 + t^2)) / 2.
  REQUIRE(ranklist::student_t_upper_tail(1.0, 2.0) ==
          Catch::Approx(0.5 * (1.0 - 1.0 / std::sqrt(3.0))).margin(1e-12));
  for (double df : {1.0, 3.0, 17.0}) {
    REQUIRE(ranklist::student_t_upper_tail(0.0, df) == 0.5);
  }
  REQUIRE(ranklist::student_t_upper_tail(
              std::numeric_limits<double>::infinity(), 5.0) == 0.0);
  REQUIRE_THROWS_AS(ranklist::student_t_upper_tail(1.0, 0.0),
                    ranklist::ConfigError);
}

TEST_CASE("student t tail is symmetric") {
  Rng rng(54);
  for (int trial = 0; trial < 100; ++trial) {
    const double t = rng.uniform(-6.0, 6.0);
    const double df = 1.0 + rng.below(60);
    REQUIRE(ranklist::student_t_upper_tail(t, df) +
                ranklist::student_t_upper_tail(-t, df) ==
            Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("student t tail matches numerical integration of the density") {
  for (double df : {5.0, 9.0, 49.0}) {
    for (double t : {-2.5, -0.7, 0.0, 0.31, 1.0, 2.2, 3.16, 5.0}) {
      REQUIRE(ranklist::student_t_upper_tail(t, df) ==
              Catch::Approx(upper_tail_quadrature(t, df)).margin(1e-9));
    }
  }
}

TEST_CASE("paired t-test on a constructed sample") {
  // Ten differences with mean 0.5 and sample sd 0.5: t = sqrt(10).
  const double c = std::sqrt(9.0 * 0.25 / 10.0);
  std::vector<double> a, b;
  for (int i = 0; i < 5; ++i) {
    a.push_back(0.5 + c);
    a.push_back(0.5 - c);
    b.push_back(0.0);
    b.push_back(0.0);
  }
  const ranklist::SignificanceResult r = ranklist::paired_t_test(a, b, 1);
  REQUIRE(r.t == Catch::Approx(std::sqrt(10.0)).margin(1e-12));
  REQUIRE(r.p_raw == Catch::Approx(upper_tail_quadrature(std::sqrt(10.0), 9.0))
                         .margin(1e-9));
  REQUIRE(r.p_raw == Catch::Approx(0.005768).margin(2e-5));
  REQUIRE(r.p_corrected == r.p_raw);
  REQUIRE(r.significant);
  REQUIRE_FALSE(r.degenerate);
}

TEST_CASE("bonferroni correction multiplies and saturates") {
  std::vector<double> a{0.9, 0.8, 0.85, 0.95, 0.7, 0.75};
  std::vector<double> b{0.5, 0.6, 0.55, 0.65, 0.4, 0.45};
  const auto r1 = ranklist::paired_t_test(a, b, 1);
  const auto r6 = ranklist::paired_t_test(a, b, 6);
  REQUIRE(r6.p_raw == r1.p_raw);
  REQUIRE(r6.p_corrected == Catch::Approx(std::min(1.0, 6.0 * r1.p_raw)).margin(1e-15));

  const auto weak = ranklist::paired_t_test(b, a, 1000);  // p_raw near 1
  REQUIRE(weak.p_corrected == 1.0);
  REQUIRE_FALSE(weak.significant);
}

TEST_CASE("paired t-test handles zero-variance differences") {
  const std::vector<double> base{0.5, 0.6, 0.7, 0.8};
  std::vector<double> up = base;
  for (double& v : up) v += 0.1;

  const auto pos = ranklist::paired_t_test(up, base, 2);
  REQUIRE(pos.degenerate);
  REQUIRE(std::isinf(pos.t));
  REQUIRE(pos.p_raw == 0.0);
  REQUIRE(pos.significant);

  const auto neg = ranklist::paired_t_test(base, up, 2);
  REQUIRE(neg.degenerate);
  REQUIRE(neg.p_raw == 1.0);
  REQUIRE_FALSE(neg.significant);

  const auto same = ranklist::paired_t_test(base, base, 2);
  REQUIRE(same.degenerate);
  REQUIRE(same.t == 0.0);
  REQUIRE(same.p_raw == 0.5);
  REQUIRE_FALSE(same.significant);
}

TEST_CASE("subset draws are deterministic, distinct and in range") {
  const auto a = ranklist::draw_subset_indices(100, 20, 50, 7);
  const auto b = ranklist::draw_subset_indices(100, 20, 50, 7);
  REQUIRE(a == b);
  const auto c = ranklist::draw_subset_indices(100, 20, 50, 8);
  REQUIRE(a != c);
  for (const auto& subset : a) {
    REQUIRE(subset.size() == 20);
    std::set<std::size_t> uniq(subset.begin(), subset.end());
    REQUIRE(uniq.size() == 20);
    for (std::size_t v : subset) REQUIRE(v < 100);
  }

  REQUIRE_THROWS_AS(ranklist::draw_subset_indices(10, 20, 5, 0), ranklist::Error);
  REQUIRE_THROWS_AS(ranklist::draw_subset_indices(10, 1, 5, 0),
                    ranklist::ConfigError);
  REQUIRE_THROWS_AS(ranklist::draw_subset_indices(10, 5, 0, 0),
                    ranklist::ConfigError);
}

TEST_CASE("eval_subsets summarizes per-subset metrics") {
  ranklist::SyntheticConfig cfg;
  cfg.n = 120;
  cfg.d = 4;
  cfg.noise = 0.5;
  cfg.seed = 31;
  const ranklist::Dataset ds = ranklist::generate_synthetic(cfg).data;

  std::vector<double> pred(ds.size());
  Rng rng(9);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    pred[i] = ds[i].score + rng.normal(0.0, 0.8);
  }

  const auto [report, subsets] = ranklist::eval_subsets(pred, ds, 30, 40, 5, "demo");
  REQUIRE(report.method == "demo");
  REQUIRE(report.subset_size == 30);
  REQUIRE(report.repeats == 40);
  REQUIRE(subsets.kt.size() == 40);

  double mean = 0.0;
  for (double v : subsets.kt) mean += v;
  mean /= 40.0;
  double ssq = 0.0;
  for (double v : subsets.kt) ssq += (v - mean) * (v - mean);
  REQUIRE(report.kt_mean == Catch::Approx(mean).margin(1e-12));
  REQUIRE(report.kt_std == Catch::Approx(std::sqrt(ssq / 39.0)).margin(1e-12));

  // Replaying the draws reproduces each subset metric.
  const auto draws = ranklist::draw_subset_indices(ds.size(), 30, 40, 5);
  std::vector<double> sp(30), st(30);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < 30; ++k) {
      sp[k] = pred[draws[r][k]];
      st[k] = ds[draws[r][k]].score;
    }
    REQUIRE(subsets.kt[r] == ranklist::kendall_tau(sp, st));
  }
}

TEST_CASE("single-repeat evaluation reports zero spread") {
  ranklist::SyntheticConfig cfg;
  cfg.n = 50;
  cfg.d = 3;
  cfg.seed = 1;
  const ranklist::Dataset ds = ranklist::generate_synthetic(cfg).data;
  std::vector<double> pred(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pred[i] = ds[i].score;
  const auto [report, subsets] = ranklist::eval_subsets(pred, ds, 10, 1, 0);
  REQUIRE(report.kt_std == 0.0);
  REQUIRE(report.kt_mean == 1.0);
}

TEST_CASE("model-based evaluation equals precomputed predictions") {
  ranklist::SyntheticConfig cfg;
  cfg.n = 80;
  cfg.d = 5;
  cfg.seed = 12;
  const ranklist::Dataset ds = ranklist::generate_synthetic(cfg).data;
  const ranklist::ScorerModel model({5, 6, 1}, ranklist::Activation::tanh, 3);

  std::vector<double> pred(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pred[i] = model.score(ds[i].features);

  const auto [ra, sa] = ranklist::eval_subsets(model, ds, 25, 20, 4);
  const auto [rb, sb] = ranklist::eval_subsets(pred, ds, 25, 20, 4);
  REQUIRE(sa.kt == sb.kt);
  REQUIRE(sa.acc == sb.acc);
  REQUIRE(sa.srcc == sb.srcc);
  REQUIRE(ra.kt_mean == rb.kt_mean);
}
