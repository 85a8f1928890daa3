#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "aoisim/montecarlo.hpp"
#include "test_support.hpp"

using namespace aoisim;
using namespace aoisim_test;

namespace {

Scenario table1_scenario(double sigma2, LinkModel link, std::int64_t horizon,
                         std::int64_t episodes, std::int64_t warmup,
                         std::uint64_t seed) {
  Scenario s;
  s.model = table1_model(sigma2);
  s.link = link;
  s.x0 = s.model.x_aim;
  s.horizon = horizon;
  s.episodes = episodes;
  s.warmup = warmup;
  s.base_seed = seed;
  s.convention = VarianceConvention::accumulation;
  s.name = "table1-test";
  return s;
}

}  // namespace

TEST_CASE("moment accumulator matches two-pass variance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::vector<double> xs(5000);
  MomentAccumulator acc;
  for (double& x : xs) {
    x = normal(rng);
    acc.add(x);
  }
  const double mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  double m2 = 0.0;
  for (double x : xs) {
    m2 += (x - mean) * (x - mean);
  }
  const double expected = m2 / double(xs.size() - 1);
  CHECK(acc.sample_variance() == doctest::Approx(expected).epsilon(1e-10));

  MomentAccumulator left;
  MomentAccumulator right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    (i < xs.size() / 3 ? left : right).add(xs[i]);
  }
  left.merge(right);
  CHECK(left.sample_variance() ==
        doctest::Approx(acc.sample_variance()).epsilon(1e-10));
}

TEST_CASE("run_episode is deterministic in (scenario, index)") {
  const Scenario s = table1_scenario(
      5.0, LinkModel::make_fixed_age(2), /*horizon=*/600, /*episodes=*/3,
      /*warmup=*/0, /*seed=*/42);
  const RunStats a = run_episode(s, 1);
  const RunStats b = run_episode(s, 1);
  CHECK(a == b);
  const RunStats other = run_episode(s, 2);
  CHECK(a.seed != other.seed);
}

TEST_CASE("zero noise never leaves the band") {
  const Scenario framed = table1_scenario(
      0.0, LinkModel::make_fixed_age(3), 400, 2, 0, 7);
  CHECK(run_episode(framed, 0).outage_steps == 0);

  const Scenario continuous = table1_scenario(
      0.0, LinkModel::make_bernoulli(0.5), 400, 2, 10, 7);
  CHECK(run_episode(continuous, 0).outage_steps == 0);
}

TEST_CASE("fixed-age frames sample exactly the conditioned age") {
  const Scenario s = table1_scenario(
      1.0, LinkModel::make_fixed_age(3), /*horizon=*/403, /*episodes=*/1,
      /*warmup=*/0, /*seed=*/11);
  const RunStats stats = run_episode(s, 0);
  CHECK(stats.counted_steps == 100);  // floor(403 / 4)
  REQUIRE(stats.age_histogram.size() == 1);
  CHECK(stats.age_histogram.count(3) == 1);
  CHECK(stats.age_histogram.at(3) == 100);
}

TEST_CASE("aggregate basics") {
  const Scenario s = table1_scenario(
      2.0, LinkModel::make_fixed_age(1), 800, 4, 0, 99);
  std::vector<RunStats> parts;
  for (int e = 0; e < 4; ++e) {
    parts.push_back(run_episode(s, e));
  }

  const RunStats single = aggregate({parts[0]});
  CHECK(single == parts[0]);

  const RunStats forward = aggregate(parts);
  std::vector<RunStats> shuffled = {parts[2], parts[0], parts[3], parts[1]};
  const RunStats permuted = aggregate(shuffled);
  CHECK(forward == permuted);

  std::int64_t steps = 0;
  std::int64_t outages = 0;
  for (const auto& p : parts) {
    steps += p.counted_steps;
    outages += p.outage_steps;
  }
  CHECK(forward.counted_steps == steps);
  CHECK(forward.outage_steps == outages);
}

TEST_CASE("run_scenario is schedule independent") {
  const Scenario s = table1_scenario(
      4.0, LinkModel::make_fixed_age(2), 900, 6, 0, 1234);
  const RunStats one = run_scenario(s, 1);
  const RunStats four = run_scenario(s, 4);
  CHECK(one == four);
}

TEST_CASE("wilson interval oracle values") {
  const RateEstimate zero = wilson_interval(0, 100, 0.95);
  CHECK(zero.p == 0.0);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(0.03699349820698568).epsilon(1e-9));

  const RateEstimate all = wilson_interval(100, 100, 0.95);
  CHECK(all.p == 1.0);
  CHECK(all.hi == 1.0);

  const RateEstimate half = wilson_interval(50, 100, 0.95);
  CHECK(half.p == 0.5);
  CHECK(half.half_width() ==
        doctest::Approx(0.09616846963400437).epsilon(1e-9));

  CHECK_THROWS_AS(wilson_interval(1, 0, 0.95), std::invalid_argument);
}

TEST_CASE("normal quantile against landmark values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
}

TEST_CASE("estimate_rate uses the aggregated counters") {
  const Scenario s = table1_scenario(
      8.0, LinkModel::make_fixed_age(1), 4000, 2, 0, 5);
  const RunStats stats = run_scenario(s, 2);
  const RateEstimate rate = estimate_rate(stats, 0.95);
  CHECK(rate.p ==
        doctest::Approx(double(stats.outage_steps) / double(stats.counted_steps))
            .epsilon(1e-15));
  CHECK(rate.lo <= rate.p);
  CHECK(rate.p <= rate.hi);

  RunStats empty;
  CHECK_THROWS_AS(estimate_rate(empty, 0.95), std::invalid_argument);
}

TEST_CASE("framed variance reproduces the analytical value") {
  // conditioned on age 2, var(g.x - G_aim) = 5 sigma2^2 under accumulation
  const Scenario s = table1_scenario(
      1.0, LinkModel::make_fixed_age(2), /*horizon=*/30000, /*episodes=*/3,
      /*warmup=*/0, /*seed=*/2024);
  const RunStats stats = run_scenario(s, 2);
  const double model_var =
      error_variance(s.model, 2, VarianceConvention::accumulation);
  CHECK(std::abs(stats.empirical_variance() - model_var) <= 0.05 * model_var);
}

TEST_CASE("noise rescaling scales the deviation exactly") {
  // same seed, sigma -> 2 sigma: every sample scales linearly, so the
  // empirical variance scales by exactly 4
  const Scenario base = table1_scenario(
      3.0, LinkModel::make_fixed_age(2), 3000, 2, 0, 77);
  Scenario doubled = base;
  doubled.model.sigma *= 4.0;  // c^2 with c = 2

  const double v1 = run_scenario(base, 1).empirical_variance();
  const double v2 = run_scenario(doubled, 1).empirical_variance();
  CHECK(v2 == doctest::Approx(4.0 * v1).epsilon(1e-9));
}

TEST_CASE("fixed-age cell agrees with the outage model") {
  const Scenario s = table1_scenario(
      5.0, LinkModel::make_fixed_age(1), /*horizon=*/100000, /*episodes=*/2,
      /*warmup=*/0, /*seed=*/31415);
  const RunStats stats = run_scenario(s, 2);
  const double p_model = outage_probability(
      12.5, error_variance(s.model, 1, VarianceConvention::accumulation));
  const RateEstimate rate = estimate_rate(stats, 0.95);
  const double se = std::sqrt(p_model * (1.0 - p_model) /
                              double(stats.counted_steps));
  CHECK(std::abs(rate.p - p_model) <= 3.0 * se);
}

TEST_CASE("bernoulli age histogram follows the geometric law") {
  const Scenario s = table1_scenario(
      1.0, LinkModel::make_bernoulli(0.5), /*horizon=*/100000, /*episodes=*/1,
      /*warmup=*/200, /*seed=*/999);
  const RunStats stats = run_scenario(s, 1);

  int bins = 0;
  const double stat =
      geometric_chi_square(stats.age_histogram, stats.counted_steps, 0.5, &bins);
  CHECK(stat <= chi_square_99(bins - 1));
}

TEST_CASE("compare marks matched and mismatched conventions") {
  Scenario s = table1_scenario(
      1.0, LinkModel::make_fixed_age(1), /*horizon=*/40000, /*episodes=*/2,
      /*warmup=*/0, /*seed=*/555);

  SUBCASE("zero noise row is trivially within") {
    const auto rows = compare(s, {0.0}, {1, 2}, 0.95, 2);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
      CHECK(row.p_sim == 0.0);
      CHECK(row.p_model == 0.0);
      CHECK(row.within_ci);
    }
  }

  SUBCASE("matched convention lands inside the interval") {
    const auto rows = compare(s, {8.0, 10.0}, {1}, 0.99, 2);
    for (const auto& row : rows) {
      CHECK(row.within_ci);
      CHECK(row.counted_steps >= 20000);
    }
  }

  SUBCASE("mismatched convention is rejected at high noise") {
    s.convention = VarianceConvention::paper_shifted;
    const auto rows = compare(s, {10.0}, {1}, 0.99, 2);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].within_ci);
  }

  SUBCASE("empty grids are an error") {
    CHECK_THROWS_AS(compare(s, {}, {1}, 0.95, 1), std::invalid_argument);
    CHECK_THROWS_AS(compare(s, {1.0}, {}, 0.95, 1), std::invalid_argument);
  }
}

TEST_CASE("scenario validation rules") {
  Scenario s = table1_scenario(1.0, LinkModel::make_fixed_age(2), 300, 1, 0, 1);
  CHECK_NOTHROW(s.validate());

  Scenario warm = s;
  warm.warmup = 10;
  CHECK_THROWS_AS(warm.validate(), std::invalid_argument);

  Scenario short_horizon = s;
  short_horizon.horizon = 2;
  CHECK_THROWS_AS(short_horizon.validate(), std::invalid_argument);

  Scenario bad_x0 = s;
  bad_x0.x0 = Vector::Zero(2);
  CHECK_THROWS_AS(bad_x0.validate(), MatrixShapeError);

  Scenario continuous =
      table1_scenario(1.0, LinkModel::make_bernoulli(0.5), 100, 1, 100, 1);
  CHECK_THROWS_AS(continuous.validate(), std::invalid_argument);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(3) == 3);
  setenv("AOISIM_THREADS", "5", 1);
  CHECK(resolve_thread_count(0) == 5);
  CHECK(resolve_thread_count(2) == 2);
  unsetenv("AOISIM_THREADS");
  CHECK(resolve_thread_count(0) >= 1);
}
