#include "aoisim/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <utility>

namespace aoisim {

std::int64_t Scenario::frames_per_episode() const {
  if (link.mode != LinkModel::Mode::fixed_age) {
    throw std::logic_error("frames_per_episode: not a fixed-age scenario");
  }
  return horizon / (link.fixed_age + 1);
}

void Scenario::validate() const {
  model.validate();
  link.validate();
  if (x0.size() != model.state_dim() || !x0.allFinite()) {
    throw MatrixShapeError("Scenario: x0 must be a finite N-vector");
  }
  if (episodes < 1) {
    throw std::invalid_argument("Scenario: episodes must be >= 1");
  }
  if (warmup < 0 || horizon <= warmup) {
    throw std::invalid_argument("Scenario: need horizon > warmup >= 0");
  }
  if (history_capacity < 1) {
    throw std::invalid_argument("Scenario: history capacity must be >= 1");
  }
  if (link.mode == LinkModel::Mode::fixed_age) {
    if (warmup != 0) {
      throw std::invalid_argument(
          "Scenario: fixed-age conditioning uses independent frames; "
          "warmup must be 0");
    }
    if (horizon < link.fixed_age + 1) {
      throw std::invalid_argument(
          "Scenario: horizon too short for one fixed-age frame");
    }
  }
}

void MomentAccumulator::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n == 0) {
    return;
  }
  if (n == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n);
  const double nb = static_cast<double>(other.n);
  const double delta = other.mean - mean;
  const double total = na + nb;
  mean += delta * nb / total;
  m2 += other.m2 + delta * delta * na * nb / total;
  n += other.n;
}

double MomentAccumulator::sample_variance() const {
  return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
}

bool RunStats::operator==(const RunStats& other) const {
  return counted_steps == other.counted_steps &&
         outage_steps == other.outage_steps &&
         age_histogram == other.age_histogram &&
         age_outage_histogram == other.age_outage_histogram &&
         deviation.n == other.deviation.n &&
         deviation.mean == other.deviation.mean &&
         deviation.m2 == other.deviation.m2 && seed == other.seed;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void record_sample(RunStats& stats, const Scenario& scenario, int acting_age,
                   double cost) {
  const double dev = cost - scenario.model.g_aim();
  ++stats.counted_steps;
  ++stats.age_histogram[acting_age];
  if (std::abs(dev) > scenario.model.delta_g) {
    ++stats.outage_steps;
    ++stats.age_outage_histogram[acting_age];
  }
  stats.deviation.add(dev);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t base_seed,
                                 std::int64_t episode_index) {
  return splitmix64(splitmix64(base_seed) ^
                    splitmix64(static_cast<std::uint64_t>(episode_index) + 1));
}

RunStats run_episode(const Scenario& scenario, std::int64_t episode_index) {
  scenario.validate();
  RunStats stats;
  stats.seed = derive_stream_seed(scenario.base_seed, episode_index);
  RngEngine rng(stats.seed);
  LoopWorkspace ws(scenario.model);

  if (scenario.link.mode == LinkModel::Mode::fixed_age) {
    const int alpha0 = scenario.link.fixed_age;
    const std::int64_t frames = scenario.frames_per_episode();
    for (std::int64_t frame = 0; frame < frames; ++frame) {
      LoopState state = make_initial_state(scenario.model, scenario.x0,
                                           scenario.history_capacity);
      for (int t = 0; t <= alpha0; ++t) {
        state = closed_loop_step(scenario.model, ws, std::move(state),
                                 /*link=*/nullptr, rng);
      }
      record_sample(stats, scenario, state.last_acting_age,
                    scenario.model.cost(state.x));
    }
    return stats;
  }

  LoopState state = make_initial_state(scenario.model, scenario.x0,
                                       scenario.history_capacity);
  for (std::int64_t t = 0; t < scenario.horizon; ++t) {
    state = closed_loop_step(scenario.model, ws, std::move(state),
                             &scenario.link, rng);
    if (t >= scenario.warmup) {
      record_sample(stats, scenario, state.last_acting_age,
                    scenario.model.cost(state.x));
    }
  }
  return stats;
}

RunStats aggregate(std::vector<RunStats> stats) {
  if (stats.empty()) {
    throw std::invalid_argument("aggregate: no stats given");
  }
  std::sort(stats.begin(), stats.end(),
            [](const RunStats& a, const RunStats& b) { return a.seed < b.seed; });
  RunStats total = stats.front();
  for (std::size_t i = 1; i < stats.size(); ++i) {
    const RunStats& s = stats[i];
    total.counted_steps += s.counted_steps;
    total.outage_steps += s.outage_steps;
    for (const auto& [age, count] : s.age_histogram) {
      total.age_histogram[age] += count;
    }
    for (const auto& [age, count] : s.age_outage_histogram) {
      total.age_outage_histogram[age] += count;
    }
    total.deviation.merge(s.deviation);
  }
  return total;
}

int resolve_thread_count(int requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("AOISIM_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) {
      return parsed;
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

RunStats run_scenario(const Scenario& scenario, int threads) {
  scenario.validate();
  const int workers = std::min<std::int64_t>(
      resolve_thread_count(threads), scenario.episodes);

  std::vector<RunStats> parts(static_cast<std::size_t>(scenario.episodes));
  if (workers <= 1) {
    for (std::int64_t e = 0; e < scenario.episodes; ++e) {
      parts[static_cast<std::size_t>(e)] = run_episode(scenario, e);
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::int64_t e = w; e < scenario.episodes; e += workers) {
          parts[static_cast<std::size_t>(e)] = run_episode(scenario, e);
        }
      });
    }
    for (auto& worker : pool) {
      worker.join();
    }
  }
  return aggregate(std::move(parts));
}

double normal_quantile(double prob) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw std::invalid_argument("normal_quantile: prob must be in (0, 1)");
  }
  // Acklam's rational approximation
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (prob < p_low) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - p_low) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley step against the exact CDF
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - prob;
  const double u = e * std::numbers::sqrt2 * std::sqrt(std::numbers::pi) *
                   std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

RateEstimate wilson_interval(std::int64_t successes, std::int64_t trials,
                             double confidence) {
  if (trials <= 0) {
    throw std::invalid_argument("wilson_interval: trials must be > 0");
  }
  if (successes < 0 || successes > trials) {
    throw std::invalid_argument("wilson_interval: successes out of range");
  }
  if (!(confidence > 0.0) || !(confidence < 1.0)) {
    throw std::invalid_argument("wilson_interval: confidence in (0, 1)");
  }
  const double z = normal_quantile(0.5 * (1.0 + confidence));
  const double n = static_cast<double>(trials);
  const double p_hat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = n + z2;
  const double center = (static_cast<double>(successes) + 0.5 * z2) / denom;
  const double spread =
      z * std::sqrt(n * p_hat * (1.0 - p_hat) + 0.25 * z2) / denom;
  RateEstimate est;
  est.p = p_hat;
  est.lo = std::max(0.0, center - spread);
  est.hi = std::min(1.0, center + spread);
  return est;
}

RateEstimate estimate_rate(const RunStats& stats, double confidence) {
  if (stats.counted_steps <= 0) {
    throw std::invalid_argument("estimate_rate: zero counted steps");
  }
  return wilson_interval(stats.outage_steps, stats.counted_steps, confidence);
}

std::vector<ComparisonRow> compare(const Scenario& scenario,
                                   const std::vector<double>& noise_grid,
                                   const std::vector<int>& age_grid,
                                   double confidence, int threads) {
  if (noise_grid.empty() || age_grid.empty()) {
    throw std::invalid_argument("compare: grids must be non-empty");
  }
  scenario.model.validate();

  std::vector<ComparisonRow> rows;
  rows.reserve(noise_grid.size() * age_grid.size());
  for (double noise : noise_grid) {
    if (noise < 0.0 || !std::isfinite(noise)) {
      throw std::invalid_argument("compare: noise scales must be >= 0");
    }
    for (int age : age_grid) {
      Scenario cell = scenario;
      cell.model.sigma = scenario.model.sigma * (noise * noise);
      cell.link = LinkModel::make_fixed_age(age);
      cell.warmup = 0;
      cell.horizon = std::max<std::int64_t>(scenario.horizon, age + 1);
      // decorrelate cells without losing determinism
      cell.base_seed = splitmix64(scenario.base_seed ^
                                  splitmix64(static_cast<std::uint64_t>(age)) ^
                                  std::bit_cast<std::uint64_t>(noise));

      const RunStats stats = run_scenario(cell, threads);
      const RateEstimate rate = estimate_rate(stats, confidence);
      const double model_var =
          error_variance(cell.model, age, scenario.convention);
      const double p_model =
          outage_probability(scenario.model.delta_g, model_var);

      rows.push_back(ComparisonRow{
          .noise_scale = noise,
          .age = age,
          .p_sim = rate.p,
          .ci_half_width = rate.half_width(),
          .p_model = p_model,
          .within_ci = rate.contains(p_model),
          .empirical_variance = stats.empirical_variance(),
          .model_variance = model_var,
          .counted_steps = stats.counted_steps,
          .outage_steps = stats.outage_steps,
      });
    }
  }
  return rows;
}

}  // namespace aoisim
