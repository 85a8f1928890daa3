#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aoisim/control_loop.hpp"
#include "aoisim/outage_model.hpp"

namespace aoisim {

/// A complete, reproducible experiment description.
///
/// Two run modes follow from the link:
///  - bernoulli: one continuous closed loop per episode; every post-warmup
///    step contributes one outage sample, paired with the acting age of the
///    control that produced it.
///  - fixed_age(alpha0): frames of alpha0+1 blackout steps, each restarted
///    at x0 with exactly-known initial state; one sample per frame, taken at
///    acting age alpha0. `horizon` is the per-episode step budget, so each
///    episode runs floor(horizon / (alpha0+1)) frames. warmup must be 0
///    (frames are independent by construction).
struct Scenario {
  SystemModel model;
  LinkModel link;
  Vector x0;
  std::int64_t horizon = 0;
  std::int64_t episodes = 1;
  std::int64_t warmup = 0;
  std::uint64_t base_seed = 0;
  VarianceConvention convention = VarianceConvention::accumulation;
  ConvexityAxis axis = ConvexityAxis::std_dev;
  std::size_t history_capacity = ControllerMemory::kDefaultHistoryDepth;

  std::string name;
  std::vector<double> noise_grid;  // defaults for the compare command
  std::vector<int> age_grid;

  std::int64_t frames_per_episode() const;  // fixed-age mode only
  void validate() const;
};

/// Pooled first/second moments (Chan merge), used for the empirical
/// variance of g.x - G_aim.
struct MomentAccumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const MomentAccumulator& other);
  double sample_variance() const;  // m2 / (n-1); 0 when n < 2
};

struct RunStats {
  std::int64_t counted_steps = 0;
  std::int64_t outage_steps = 0;
  std::map<int, std::int64_t> age_histogram;         // acting age -> samples
  std::map<int, std::int64_t> age_outage_histogram;  // acting age -> outages
  MomentAccumulator deviation;                       // g.x - G_aim
  std::uint64_t seed = 0;

  double empirical_variance() const { return deviation.sample_variance(); }
  bool operator==(const RunStats& other) const;
};

/// SplitMix64-style derivation of an independent stream seed per episode.
std::uint64_t derive_stream_seed(std::uint64_t base_seed,
                                 std::int64_t episode_index);

/// Simulates one episode. Deterministic in (scenario, episode_index).
RunStats run_episode(const Scenario& scenario, std::int64_t episode_index);

/// Order-independent reduction: partial stats are folded in canonical
/// (seed-sorted) order, so permutations and thread schedules cannot change
/// the result.
RunStats aggregate(std::vector<RunStats> stats);

/// All episodes of a scenario, parallel over episodes, aggregated.
RunStats run_scenario(const Scenario& scenario, int threads = 0);

struct RateEstimate {
  double p;   // point estimate k/n
  double lo;  // Wilson interval bounds
  double hi;
  double half_width() const { return 0.5 * (hi - lo); }
  bool contains(double value) const { return lo <= value && value <= hi; }
};

/// Wilson score interval for k successes in n trials.
RateEstimate wilson_interval(std::int64_t successes, std::int64_t trials,
                             double confidence);

/// Outage-rate estimate from aggregated stats. Throws on zero counted steps.
RateEstimate estimate_rate(const RunStats& stats, double confidence);

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement; relative error ~1e-15).
double normal_quantile(double prob);

struct ComparisonRow {
  double noise_scale = 0.0;
  int age = 0;
  double p_sim = 0.0;
  double ci_half_width = 0.0;
  double p_model = 0.0;
  bool within_ci = false;

  // extras carried for diagnostics and the variance oracle
  double empirical_variance = 0.0;
  double model_variance = 0.0;
  std::int64_t counted_steps = 0;
  std::int64_t outage_steps = 0;
};

/// Model-vs-simulation sweep. For each (noise_scale, age) cell the scenario
/// is re-run with Sigma scaled by noise_scale^2 under fixed-age conditioning
/// at that age, and p_sim is compared against
/// outage_probability(delta_g, error_variance(model, age, convention)).
/// within_ci means the model value lies inside the simulation's Wilson
/// interval at the given confidence.
std::vector<ComparisonRow> compare(const Scenario& scenario,
                                   const std::vector<double>& noise_grid,
                                   const std::vector<int>& age_grid,
                                   double confidence = 0.95, int threads = 0);

/// requested > 0 wins; otherwise the AOISIM_THREADS environment variable;
/// otherwise hardware concurrency.
int resolve_thread_count(int requested);

}  // namespace aoisim
