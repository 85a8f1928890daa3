#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace aoisim {

using RngEngine = std::mt19937_64;

/// Uplink description: Bernoulli packet success, or the deterministic
/// fixed-age device used to condition runs on a single AoI value.
struct LinkModel {
  enum class Mode { bernoulli, fixed_age };

  Mode mode = Mode::bernoulli;
  double p = 1.0;      // success probability, (0, 1]
  int fixed_age = 1;   // alpha0 >= 1

  static LinkModel make_bernoulli(double p);
  static LinkModel make_fixed_age(int alpha0);
  void validate() const;
};

struct AoiState {
  int age = 1;
};

/// Age recurrence: 1 on reception, current age + 1 otherwise.
AoiState aoi_step(AoiState current, bool received);

/// Reception draw for a given step index. Bernoulli mode consumes one
/// uniform from the stream; fixed-age mode is a deterministic cycle firing
/// on every alpha0-th step (every step when alpha0 = 1) and consumes no
/// randomness.
bool sample_reception(const LinkModel& link, RngEngine& rng, std::int64_t step);

/// Stationary law of the age chain under Bernoulli reception:
/// P(age = k) = p (1-p)^(k-1) for k >= 1.
double aoi_stationary_pmf(double p, int k);

}  // namespace aoisim
