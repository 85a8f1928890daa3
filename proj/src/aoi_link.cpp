#include "aoisim/aoi_link.hpp"

#include <cmath>

namespace aoisim {

LinkModel LinkModel::make_bernoulli(double p) {
  LinkModel link;
  link.mode = Mode::bernoulli;
  link.p = p;
  link.validate();
  return link;
}

LinkModel LinkModel::make_fixed_age(int alpha0) {
  LinkModel link;
  link.mode = Mode::fixed_age;
  link.fixed_age = alpha0;
  link.validate();
  return link;
}

void LinkModel::validate() const {
  if (mode == Mode::bernoulli) {
    if (!(p > 0.0) || p > 1.0 || !std::isfinite(p)) {
      throw std::invalid_argument("LinkModel: bernoulli p must be in (0, 1]");
    }
  } else {
    if (fixed_age < 1) {
      throw std::invalid_argument("LinkModel: fixed age must be >= 1");
    }
  }
}

AoiState aoi_step(AoiState current, bool received) {
  if (current.age < 1) {
    throw std::invalid_argument("aoi_step: age must be >= 1");
  }
  return AoiState{received ? 1 : current.age + 1};
}

bool sample_reception(const LinkModel& link, RngEngine& rng,
                      std::int64_t step) {
  link.validate();
  if (link.mode == LinkModel::Mode::bernoulli) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    return uniform(rng) < link.p;
  }
  return (step + 1) % link.fixed_age == 0;
}

double aoi_stationary_pmf(double p, int k) {
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("aoi_stationary_pmf: p must be in (0, 1]");
  }
  if (k < 1) {
    throw std::invalid_argument("aoi_stationary_pmf: k must be >= 1");
  }
  return p * std::pow(1.0 - p, k - 1);
}

}  // namespace aoisim
