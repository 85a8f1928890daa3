#include "aoisim/outage_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace aoisim {

double q_function(double y) {
  if (std::isnan(y)) {
    throw std::invalid_argument("q_function: argument must be finite");
  }
  return 0.5 * std::erfc(y / std::numbers::sqrt2);
}

namespace {

struct TermRange {
  int first;
  int last;
};

TermRange term_range(int age, VarianceConvention conv) {
  if (age < 1) {
    throw std::invalid_argument("error_variance: age must be >= 1");
  }
  if (conv == VarianceConvention::accumulation) {
    return {0, age};
  }
  return {1, age + 1};
}

}  // namespace

double error_variance(const SystemModel& model, int age,
                      VarianceConvention conv) {
  model.validate();
  const TermRange range = term_range(age, conv);
  PowerCache powers(model.a);
  double total = 0.0;
  for (int tau = range.first; tau <= range.last; ++tau) {
    const RowVector row = model.g * powers.power(tau);
    total += row.dot(model.sigma * row.transpose());
  }
  return std::max(total, 0.0);
}

double error_variance_diag(const SystemModel& model, int age,
                           VarianceConvention conv, double tol) {
  model.validate();
  const TermRange range = term_range(age, conv);

  const Eigendecomposition eig = eig_decompose(model.a, tol);
  if (!eig.diagonalizable) {
    throw NotDiagonalizable("error_variance_diag: A is defective");
  }
  const ComplexRowVector g_prime =
      model.g.cast<std::complex<double>>() * eig.p;
  const ComplexMatrix sigma_prime = transform_covariance(eig.p, model.sigma);

  std::complex<double> total = 0.0;
  ComplexVector lambda_pow = ComplexVector::Ones(eig.lambda.size());
  for (int tau = 0; tau < range.first; ++tau) {
    lambda_pow = lambda_pow.cwiseProduct(eig.lambda);
  }
  for (int tau = range.first; tau <= range.last; ++tau) {
    const ComplexRowVector v = g_prime.cwiseProduct(lambda_pow.transpose());
    total += (v * sigma_prime * v.adjoint()).value();
    lambda_pow = lambda_pow.cwiseProduct(eig.lambda);
  }

  const double residue = std::abs(total.imag());
  if (residue > 1e-10 * std::max(1.0, std::abs(total.real()))) {
    throw NumericError("error_variance_diag: imaginary residue too large");
  }
  return std::max(total.real(), 0.0);
}

double outage_probability(double delta_g, double sigma_g_sq) {
  if (!(delta_g > 0.0) || !std::isfinite(delta_g)) {
    throw std::invalid_argument("outage_probability: delta_g must be > 0");
  }
  if (sigma_g_sq < 0.0 || std::isnan(sigma_g_sq)) {
    throw std::invalid_argument("outage_probability: variance must be >= 0");
  }
  if (sigma_g_sq == 0.0) {
    return 0.0;  // continuous extension of the vanishing-variance limit
  }
  return 2.0 * q_function(delta_g / std::sqrt(sigma_g_sq));
}

namespace {

// Central second difference of p_out along the chosen axis, taken with a
// fixed relative step so the sign is meaningful across many decades.
double second_difference(double delta_g, double coord, ConvexityAxis axis) {
  const double h = 1e-3 * coord;
  const auto p = [&](double c) {
    const double variance =
        axis == ConvexityAxis::variance ? c : c * c;
    return outage_probability(delta_g, variance);
  };
  return p(coord + h) - 2.0 * p(coord) + p(coord - h);
}

double locate_sign_change(double delta_g, double lo_coord, double hi_coord,
                          ConvexityAxis axis) {
  // geometric scan, 400 points per decade
  const double decades = std::log10(hi_coord / lo_coord);
  const int points = std::max(16, static_cast<int>(400.0 * decades));
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double prev_coord = lo_coord;
  double prev_d2 = second_difference(delta_g, lo_coord, axis);
  for (int i = 1; i <= points; ++i) {
    const double coord =
        lo_coord * std::pow(hi_coord / lo_coord, static_cast<double>(i) / points);
    const double d2 = second_difference(delta_g, coord, axis);
    if (prev_d2 > 0.0 && d2 <= 0.0) {
      bracket_lo = prev_coord;
      bracket_hi = coord;
      break;
    }
    prev_coord = coord;
    prev_d2 = d2;
  }
  if (bracket_lo == 0.0) {
    throw NumericError("inflection_variance: no sign change found");
  }
  while ((bracket_hi - bracket_lo) / bracket_lo > 1e-6) {
    const double mid = std::sqrt(bracket_lo * bracket_hi);
    if (second_difference(delta_g, mid, axis) > 0.0) {
      bracket_lo = mid;
    } else {
      bracket_hi = mid;
    }
  }
  return 0.5 * (bracket_lo + bracket_hi);
}

}  // namespace

InflectionResult inflection_variance(double delta_g, ConvexityAxis axis) {
  if (!(delta_g > 0.0) || !std::isfinite(delta_g)) {
    throw std::invalid_argument("inflection_variance: delta_g must be > 0");
  }
  const double v_ref = delta_g * delta_g;
  InflectionResult out;
  out.paper_value = 0.5 * v_ref;
  if (axis == ConvexityAxis::variance) {
    out.numeric_value =
        locate_sign_change(delta_g, v_ref * 1e-4, v_ref * 1e4, axis);
  } else {
    const double s =
        locate_sign_change(delta_g, delta_g * 1e-2, delta_g * 1e2, axis);
    out.numeric_value = s * s;
  }
  return out;
}

Regime classify_regime(double delta_g, double sigma_g_sq, ConvexityAxis axis) {
  if (!(delta_g > 0.0) || !std::isfinite(delta_g)) {
    throw std::invalid_argument("classify_regime: delta_g must be > 0");
  }
  if (sigma_g_sq < 0.0 || std::isnan(sigma_g_sq)) {
    throw std::invalid_argument("classify_regime: variance must be >= 0");
  }
  const double threshold = axis == ConvexityAxis::std_dev
                               ? delta_g * delta_g / 2.0
                               : delta_g * delta_g / 3.0;
  if (std::abs(sigma_g_sq - threshold) <= 1e-9 * threshold) {
    return Regime::inflection;
  }
  return sigma_g_sq < threshold ? Regime::convex : Regime::concave;
}

std::vector<OutagePoint> outage_curve(const SystemModel& model,
                                      const std::vector<int>& ages,
                                      VarianceConvention conv,
                                      ConvexityAxis axis) {
  if (ages.empty()) {
    throw std::invalid_argument("outage_curve: ages must be non-empty");
  }
  std::vector<OutagePoint> curve;
  curve.reserve(ages.size());
  for (int age : ages) {
    const double variance = error_variance(model, age, conv);
    curve.push_back(OutagePoint{
        .age = age,
        .sigma_g_sq = variance,
        .p_out = outage_probability(model.delta_g, variance),
        .regime = classify_regime(model.delta_g, variance, axis),
    });
  }
  return curve;
}

const char* to_string(VarianceConvention conv) {
  return conv == VarianceConvention::paper_shifted ? "paper_shifted"
                                                   : "accumulation";
}

const char* to_string(ConvexityAxis axis) {
  return axis == ConvexityAxis::variance ? "variance" : "std_dev";
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::convex:
      return "convex";
    case Regime::concave:
      return "concave";
    case Regime::inflection:
      return "inflection";
  }
  return "unknown";
}

VarianceConvention parse_convention(const std::string& text) {
  if (text == "paper_shifted") {
    return VarianceConvention::paper_shifted;
  }
  if (text == "accumulation") {
    return VarianceConvention::accumulation;
  }
  throw std::invalid_argument("unknown variance convention: " + text);
}

ConvexityAxis parse_axis(const std::string& text) {
  if (text == "variance") {
    return ConvexityAxis::variance;
  }
  if (text == "std_dev") {
    return ConvexityAxis::std_dev;
  }
  throw std::invalid_argument("unknown convexity axis: " + text);
}

}  // namespace aoisim
