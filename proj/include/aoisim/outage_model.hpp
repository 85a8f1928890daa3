#pragma once

#include <string>
#include <vector>

#include "aoisim/control_loop.hpp"

namespace aoisim {

/// Index range of the g A^tau terms entering sigma_G^2. The error sum can
/// be indexed two ways, differing by one power of A at each end; both are
/// implemented so the Monte-Carlo calibration can discriminate empirically.
///   accumulation : tau = 0 .. age      (matches the simulated loop when
///                                       samples are paired with the acting age)
///   paper_shifted: tau = 1 .. age + 1
enum class VarianceConvention { paper_shifted, accumulation };

/// Axis along which convexity of p_out is classified: the error variance
/// itself, or its square root.
enum class ConvexityAxis { variance, std_dev };

enum class Regime { convex, concave, inflection };

class NotDiagonalizable : public NumericError {
  using NumericError::NumericError;
};

/// Upper-tail standard normal probability, via the complementary error
/// function. Absolute error well below 1e-12.
double q_function(double y);

/// sigma_G^2 at a given age by direct matrix-power accumulation:
/// sum over tau of (g A^tau) Sigma (g A^tau)^T. Works for any square A.
double error_variance(const SystemModel& model, int age,
                      VarianceConvention conv);

/// Same quantity through the eigendecomposition route
/// (g' Lambda^tau Sigma' Lambda^H^tau g'^H with g' = g P,
/// Sigma' = P^-1 Sigma P^-H). Throws NotDiagonalizable for defective A.
/// Imaginary residue beyond 1e-10 * max(1, |value|) is an error.
double error_variance_diag(const SystemModel& model, int age,
                           VarianceConvention conv, double tol = 1e-8);

/// p_out = 2 Q(delta_g / sqrt(sigma_g_sq)); 0 when the variance vanishes.
double outage_probability(double delta_g, double sigma_g_sq);

struct InflectionResult {
  double paper_value;    ///< the closed form delta_g^2 / 2 (std-dev axis)
  double numeric_value;  ///< located numerically along the requested axis,
                         ///< always reported as a variance level
};

/// Locates the convex-to-concave switch of p_out by the sign change of a
/// central second difference on a geometric grid (400 points per decade over
/// [delta_g^2 * 1e-4, delta_g^2 * 1e4]), refined by bisection to 1e-6
/// relative. Along the variance axis the switch sits at delta_g^2 / 3; along
/// the std-dev axis at delta_g^2 / 2, which reproduces the closed form.
InflectionResult inflection_variance(double delta_g, ConvexityAxis axis);

/// Convex below the axis-appropriate threshold, concave above, inflection
/// within 1e-9 relative of it.
Regime classify_regime(double delta_g, double sigma_g_sq, ConvexityAxis axis);

struct OutagePoint {
  int age;
  double sigma_g_sq;
  double p_out;
  Regime regime;
};

std::vector<OutagePoint> outage_curve(const SystemModel& model,
                                      const std::vector<int>& ages,
                                      VarianceConvention conv,
                                      ConvexityAxis axis);

const char* to_string(VarianceConvention conv);
const char* to_string(ConvexityAxis axis);
const char* to_string(Regime regime);
VarianceConvention parse_convention(const std::string& text);
ConvexityAxis parse_axis(const std::string& text);

}  // namespace aoisim
