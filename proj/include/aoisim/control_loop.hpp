#pragma once

#include <cstdint>
#include <deque>

#include "aoisim/aoi_link.hpp"
#include "aoisim/statespace.hpp"

namespace aoisim {

class NonPsdError : public NumericError {
  using NumericError::NumericError;
};

/// Raised when the control history ring would have to hold more steps than
/// its capacity (the age outgrew the configured depth).
class HistoryDepthError : public NumericError {
  using NumericError::NumericError;
};

/// Raised when the estimator asks for a control that was never stored.
class InsufficientHistoryError : public NumericError {
  using NumericError::NumericError;
};

/// Plant, cost band and controller target. Immutable once validated;
/// shared freely across threads.
struct SystemModel {
  Matrix a;        // N x N system matrix
  Matrix b;        // N x M input matrix
  Matrix sigma;    // N x N noise covariance, PSD
  RowVector g;     // 1 x N cost row
  Vector x_aim;    // target state
  double delta_g = 0.0;  // half-width of the admissible cost band

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
  double g_aim() const { return g.dot(x_aim); }
  double cost(const Vector& x) const { return g.dot(x); }

  /// Checks dimensions, finiteness, delta_g > 0 and that sigma is symmetric
  /// PSD (eigenvalues >= -1e-12 * scale). Throws MatrixShapeError or
  /// NonPsdError.
  void validate() const;
};

/// What the controller remembers: the last state received over the link
/// (the anchor) and the controls applied since then. The ring keeps at most
/// `capacity` controls; needing more is an error rather than silent loss.
class ControllerMemory {
 public:
  ControllerMemory(Vector initial_state, std::int64_t time,
                   std::size_t capacity = kDefaultHistoryDepth);

  static constexpr std::size_t kDefaultHistoryDepth = 512;

  void on_reception(Vector state, std::int64_t time);
  void push_control(Vector u, std::int64_t time);

  const Vector& anchor() const { return anchor_; }
  std::int64_t anchor_time() const { return anchor_time_; }
  const Vector& control_at(std::int64_t time) const;
  bool has_control_at(std::int64_t time) const;
  std::size_t capacity() const { return capacity_; }

 private:
  Vector anchor_;
  std::int64_t anchor_time_ = 0;
  std::deque<Vector> controls_;         // controls_[i] applied at first_control_time_ + i
  std::int64_t first_control_time_ = 0;
  std::size_t capacity_;
};

/// Per-thread scratch reused across steps: cached powers of A, the
/// pseudo-inverse of B and a factor L with L L^T = Sigma for noise draws.
class LoopWorkspace {
 public:
  explicit LoopWorkspace(const SystemModel& model);

  PowerCache powers;
  Matrix b_pinv;         // M x N
  Matrix noise_factor;   // N x r, w = noise_factor * z with z ~ N(0, I_r)
};

/// Column factor L with L L^T = sigma, keeping only columns of positive
/// eigenvalue. Eigenvalues below -1e-12 * scale are rejected as non-PSD.
Matrix covariance_factor(const Matrix& sigma);

/// w = L z with fresh standard normals. Consumes a deterministic number of
/// engine draws per call for a given factor.
Vector draw_gaussian(const Matrix& factor, RngEngine& rng);

/// x_hat(t) = A^age x(t-age) + sum_{tau=1..age} A^(tau-1) B u(t-tau),
/// built only from the anchor and stored controls. age = 0 returns the
/// anchor itself.
Vector estimate_state(const SystemModel& model, LoopWorkspace& ws,
                      const ControllerMemory& mem, int age);
Vector estimate_state(const SystemModel& model, const ControllerMemory& mem,
                      int age);

/// u = B+ (x_aim - A x_hat). Coincides with B^H (B B^H)^-1 (...) whenever
/// B has full row rank.
Vector control_signal(const SystemModel& model, const Vector& x_hat);
Vector control_signal(const SystemModel& model, const LoopWorkspace& ws,
                      const Vector& x_hat);

/// x(t+1) = A x + B u + w.
Vector plant_step(const SystemModel& model, const Vector& x, const Vector& u,
                  const Vector& w);

struct LoopState {
  std::int64_t t = 0;
  Vector x;        // x(t)
  Vector prev_x;   // x(t-1); equals x at t = 0
  AoiState aoi;
  ControllerMemory mem;

  // instrumentation of the step that produced x(t)
  int last_acting_age = 0;  // estimation lag used by the control at t-1
  Vector last_noise;        // w(t-1)
};

/// Controller knows x(0) exactly (lag 0); the reported AoI starts at 1.
LoopState make_initial_state(const SystemModel& model, Vector x0,
                             std::size_t history_capacity =
                                 ControllerMemory::kDefaultHistoryDepth);

/// One loop step at time t: sample reception (t >= 1, when a link is given),
/// update the age counter, re-anchor memory on x(t-1) if received, estimate,
/// control, draw w ~ N(0, Sigma), advance the plant. A null link means
/// blackout (no reception possible).
LoopState closed_loop_step(const SystemModel& model, LoopWorkspace& ws,
                           LoopState state, const LinkModel* link,
                           RngEngine& rng);
LoopState closed_loop_step(const SystemModel& model, LoopState state,
                           const LinkModel& link, RngEngine& rng);

}  // namespace aoisim
