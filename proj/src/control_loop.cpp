#include "aoisim/control_loop.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace aoisim {

void SystemModel::validate() const {
  require_finite(a, "SystemModel.A");
  require_finite(b, "SystemModel.B");
  require_finite(sigma, "SystemModel.Sigma");
  const Eigen::Index n = a.rows();
  if (a.cols() != n) {
    throw MatrixShapeError("SystemModel: A must be square");
  }
  if (b.rows() != n) {
    throw MatrixShapeError("SystemModel: B must have N rows");
  }
  if (b.cols() < 1) {
    throw MatrixShapeError("SystemModel: B must have at least one column");
  }
  if (sigma.rows() != n || sigma.cols() != n) {
    throw MatrixShapeError("SystemModel: Sigma must be N x N");
  }
  if (g.cols() != n || !g.allFinite()) {
    throw MatrixShapeError("SystemModel: g must be a finite 1 x N row");
  }
  if (x_aim.size() != n || !x_aim.allFinite()) {
    throw MatrixShapeError("SystemModel: x_aim must be a finite N-vector");
  }
  if (!(delta_g > 0.0) || !std::isfinite(delta_g)) {
    throw MatrixShapeError("SystemModel: delta_g must be positive");
  }

  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw NonPsdError("SystemModel: Sigma is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw NonPsdError("SystemModel: Sigma has a negative eigenvalue");
  }
}

ControllerMemory::ControllerMemory(Vector initial_state, std::int64_t time,
                                   std::size_t capacity)
    : anchor_(std::move(initial_state)), anchor_time_(time),
      first_control_time_(time), capacity_(capacity) {
  if (capacity_ < 1) {
    throw std::invalid_argument("ControllerMemory: capacity must be >= 1");
  }
}

void ControllerMemory::on_reception(Vector state, std::int64_t time) {
  if (time < anchor_time_) {
    throw std::invalid_argument("ControllerMemory: anchor moving backwards");
  }
  anchor_ = std::move(state);
  anchor_time_ = time;
  // controls before the new anchor can never be asked for again
  while (!controls_.empty() && first_control_time_ < time) {
    controls_.pop_front();
    ++first_control_time_;
  }
  if (controls_.empty()) {
    first_control_time_ = time;
  }
}

void ControllerMemory::push_control(Vector u, std::int64_t time) {
  if (controls_.empty()) {
    first_control_time_ = time;
  } else if (time != first_control_time_ +
                         static_cast<std::int64_t>(controls_.size())) {
    throw std::invalid_argument("ControllerMemory: non-contiguous control");
  }
  if (controls_.size() >= capacity_) {
    throw HistoryDepthError(
        "control history depth exceeded (" + std::to_string(capacity_) +
        " steps without a usable update)");
  }
  controls_.push_back(std::move(u));
}

bool ControllerMemory::has_control_at(std::int64_t time) const {
  return time >= first_control_time_ &&
         time < first_control_time_ + static_cast<std::int64_t>(controls_.size());
}

const Vector& ControllerMemory::control_at(std::int64_t time) const {
  if (!has_control_at(time)) {
    throw InsufficientHistoryError("control at t=" + std::to_string(time) +
                                   " not retained");
  }
  return controls_[static_cast<std::size_t>(time - first_control_time_)];
}

Matrix covariance_factor(const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
  const Vector& values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-12 * scale) {
      throw NonPsdError("covariance_factor: negative eigenvalue");
    }
    if (values(i) > 0.0) {
      ++rank;
    }
  }
  Matrix factor(sigma.rows(), rank);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > 0.0) {
      factor.col(col++) = eig.eigenvectors().col(i) * std::sqrt(values(i));
    }
  }
  return factor;
}

Vector draw_gaussian(const Matrix& factor, RngEngine& rng) {
  std::normal_distribution<double> normal;
  Vector z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = normal(rng);
  }
  return factor * z;
}

LoopWorkspace::LoopWorkspace(const SystemModel& model)
    : powers(model.a), b_pinv(pseudo_inverse(model.b).matrix),
      noise_factor(covariance_factor(model.sigma)) {}

Vector estimate_state(const SystemModel& model, LoopWorkspace& ws,
                      const ControllerMemory& mem, int age) {
  if (age < 0) {
    throw std::invalid_argument("estimate_state: age must be >= 0");
  }
  const std::int64_t now = mem.anchor_time() + age;
  Vector x_hat = ws.powers.power(age) * mem.anchor();
  for (int tau = 1; tau <= age; ++tau) {
    x_hat.noalias() +=
        ws.powers.power(tau - 1) * (model.b * mem.control_at(now - tau));
  }
  return x_hat;
}

Vector estimate_state(const SystemModel& model, const ControllerMemory& mem,
                      int age) {
  LoopWorkspace ws(model);
  return estimate_state(model, ws, mem, age);
}

Vector control_signal(const SystemModel& model, const LoopWorkspace& ws,
                      const Vector& x_hat) {
  if (x_hat.size() != model.state_dim()) {
    throw MatrixShapeError("control_signal: estimate has wrong dimension");
  }
  return ws.b_pinv * (model.x_aim - model.a * x_hat);
}

Vector control_signal(const SystemModel& model, const Vector& x_hat) {
  if (x_hat.size() != model.state_dim()) {
    throw MatrixShapeError("control_signal: estimate has wrong dimension");
  }
  return pseudo_inverse(model.b).matrix * (model.x_aim - model.a * x_hat);
}

Vector plant_step(const SystemModel& model, const Vector& x, const Vector& u,
                  const Vector& w) {
  if (x.size() != model.state_dim() || u.size() != model.input_dim() ||
      w.size() != model.state_dim()) {
    throw MatrixShapeError("plant_step: dimension mismatch");
  }
  return model.a * x + model.b * u + w;
}

LoopState make_initial_state(const SystemModel& model, Vector x0,
                             std::size_t history_capacity) {
  if (x0.size() != model.state_dim()) {
    throw MatrixShapeError("make_initial_state: x0 has wrong dimension");
  }
  LoopState state{
      .t = 0,
      .x = x0,
      .prev_x = x0,
      .aoi = AoiState{1},
      .mem = ControllerMemory(std::move(x0), 0, history_capacity),
      .last_acting_age = 0,
      .last_noise = Vector::Zero(model.state_dim()),
  };
  return state;
}

LoopState closed_loop_step(const SystemModel& model, LoopWorkspace& ws,
                           LoopState state, const LinkModel* link,
                           RngEngine& rng) {
  const std::int64_t t = state.t;

  if (t >= 1) {
    const bool received = link ? sample_reception(*link, rng, t) : false;
    state.aoi = aoi_step(state.aoi, received);
    if (received) {
      state.mem.on_reception(state.prev_x, t - 1);
    }
  }

  const int lag = static_cast<int>(t - state.mem.anchor_time());
  const Vector x_hat = estimate_state(model, ws, state.mem, lag);
  const Vector u = control_signal(model, ws, x_hat);
  const Vector w = draw_gaussian(ws.noise_factor, rng);
  Vector x_next = plant_step(model, state.x, u, w);

  state.mem.push_control(u, t);
  state.prev_x = std::move(state.x);
  state.x = std::move(x_next);
  state.t = t + 1;
  state.last_acting_age = lag;
  state.last_noise = w;
  return state;
}

LoopState closed_loop_step(const SystemModel& model, LoopState state,
                           const LinkModel& link, RngEngine& rng) {
  LoopWorkspace ws(model);
  return closed_loop_step(model, ws, std::move(state), &link, rng);
}

}  // namespace aoisim
