#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "uenn/types.hpp"

namespace uenn {

/// FIRE hyperparameters. Defaults are the values used for network training
/// (pseudo mass 0.1, dt 0.001, dt_max 0.01, remaining constants per the
/// original method).
struct FireConfig {
  Index n_min = 5;
  double f_inc = 1.1;
  double f_dec = 0.5;
  double alpha_start = 0.1;
  double f_alpha = 0.99;
  double dt_init = 0.001;
  double dt_max = 0.01;
  Index i_max = 100000;
  double pseudo_mass = 0.1;

  /// Plateau stop: end early when the mean per-iteration relative loss
  /// change over the trailing stop_window iterations drops below stop_tol.
  /// stop_window = 0 disables the check and only i_max terminates.
  Index stop_window = 1000;
  double stop_tol = 1e-10;

  void validate() const {
    require(f_dec > 0.0 && f_dec < 1.0, "FireConfig: need 0 < f_dec < 1");
    require(f_inc > 1.0, "FireConfig: need f_inc > 1");
    require(f_alpha > 0.0 && f_alpha < 1.0, "FireConfig: need 0 < f_alpha < 1");
    require(dt_init > 0.0 && dt_init <= dt_max, "FireConfig: need 0 < dt_init <= dt_max");
    require(pseudo_mass > 0.0, "FireConfig: need pseudo_mass > 0");
    require(alpha_start > 0.0 && alpha_start < 1.0, "FireConfig: need 0 < alpha_start < 1");
    require(n_min >= 0, "FireConfig: need n_min >= 0");
    require(i_max >= 1, "FireConfig: need i_max >= 1");
    require(stop_window >= 0, "FireConfig: need stop_window >= 0");
    require(stop_tol >= 0.0, "FireConfig: need stop_tol >= 0");
  }
};

/// Minimizer state between iterations. `since_uphill` is the N counter,
/// reset whenever P = F.v turns non-positive.
struct FireState {
  VecX params;
  VecX velocity;
  double dt = 0.0;
  double alpha = 0.0;
  Index since_uphill = 0;
  Index iteration = 0;
};

struct FireResult {
  VecX x;
  std::vector<double> history;  // loss at the start of each iteration
  bool stopped_by_plateau = false;

  Index iterations() const { return static_cast<Index>(history.size()); }
};

/// One FIRE update on an already-evaluated force F = -gradient:
/// Euler-update x += v dt and v += (F/m) dt; P = F.v; N += 1; mix v toward
/// the downhill direction, v = (1-alpha) v + alpha |v| F/|F| (skipped when
/// |F| is numerically zero); if P > 0 and N > n_min accelerate
/// (dt = min(dt f_inc, dt_max), alpha *= f_alpha); if P <= 0 back off
/// (dt *= f_dec, v = 0, alpha = alpha_start, N = 0).
inline void fire_step(FireState& st, const VecX& force, const FireConfig& cfg) {
  require(force.size() == st.params.size(), "fire_step: force length mismatch");
  st.params += st.velocity * st.dt;
  st.velocity += force * (st.dt / cfg.pseudo_mass);

  const double p = force.dot(st.velocity);
  st.since_uphill += 1;

  const double fnorm = force.norm();
  if (fnorm >= kNormEps) {
    const double vnorm = st.velocity.norm();
    st.velocity = (1.0 - st.alpha) * st.velocity + (st.alpha * vnorm / fnorm) * force;
  }

  if (p > 0.0 && st.since_uphill > cfg.n_min) {
    st.dt = std::min(st.dt * cfg.f_inc, cfg.dt_max);
    st.alpha *= cfg.f_alpha;
  }
  if (p <= 0.0) {
    st.dt *= cfg.f_dec;
    st.velocity.setZero();
    st.alpha = cfg.alpha_start;
    st.since_uphill = 0;
  }
  st.iteration += 1;
}

namespace detail {
inline bool plateau_reached(const std::vector<double>& history, Index window, double tol) {
  if (window <= 0 || static_cast<Index>(history.size()) <= window) return false;
  const double now = history.back();
  const double then = history[history.size() - 1 - static_cast<std::size_t>(window)];
  const double denom =
      double(window) * std::max(std::abs(then), std::numeric_limits<double>::min());
  return std::abs(now - then) / denom < tol;
}
}  // namespace detail

/// Runs the minimizer on an arbitrary objective.
///
/// gradient_fn(x, grad) evaluates the objective at x, writes its gradient
/// into grad (pre-sized to x.size()) and returns the loss. observer(state,
/// loss) fires once per iteration before the position update, so
/// state.params is exactly the point the loss belongs to.
///
/// Terminates after i_max iterations or on the plateau rule; throws
/// numerical_error naming the iteration if loss or gradient turn non-finite.
template <class GradientFn, class Observer>
FireResult fire_minimize(GradientFn&& gradient_fn, VecX x_init, const FireConfig& cfg,
                         Observer&& observer) {
  cfg.validate();
  require(x_init.size() > 0, "fire_minimize: empty parameter vector");

  FireState st;
  st.params = std::move(x_init);
  st.velocity = VecX::Zero(st.params.size());
  st.dt = cfg.dt_init;
  st.alpha = cfg.alpha_start;

  VecX grad(st.params.size());
  VecX force(st.params.size());
  FireResult result;
  result.history.reserve(static_cast<std::size_t>(std::min<Index>(cfg.i_max, 1 << 20)));

  while (st.iteration < cfg.i_max) {
    const double loss = gradient_fn(static_cast<const VecX&>(st.params), grad);
    if (!std::isfinite(loss) || !grad.allFinite())
      throw numerical_error("fire_minimize: non-finite loss or gradient at iteration " +
                            std::to_string(st.iteration));
    result.history.push_back(loss);
    observer(static_cast<const FireState&>(st), loss);
    if (detail::plateau_reached(result.history, cfg.stop_window, cfg.stop_tol)) {
      result.stopped_by_plateau = true;
      break;
    }

    force = -grad;
    fire_step(st, force, cfg);
  }

  result.x = std::move(st.params);
  return result;
}

template <class GradientFn>
FireResult fire_minimize(GradientFn&& gradient_fn, VecX x_init, const FireConfig& cfg) {
  return fire_minimize(std::forward<GradientFn>(gradient_fn), std::move(x_init), cfg,
                       [](const FireState&, double) {});
}

}  // namespace uenn
