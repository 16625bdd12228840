#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "uenn/fire.hpp"
#include "uenn/gradients.hpp"
#include "uenn/network.hpp"

namespace uenn {

struct TrainHistoryRow {
  Index iteration = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainConfig {
  /// History rows are recorded at iteration 0, every log_interval
  /// iterations after that, and once more for the returned parameters.
  Index log_interval = 1000;
  /// Called for each recorded history row; long runs hook progress
  /// reporting here. Does not affect the training result.
  std::function<void(const TrainHistoryRow&)> on_log;

  void validate() const { require(log_interval >= 1, "TrainConfig: need log_interval >= 1"); }
};

template <class Scalar>
struct TrainResult {
  Network<Scalar> net;
  std::vector<TrainHistoryRow> history;
  Index iterations = 0;
  bool stopped_by_plateau = false;

  double initial_train_loss() const { return history.front().train_loss; }
  double initial_val_loss() const { return history.front().val_loss; }
  double final_train_loss() const { return history.back().train_loss; }
  double final_val_loss() const { return history.back().val_loss; }
};

/// Full-batch training: every iteration evaluates the loss gradient over the
/// complete training batch and feeds it to the minimizer. Inputs are assumed
/// standardized already. `init` supplies the starting parameters (typically
/// xavier_network). Deterministic: same inputs, same result, bit for bit.
template <class Scalar>
TrainResult<Scalar> train(const Network<Scalar>& init, const SampleBatch<Scalar>& train_x,
                          const SampleBatch<Scalar>& train_t, const SampleBatch<Scalar>& val_x,
                          const SampleBatch<Scalar>& val_t, const FireConfig& fire_cfg,
                          const TrainConfig& train_cfg) {
  init.validate();
  fire_cfg.validate();
  train_cfg.validate();
  require(train_x.count > 0, "train: empty training batch");
  require(val_x.count > 0, "train: empty validation batch");
  require(train_x.count == train_t.count && val_x.count == val_t.count,
          "train: input/target sample count mismatch");
  require_shape(train_x.dim == init.config.dim(), "train: sample dimension", init.config.dim(),
                train_x.dim);
  require(train_x.stacked.allFinite() && train_t.stacked.allFinite() &&
              val_x.stacked.allFinite() && val_t.stacked.allFinite(),
          "train: non-finite entries in dataset");

  // Scratch reused across all iterations so the steady state allocates
  // nothing per step.
  Network<Scalar> work = init;
  ForwardCache<Scalar> cache, val_cache;
  Gradients<Scalar> grads;
  Mat<Scalar> wa, wb;

  auto gradient_fn = [&](const VecX& x, VecX& g) {
    unflatten_parameters(x, work);
    detail::forward_stacked(work, train_x.stacked, train_x.count, cache);
    const double loss = detail::backward_stacked(work, cache, train_t.stacked, grads, wa, wb);
    flatten_gradients_into(grads, g);
    return loss;
  };
  auto val_loss_at = [&](const VecX& x) {
    unflatten_parameters(x, work);
    detail::forward_stacked(work, val_x.stacked, val_x.count, val_cache);
    const double z = double(val_x.count) * double(val_x.dim) * double(val_cache.out.cols());
    return (val_cache.out - val_t.stacked).squaredNorm() / z;
  };

  TrainResult<Scalar> result;
  auto record = [&](Index iteration, double train_loss, double val_loss) {
    result.history.push_back({iteration, train_loss, val_loss});
    if (train_cfg.on_log) train_cfg.on_log(result.history.back());
  };
  auto observer = [&](const FireState& st, double loss) {
    if (st.iteration % train_cfg.log_interval == 0)
      record(st.iteration, loss, val_loss_at(st.params));
  };

  FireResult fr = fire_minimize(gradient_fn, flatten_parameters(init), fire_cfg, observer);

  result.iterations = fr.iterations();
  result.stopped_by_plateau = fr.stopped_by_plateau;
  const double final_val = val_loss_at(fr.x);
  VecX gdump(fr.x.size());
  const double final_train = gradient_fn(fr.x, gdump);
  record(result.iterations, final_train, final_val);
  unflatten_parameters(fr.x, work);
  result.net = std::move(work);
  return result;
}

}  // namespace uenn
