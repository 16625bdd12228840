#pragma once

#include <utility>
#include <vector>

#include "uenn/network.hpp"
#include "uenn/types.hpp"
#include "uenn/vector_batch.hpp"

namespace uenn {

/// Loss gradients with respect to every layer's parameters, same shapes as
/// the network. For complex scalars entry (r, c) holds
/// dL/dRe W(r,c) + i dL/dIm W(r,c).
template <class Scalar>
struct Gradients {
  std::vector<Mat<Scalar>> dW;
  std::vector<Mat<Scalar>> db;

  static Gradients zeros_like(const Network<Scalar>& net) {
    Gradients g;
    g.dW.reserve(net.layers.size());
    g.db.reserve(net.layers.size());
    for (const auto& l : net.layers) {
      g.dW.push_back(Mat<Scalar>::Zero(l.W.rows(), l.W.cols()));
      g.db.push_back(Mat<Scalar>::Zero(l.b.rows(), l.b.cols()));
    }
    return g;
  }

  bool all_finite() const {
    for (const auto& m : dW)
      if (!m.allFinite()) return false;
    for (const auto& m : db)
      if (!m.allFinite()) return false;
    return true;
  }
};

/// Mean squared deviation per component: L = sum |out - target|^2 / Z with
/// Z = samples * rows * cols. A complex entry counts as one component and
/// contributes its squared modulus.
template <class Scalar>
double loss_mse(const SampleBatch<Scalar>& out, const SampleBatch<Scalar>& target) {
  require_shape(out.stacked.rows() == target.stacked.rows() &&
                    out.stacked.cols() == target.stacked.cols(),
                "loss_mse: target rows", out.stacked.rows(), target.stacked.rows());
  const double z = double(out.count) * double(out.dim) * double(out.cols());
  return (out.stacked - target.stacked).squaredNorm() / z;
}

template <class Scalar>
double loss_mse(const VectorBatch<Scalar>& out, const VectorBatch<Scalar>& target) {
  require_shape(out.rows() == target.rows() && out.cols() == target.cols(),
                "loss_mse: target rows", out.rows(), target.rows());
  const double z = double(out.rows()) * double(out.cols());
  return (out.entries - target.entries).squaredNorm() / z;
}

namespace detail {

/// Pulls the loss gradient backward through the softsign activation of one
/// layer, in place. G arrives as dL/d sigma(Y) and leaves as dL/dY. u is the
/// cached pre-activation, r its block norms.
template <class Scalar>
void softsign_backward(Eigen::Ref<Mat<Scalar>> g, const Mat<Scalar>& u, const MatX& r, Index dim,
                       double a) {
  const Index count = g.rows() / dim;
  for (Index c = 0; c < g.cols(); ++c) {
    for (Index s = 0; s < count; ++s) {
      auto gb = g.col(c).segment(s * dim, dim);
      const double rn = r(s, c);
      if (rn < kNormEps) {
        gb *= (1.0 + a);
        continue;
      }
      const auto ub = u.col(c).segment(s * dim, dim);
      const double q = Eigen::numext::real(gb.dot(ub));
      gb *= (1.0 / (1.0 + rn) + a);
      gb -= (q / (rn * (1.0 + rn) * (1.0 + rn))) * ub;
    }
  }
}

/// Adds the e_k chain to the direct input gradient: columns with vector-part
/// norm below kNormEps get no contribution (e is pinned to zero there).
/// gx accumulates dL/dX, h is dL/dE, x the cached layer input.
template <class Scalar>
void add_normalization_backward(Eigen::Ref<Mat<Scalar>> gx, const Eigen::Ref<const Mat<Scalar>>& h,
                                const Eigen::Ref<const Mat<Scalar>>& x, const MatX& xnorm,
                                Index dim, Index vec_dim) {
  const Index count = gx.rows() / dim;
  for (Index c = 0; c < gx.cols(); ++c) {
    for (Index s = 0; s < count; ++s) {
      const double r = xnorm(s, c);
      if (r < kNormEps) continue;
      const Index top = s * dim;
      const auto hv = h.col(c).segment(top, vec_dim);
      const auto xv = x.col(c).segment(top, vec_dim);
      const double q = Eigen::numext::real(hv.dot(xv));
      gx.col(c).segment(top, vec_dim) += hv / r - (q / (r * r * r)) * xv;
    }
  }
}

/// Backward sweep over a cached forward pass. Returns the loss and fills
/// `grads` (resized to match the network). Work buffers a/b alternate as the
/// holder of the running gradient so the per-layer GEMM never aliases; they
/// are grown once to the widest layer and then reused via views, which keeps
/// the steady state free of large allocations.
template <class Scalar>
double backward_stacked(const Network<Scalar>& net, const ForwardCache<Scalar>& cache,
                        const Mat<Scalar>& target, Gradients<Scalar>& grads, Mat<Scalar>& a,
                        Mat<Scalar>& b) {
  const Index depth = net.config.depth();
  const Index rows = cache.out.rows();
  require_shape(target.rows() == rows && target.cols() == cache.out.cols(),
                "backward: target rows", rows, target.rows());
  grads.dW.resize(depth);
  grads.db.resize(depth);

  Index max_cols = cache.out.cols();
  for (Index k = 1; k < depth; ++k) max_cols = std::max(max_cols, 2 * net.layers[k].W.rows());
  if (a.rows() != rows || a.cols() < max_cols) a.resize(rows, max_cols);
  if (b.rows() != rows || b.cols() < max_cols) b.resize(rows, max_cols);

  const double z = double(cache.count) * double(cache.dim) * double(cache.out.cols());
  Mat<Scalar>* cur = &a;
  Mat<Scalar>* next = &b;
  {
    auto g0 = cur->leftCols(cache.out.cols());
    g0 = cache.out - target;
  }
  const double loss = cur->leftCols(cache.out.cols()).squaredNorm() / z;
  cur->leftCols(cache.out.cols()) *= 2.0 / z;

  for (Index k = depth - 1; k >= 0; --k) {
    const auto& layer = net.layers[k];
    const Index mk = layer.W.rows();
    auto g = cur->leftCols(layer.W.cols());

    if (layer.activation == Activation::softsign_residue)
      softsign_backward<Scalar>(g, cache.y[k], cache.ynorm[k], cache.dim, layer.residue_a);

    grads.dW[k].noalias() = cache.xe[k].leftCols(mk).adjoint() * g;
    grads.db[k].noalias() = cache.xe[k].rightCols(mk).adjoint() * g;

    if (k == 0) break;
    auto t = next->leftCols(2 * mk);
    t.noalias() = g * cache.P[k].adjoint();
    add_normalization_backward<Scalar>(t.leftCols(mk), t.rightCols(mk), cache.xe[k].leftCols(mk),
                                       cache.xnorm[k], cache.dim, cache.vec_dim);
    std::swap(cur, next);
  }
  return loss;
}

}  // namespace detail

template <class Scalar>
struct LossGrad {
  double loss = 0.0;
  Gradients<Scalar> grads;
};

/// Loss and analytic parameter gradients over a stacked batch, one forward
/// and one backward sweep.
template <class Scalar>
LossGrad<Scalar> loss_and_gradients(const Network<Scalar>& net, const SampleBatch<Scalar>& x0,
                                    const SampleBatch<Scalar>& target) {
  require_shape(x0.dim == net.config.dim(), "loss_and_gradients: vector dimension",
                net.config.dim(), x0.dim);
  require_shape(x0.vec_dim == net.config.n, "loss_and_gradients: rotating rows", net.config.n,
                x0.vec_dim);
  require(x0.count == target.count && x0.dim == target.dim,
          "loss_and_gradients: input/target sample mismatch");
  ForwardCache<Scalar> cache;
  detail::forward_stacked(net, x0.stacked, x0.count, cache);
  LossGrad<Scalar> r;
  Mat<Scalar> wa, wb;
  r.loss = detail::backward_stacked(net, cache, target.stacked, r.grads, wa, wb);
  return r;
}

template <class Scalar>
LossGrad<Scalar> loss_and_gradients(const Network<Scalar>& net, const VectorBatch<Scalar>& x0,
                                    const VectorBatch<Scalar>& target) {
  SampleBatch<Scalar> xs(x0.entries, x0.rows(), x0.vec_dim, 1);
  SampleBatch<Scalar> ts(target.entries, target.rows(), target.vec_dim, 1);
  return loss_and_gradients(net, xs, ts);
}

/// Loss without gradients (forward only).
template <class Scalar>
double network_loss(const Network<Scalar>& net, const SampleBatch<Scalar>& x0,
                    const SampleBatch<Scalar>& target) {
  ForwardCache<Scalar> cache;
  detail::forward_stacked(net, x0.stacked, x0.count, cache);
  const double z = double(x0.count) * double(x0.dim) * double(cache.out.cols());
  return (cache.out - target.stacked).squaredNorm() / z;
}

/// Central finite differences on the loss, parameter by parameter. For
/// complex parameters the real and imaginary parts are perturbed
/// independently and recombined as dL/dRe + i dL/dIm. Oracle for the
/// analytic backward pass; cost scales with the parameter count.
template <class Scalar>
Gradients<Scalar> finite_difference_gradients(const Network<Scalar>& net,
                                              const SampleBatch<Scalar>& x0,
                                              const SampleBatch<Scalar>& target,
                                              double step = 1e-6) {
  Network<Scalar> work = net;
  Gradients<Scalar> g = Gradients<Scalar>::zeros_like(net);

  auto probe = [&](Scalar& w, Scalar delta) {
    const Scalar saved = w;
    w = saved + delta;
    const double up = network_loss(work, x0, target);
    w = saved - delta;
    const double down = network_loss(work, x0, target);
    w = saved;
    return (up - down) / (2.0 * step);
  };
  auto fd_entry = [&](Scalar& w) -> Scalar {
    if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
      using Real = typename Scalar::value_type;
      const double dre = probe(w, Scalar(Real(step), Real(0)));
      const double dim_ = probe(w, Scalar(Real(0), Real(step)));
      return Scalar(Real(dre), Real(dim_));
    } else {
      return static_cast<Scalar>(probe(w, static_cast<Scalar>(step)));
    }
  };

  for (std::size_t k = 0; k < work.layers.size(); ++k) {
    auto& l = work.layers[k];
    for (Index r = 0; r < l.W.rows(); ++r)
      for (Index c = 0; c < l.W.cols(); ++c) g.dW[k](r, c) = fd_entry(l.W(r, c));
    for (Index r = 0; r < l.b.rows(); ++r)
      for (Index c = 0; c < l.b.cols(); ++c) g.db[k](r, c) = fd_entry(l.b(r, c));
  }
  return g;
}

/// Gradients in the flatten_parameters layout, written into a pre-sized
/// vector. Because complex entries store dL/dRe + i dL/dIm, the result is
/// exactly the real gradient of the loss with respect to the flat parameter
/// vector.
template <class Scalar>
void flatten_gradients_into(const Gradients<Scalar>& grads, VecX& v) {
  Index total = 0;
  for (const auto& m : grads.dW) total += m.size();
  for (const auto& m : grads.db) total += m.size();
  total *= Eigen::NumTraits<Scalar>::IsComplex ? 2 : 1;
  require_shape(v.size() == total, "flatten_gradients_into: vector length", total, v.size());
  Index pos = 0;
  for (std::size_t k = 0; k < grads.dW.size(); ++k) {
    detail::write_flat(grads.dW[k], v, pos);
    detail::write_flat(grads.db[k], v, pos);
  }
}

template <class Scalar>
VecX flatten_gradients(const Gradients<Scalar>& grads) {
  Index total = 0;
  for (const auto& m : grads.dW) total += m.size();
  for (const auto& m : grads.db) total += m.size();
  VecX v(total * (Eigen::NumTraits<Scalar>::IsComplex ? 2 : 1));
  flatten_gradients_into(grads, v);
  return v;
}

/// Largest absolute component difference between two gradient sets,
/// real and imaginary parts compared separately.
template <class Scalar>
double max_gradient_difference(const Gradients<Scalar>& a, const Gradients<Scalar>& b) {
  require(a.dW.size() == b.dW.size(), "max_gradient_difference: layer count mismatch");
  double worst = 0.0;
  auto scan = [&](const Mat<Scalar>& x, const Mat<Scalar>& y) {
    require_shape(x.rows() == y.rows() && x.cols() == y.cols(),
                  "max_gradient_difference: shape", x.rows(), y.rows());
    for (Index r = 0; r < x.rows(); ++r)
      for (Index c = 0; c < x.cols(); ++c) {
        const Scalar d = x(r, c) - y(r, c);
        if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
          worst = std::max(worst, std::abs(double(d.real())));
          worst = std::max(worst, std::abs(double(d.imag())));
        } else {
          worst = std::max(worst, std::abs(double(d)));
        }
      }
  };
  for (std::size_t k = 0; k < a.dW.size(); ++k) {
    scan(a.dW[k], b.dW[k]);
    scan(a.db[k], b.db[k]);
  }
  return worst;
}

}  // namespace uenn
