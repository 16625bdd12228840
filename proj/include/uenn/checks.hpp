#pragma once

#include <algorithm>
#include <cmath>

#include "uenn/gradients.hpp"
#include "uenn/network.hpp"
#include "uenn/random.hpp"
#include "uenn/types.hpp"

namespace uenn {

namespace detail {

template <class Scalar>
Mat<Scalar> gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Mat<Scalar> m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
        m(r, c) = Scalar(rng.gaussian(), rng.gaussian());
      } else {
        m(r, c) = rng.gaussian();
      }
    }
  return m;
}

}  // namespace detail

/// Haar-ish random element of U(n) (or O(n) for real Scalar): QR of a
/// Gaussian matrix with the R diagonal phase absorbed into Q so the result
/// does not depend on the factorization's sign conventions.
template <class Scalar>
Mat<Scalar> random_unitary(Index n, Rng& rng) {
  require(n >= 1, "random_unitary: need n >= 1");
  Mat<Scalar> a = detail::gaussian_matrix<Scalar>(n, n, rng);
  Eigen::HouseholderQR<Mat<Scalar>> qr(a);
  Mat<Scalar> q = qr.householderQ();
  Mat<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    const Scalar d = r(j, j);
    const auto mag = std::abs(d);
    if (mag > 0) q.col(j) *= d / Scalar(mag);
  }
  return q;
}

/// Random rotation in SO(n): orthogonal with determinant +1.
inline MatX random_rotation(Index n, Rng& rng) {
  MatX q = random_unitary<double>(n, rng);
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

/// Random network input: Gaussian vector rows, feature rows pinned to one.
template <class Scalar>
VectorBatch<Scalar> random_input(Index n, Index m, Index width, Rng& rng) {
  VectorBatch<Scalar> x;
  x.entries = detail::gaussian_matrix<Scalar>(n + m, width, rng);
  x.vec_dim = n;
  if (m > 0) x.entries.bottomRows(m).setOnes();
  return x;
}

/// Xavier weights plus Gaussian biases; xavier_network alone leaves biases
/// zero, which would leave the normalized-copy path untested.
template <class Scalar>
Network<Scalar> random_network(const NetworkConfig& cfg, Rng& rng, double bias_scale = 0.5) {
  Network<Scalar> net = Network<Scalar>::zeros(cfg);
  for (auto& layer : net.layers) {
    const double limit = std::sqrt(6.0) / std::sqrt(double(layer.W.rows() + layer.W.cols()));
    detail::fill_xavier(layer.W, limit, rng);
    layer.b = detail::gaussian_matrix<Scalar>(layer.b.rows(), layer.b.cols(), rng) *
              Scalar(RealOf<Scalar>(bias_scale));
  }
  return net;
}

/// Max over `unitaries` draws of ||f(Ux) - U f(x)|| / ||f(x)||, Frobenius
/// norms, with U acting on the rotating rows only. Each draw gets a fresh
/// random input.
template <class Scalar>
double equivariance_deviation(const Network<Scalar>& net, Index unitaries, Rng& rng) {
  net.validate();
  const Index n = net.config.n;
  const Index m = net.config.m;
  double worst = 0.0;
  for (Index t = 0; t < unitaries; ++t) {
    const Mat<Scalar> u = random_unitary<Scalar>(n, rng);
    VectorBatch<Scalar> x = random_input<Scalar>(n, m, net.config.widths.front(), rng);
    VectorBatch<Scalar> ux = x;
    ux.entries.topRows(n) = u * x.entries.topRows(n);

    Mat<Scalar> fx = network_apply(x, net).entries;
    Mat<Scalar> fux = network_apply(ux, net).entries;
    Mat<Scalar> ufx = fx;
    ufx.topRows(n) = u * fx.topRows(n);

    const double scale = std::max(fx.norm(), 1e-300);
    worst = std::max(worst, double((fux - ufx).norm()) / scale);
  }
  return worst;
}

/// Odd parity ||f(-x) + f(x)|| / ||f(x)|| for feature-free networks, where
/// -I is the unitary.
template <class Scalar>
double parity_deviation(const Network<Scalar>& net, Index trials, Rng& rng) {
  net.validate();
  require(net.config.m == 0, "parity_deviation: feature slots break the odd-parity identity");
  double worst = 0.0;
  for (Index t = 0; t < trials; ++t) {
    VectorBatch<Scalar> x = random_input<Scalar>(net.config.n, 0, net.config.widths.front(), rng);
    VectorBatch<Scalar> nx = x;
    nx.entries = -x.entries;
    Mat<Scalar> fx = network_apply(x, net).entries;
    Mat<Scalar> fnx = network_apply(nx, net).entries;
    const double scale = std::max(fx.norm(), 1e-300);
    worst = std::max(worst, double((fnx + fx).norm()) / scale);
  }
  return worst;
}

/// Backward pass against central finite differences on a random batch:
/// max absolute parameter-gradient difference over the largest analytic
/// gradient magnitude.
template <class Scalar>
double gradient_relative_error(const Network<Scalar>& net, Index samples, Rng& rng,
                               double step = 1e-6) {
  net.validate();
  std::vector<VectorBatch<Scalar>> xs, ts;
  for (Index s = 0; s < samples; ++s) {
    xs.push_back(random_input<Scalar>(net.config.n, net.config.m, net.config.widths.front(), rng));
    ts.push_back(random_input<Scalar>(net.config.n, net.config.m, net.config.widths.back(), rng));
  }
  const auto x = SampleBatch<Scalar>::from_samples(xs);
  const auto t = SampleBatch<Scalar>::from_samples(ts);

  const auto analytic = loss_and_gradients(net, x, t).grads;
  const auto fd = finite_difference_gradients(net, x, t, step);

  double scale = 0.0;
  for (const auto& g : analytic.dW) scale = std::max(scale, double(g.cwiseAbs().maxCoeff()));
  for (const auto& g : analytic.db) scale = std::max(scale, double(g.cwiseAbs().maxCoeff()));
  return max_gradient_difference(analytic, fd) / std::max(scale, 1e-300);
}

}  // namespace uenn
