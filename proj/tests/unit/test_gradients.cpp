#include <complex>

#include "doctest.h"
#include "uenn/checks.hpp"
#include "uenn/gradients.hpp"

using namespace uenn;
using Cplx = std::complex<double>;

namespace {

template <class Scalar>
void check_against_finite_differences(const NetworkConfig& cfg, std::uint64_t seed,
                                      Index samples, double tol) {
  Rng rng(seed);
  auto net = random_network<Scalar>(cfg, rng);
  CHECK(gradient_relative_error(net, samples, rng) < tol);
}

}  // namespace

TEST_CASE("loss is the normalized squared error") {
  NetworkConfig cfg = NetworkConfig::dense(2, 0, {1, 1});
  auto net = Network<double>::zeros(cfg);  // output is identically zero
  MatX t(2, 1);
  t << 3.0, 4.0;
  std::vector<VectorBatch<double>> xs = {VectorBatch<double>(MatX::Ones(2, 1))};
  std::vector<VectorBatch<double>> ts = {VectorBatch<double>(t)};
  const double loss = network_loss(net, SampleBatch<double>::from_samples(xs),
                                   SampleBatch<double>::from_samples(ts));
  // |diff|^2 = 25 over N*dim*M = 1*2*1 entries
  CHECK(loss == doctest::Approx(12.5).epsilon(1e-15));
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
  NetworkConfig cfg = NetworkConfig::dense(2, 0, {2, 3, 1});
  Rng rng(3);
  auto net = random_network<double>(cfg, rng);
  std::vector<VectorBatch<double>> xs, ts;
  for (int i = 0; i < 3; ++i) {
    xs.push_back(random_input<double>(2, 0, 2, rng));
    ts.push_back(random_input<double>(2, 0, 1, rng));
  }
  auto batch_grad =
      loss_and_gradients(net, SampleBatch<double>::from_samples(xs),
                         SampleBatch<double>::from_samples(ts));

  Gradients<double> mean = Gradients<double>::zeros_like(net);
  for (int i = 0; i < 3; ++i) {
    auto one = loss_and_gradients(net, xs[size_t(i)], ts[size_t(i)]);
    for (size_t k = 0; k < mean.dW.size(); ++k) {
      mean.dW[k] += one.grads.dW[k] / 3.0;
      mean.db[k] += one.grads.db[k] / 3.0;
    }
  }
  CHECK(max_gradient_difference(batch_grad.grads, mean) < 1e-14);
}

TEST_CASE("real gradients match finite differences") {
  check_against_finite_differences<double>(NetworkConfig::dense(2, 0, {3, 4, 2}), 101, 2, 1e-7);
  check_against_finite_differences<double>(NetworkConfig::dense(3, 2, {2, 5, 3}), 102, 3, 1e-7);
  check_against_finite_differences<double>(NetworkConfig::dense(4, 0, {1, 1}), 103, 1, 1e-7);
}

TEST_CASE("complex gradients match finite differences") {
  check_against_finite_differences<Cplx>(NetworkConfig::dense(2, 0, {3, 4, 2}), 201, 2, 1e-7);
  check_against_finite_differences<Cplx>(NetworkConfig::dense(3, 2, {2, 4, 3}), 202, 2, 1e-7);
}

TEST_CASE("gradients survive a zero input column") {
  NetworkConfig cfg = NetworkConfig::dense(2, 0, {2, 3, 2});
  Rng rng(7);
  auto net = random_network<double>(cfg, rng);
  auto x = random_input<double>(2, 0, 2, rng);
  x.entries.col(0).setZero();  // normalization branch must treat this as zero
  auto t = random_input<double>(2, 0, 2, rng);

  std::vector<VectorBatch<double>> xs = {x}, ts = {t};
  auto bx = SampleBatch<double>::from_samples(xs);
  auto bt = SampleBatch<double>::from_samples(ts);
  auto analytic = loss_and_gradients(net, bx, bt).grads;
  auto fd = finite_difference_gradients(net, bx, bt);
  CHECK(max_gradient_difference(analytic, fd) < 1e-8);
  CHECK(analytic.all_finite());
}

TEST_CASE("identity-only networks have exact linear gradients") {
  NetworkConfig cfg = NetworkConfig::dense(2, 0, {1, 1});
  auto net = Network<double>::zeros(cfg);
  net.layers[0].W(0, 0) = 1.0;
  // L = |x - t|^2 / 2 with x = (1,0): dL/dW = x^T (2/Z) (x W - t)
  MatX x(2, 1), t(2, 1);
  x << 1.0, 0.0;
  t << 0.0, 0.0;
  auto lg = loss_and_gradients(net, VectorBatch<double>(x), VectorBatch<double>(t));
  CHECK(lg.loss == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lg.grads.dW[0](0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  // e = x here, so the bias gradient matches the weight gradient
  CHECK(lg.grads.db[0](0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gradient flattening follows the parameter layout") {
  NetworkConfig cfg = NetworkConfig::dense(2, 0, {2, 2});
  auto net = Network<double>::zeros(cfg);
  auto g = Gradients<double>::zeros_like(net);
  g.dW[0](0, 1) = 3.5;
  g.db[0](1, 0) = -2.0;
  VecX flat = flatten_gradients(g);
  CHECK(flat.size() == flat_parameter_count(net));
  CHECK(flat(1) == 3.5);   // W row-major: (0,1) is the second entry
  CHECK(flat(6) == -2.0);  // b starts at 4, (1,0) is its third entry
}
