#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "uenn/random.hpp"
#include "uenn/types.hpp"
#include "uenn/vector_batch.hpp"

namespace uenn {

/// Layer widths and activation schedule. widths = [M_0, ..., M_L]; layer k
/// maps M_k columns to M_{k+1} columns. All layers work on vectors of
/// dimension n + m (n rotating coordinates, m fixed feature slots).
struct NetworkConfig {
  Index n = 0;
  Index m = 0;
  std::vector<Index> widths;
  std::vector<Activation> activations;
  double residue_a = 0.01;

  Index depth() const { return static_cast<Index>(widths.size()) - 1; }
  Index dim() const { return n + m; }

  void validate() const {
    require(n >= 1, "NetworkConfig: vector dimension must be >= 1");
    require(m >= 0, "NetworkConfig: feature count must be >= 0");
    require(widths.size() >= 2, "NetworkConfig: need at least input and output widths");
    for (Index w : widths) require(w >= 1, "NetworkConfig: every width must be >= 1");
    require(activations.size() == widths.size() - 1,
            "NetworkConfig: need one activation per layer");
    require(residue_a >= 0.0, "NetworkConfig: residue must be >= 0");
  }

  /// Hidden layers softsign with residue, identity on the output layer.
  static NetworkConfig dense(Index n, Index m, std::vector<Index> widths, double residue_a = 0.01) {
    NetworkConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.widths = std::move(widths);
    cfg.residue_a = residue_a;
    cfg.activations.assign(cfg.widths.size() - 1, Activation::softsign_residue);
    if (!cfg.activations.empty()) cfg.activations.back() = Activation::identity;
    cfg.validate();
    return cfg;
  }
};

template <class Scalar>
struct LayerParams {
  Mat<Scalar> W;
  Mat<Scalar> b;
  Activation activation = Activation::identity;
  double residue_a = 0.0;
};

template <class Scalar>
struct Network {
  NetworkConfig config;
  std::vector<LayerParams<Scalar>> layers;

  static Network zeros(const NetworkConfig& cfg) {
    cfg.validate();
    Network net;
    net.config = cfg;
    net.layers.resize(cfg.depth());
    for (Index k = 0; k < cfg.depth(); ++k) {
      net.layers[k].W = Mat<Scalar>::Zero(cfg.widths[k], cfg.widths[k + 1]);
      net.layers[k].b = Mat<Scalar>::Zero(cfg.widths[k], cfg.widths[k + 1]);
      net.layers[k].activation = cfg.activations[k];
      net.layers[k].residue_a = cfg.residue_a;
    }
    return net;
  }

  void validate() const {
    config.validate();
    require(static_cast<Index>(layers.size()) == config.depth(),
            "Network: layer count does not match widths");
    for (Index k = 0; k < config.depth(); ++k) {
      const auto& l = layers[k];
      require(l.W.rows() == config.widths[k] && l.W.cols() == config.widths[k + 1],
              "Network: layer " + std::to_string(k) + " weight shape mismatch");
      require(l.b.rows() == l.W.rows() && l.b.cols() == l.W.cols(),
              "Network: layer " + std::to_string(k) + " bias shape mismatch");
      require(l.residue_a >= 0.0, "Network: residue must be >= 0");
    }
  }

  Index parameter_count() const {
    Index count = 0;
    for (const auto& l : layers) count += 2 * l.W.size();
    return count;
  }
};

namespace detail {
template <class Scalar>
void fill_xavier(Mat<Scalar>& w, double limit, Rng& rng) {
  for (Index r = 0; r < w.rows(); ++r)
    for (Index c = 0; c < w.cols(); ++c) {
      if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
        const double re = rng.uniform(-limit, limit);
        const double im = rng.uniform(-limit, limit);
        w(r, c) = Scalar(typename Scalar::value_type(re), typename Scalar::value_type(im));
      } else {
        w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    }
}
}  // namespace detail

/// Normalized Xavier initialization: weights uniform in +-sqrt(6)/sqrt(M_k+M_{k+1})
/// (real and imaginary parts drawn independently), biases zero. Entries are
/// drawn layer by layer, row-major, so a seed pins the full parameter set.
template <class Scalar>
Network<Scalar> xavier_network(const NetworkConfig& cfg, std::uint64_t seed) {
  Network<Scalar> net = Network<Scalar>::zeros(cfg);
  Rng rng(seed);
  for (auto& layer : net.layers) {
    const double limit = std::sqrt(6.0) / std::sqrt(double(layer.W.rows() + layer.W.cols()));
    detail::fill_xavier(layer.W, limit, rng);
  }
  return net;
}

namespace detail {
template <class Scalar>
void write_flat(const Mat<Scalar>& m, VecX& v, Index& pos) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
        v(pos++) = double(m(r, c).real());
        v(pos++) = double(m(r, c).imag());
      } else {
        v(pos++) = double(m(r, c));
      }
    }
}

template <class Scalar>
void read_flat(Mat<Scalar>& m, const VecX& v, Index& pos) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
        using Real = typename Scalar::value_type;
        const double re = v(pos++);
        const double im = v(pos++);
        m(r, c) = Scalar(Real(re), Real(im));
      } else {
        m(r, c) = static_cast<Scalar>(v(pos++));
      }
    }
}
}  // namespace detail

/// Length of the real parameter vector: every scalar entry of every W and b,
/// with complex entries contributing a (re, im) pair.
template <class Scalar>
Index flat_parameter_count(const Network<Scalar>& net) {
  return net.parameter_count() * (Eigen::NumTraits<Scalar>::IsComplex ? 2 : 1);
}

inline Index flat_parameter_count(const NetworkConfig& cfg, bool complex_field) {
  Index count = 0;
  for (Index k = 0; k < cfg.depth(); ++k) count += 2 * cfg.widths[k] * cfg.widths[k + 1];
  return count * (complex_field ? 2 : 1);
}

/// Parameters as one real vector: layer by layer, W before b, row-major
/// within each matrix, (re, im) adjacent for complex entries. The layout is
/// part of the checkpoint format, do not reorder.
template <class Scalar>
VecX flatten_parameters(const Network<Scalar>& net) {
  VecX v(flat_parameter_count(net));
  Index pos = 0;
  for (const auto& l : net.layers) {
    detail::write_flat(l.W, v, pos);
    detail::write_flat(l.b, v, pos);
  }
  return v;
}

/// Inverse of flatten_parameters; the network supplies the shapes.
template <class Scalar>
void unflatten_parameters(const VecX& v, Network<Scalar>& net) {
  require_shape(v.size() == flat_parameter_count(net), "unflatten_parameters: vector length",
                flat_parameter_count(net), v.size());
  Index pos = 0;
  for (auto& l : net.layers) {
    detail::read_flat(l.W, v, pos);
    detail::read_flat(l.b, v, pos);
  }
}

/// One layer: sigma(x W + e b) with e the column-normalized copy of x.
template <class Scalar>
VectorBatch<Scalar> layer_forward(const VectorBatch<Scalar>& x, const LayerParams<Scalar>& p) {
  require_shape(x.cols() == p.W.rows(), "layer_forward: input columns", p.W.rows(), x.cols());
  Mat<Scalar> e = detail::normalized_blocks(x.entries, x.rows(), x.vec_dim);
  Mat<Scalar> y = x.entries * p.W + e * p.b;
  detail::activate_blocks(y, y.rows(), p.activation, p.residue_a);
  return {std::move(y), x.vec_dim};
}

/// Everything the backward pass needs from a forward sweep over a stacked
/// batch: per-layer inputs [X_k | E_k], the stacked parameters [W_k; b_k],
/// pre-activations Y_k and the per-(sample, column) norms along the way.
template <class Scalar>
struct ForwardCache {
  Index dim = 0;      // rows per sample block
  Index vec_dim = 0;  // leading rows the group acts on
  Index count = 0;    // samples stacked vertically
  std::vector<Mat<Scalar>> xe;  // k = 0..L-1, (count*dim) x 2 M_k
  std::vector<Mat<Scalar>> P;   // k = 0..L-1, [W_k; b_k], 2 M_k x M_{k+1}
  std::vector<Mat<Scalar>> y;   // pre-activation Y_k, (count*dim) x M_{k+1}
  std::vector<MatX> xnorm;      // count x M_k vector-part norms of X_k
  std::vector<MatX> ynorm;      // count x M_{k+1} block norms of Y_k
  Mat<Scalar> out;              // X_L

  /// X_k as seen by layer k (the left half of [X_k | E_k]).
  auto x_at(Index k) const { return xe[k].leftCols(xe[k].cols() / 2); }
};

namespace detail {

/// Norms of the leading norm_rows of every (sample, column) block.
template <class Scalar>
void block_norms(const Eigen::Ref<const Mat<Scalar>>& x, Index dim, Index norm_rows, MatX& out) {
  const Index count = x.rows() / dim;
  out.resize(count, x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    for (Index s = 0; s < count; ++s)
      out(s, c) = x.col(c).segment(s * dim, norm_rows).norm();
}

/// Builds [X_k | E_k] and the vector-part norms of X_k in one pass. src is
/// the previous layer's pre-activation (or the network input); when
/// act_norm is non-null the softsign scale 1/(1+r)+a is applied on the fly
/// while copying, so X never exists unscaled in memory.
template <class Scalar>
void build_xe(const Mat<Scalar>& src, const MatX* act_norm, double a, Index dim, Index vec_dim,
              Mat<Scalar>& xe, MatX& xnorm) {
  const Index rows = src.rows();
  const Index cols = src.cols();
  const Index count = rows / dim;
  xe.resize(rows, 2 * cols);
  xnorm.resize(count, cols);
  using Real = RealOf<Scalar>;
  for (Index c = 0; c < cols; ++c) {
    const Scalar* u = src.col(c).data();
    Scalar* x = xe.col(c).data();
    Scalar* e = xe.col(cols + c).data();
    for (Index s = 0; s < count; ++s) {
      const Index top = s * dim;
      const Real f =
          act_norm ? Real(1.0 / (1.0 + (*act_norm)(s, c)) + a) : Real(1);
      Real sq = Real(0);
      for (Index i = top; i < top + vec_dim; ++i) {
        x[i] = u[i] * f;
        sq += Eigen::numext::abs2(x[i]);
      }
      for (Index i = top + vec_dim; i < top + dim; ++i) x[i] = u[i] * f;
      const Real r = std::sqrt(sq);
      xnorm(s, c) = double(r);
      if (r < kNormEps)
        for (Index i = top; i < top + vec_dim; ++i) e[i] = Scalar(0);
      else
        for (Index i = top; i < top + vec_dim; ++i) e[i] = x[i] / r;
      for (Index i = top + vec_dim; i < top + dim; ++i) e[i] = Scalar(1);
    }
  }
}

/// Softsign-with-residue scaling per block, norms already known.
template <class Scalar>
void activate_blocks_cached(Eigen::Ref<Mat<Scalar>> y, const MatX& ynorm, Index dim, double a) {
  const Index count = y.rows() / dim;
  for (Index c = 0; c < y.cols(); ++c)
    for (Index s = 0; s < count; ++s)
      y.col(c).segment(s * dim, dim) *= (1.0 / (1.0 + ynorm(s, c)) + a);
}

/// Forward sweep over `count` samples stacked vertically in x0.
/// Cache matrices are resized in place and keep their storage across calls.
template <class Scalar>
void forward_stacked(const Network<Scalar>& net, const Mat<Scalar>& x0, Index count,
                     ForwardCache<Scalar>& cache) {
  const auto& cfg = net.config;
  const Index dim = cfg.dim();
  const Index rows = x0.rows();
  require_shape(rows == count * dim, "network_forward: stacked rows", count * dim, rows);
  require_shape(x0.cols() == cfg.widths.front(), "network_forward: input columns",
                cfg.widths.front(), x0.cols());

  const Index depth = cfg.depth();
  cache.dim = dim;
  cache.vec_dim = cfg.n;
  cache.count = count;
  cache.xe.resize(depth);
  cache.P.resize(depth);
  cache.y.resize(depth);
  cache.xnorm.resize(depth);
  cache.ynorm.resize(depth);

  for (Index k = 0; k < depth; ++k) {
    const auto& layer = net.layers[k];
    const Index mk = layer.W.rows();
    const Index mk1 = layer.W.cols();

    // X_k = activation of the previous pre-activation (x0 for k = 0),
    // assembled together with E_k and the column norms in one sweep.
    const Mat<Scalar>& src = (k == 0) ? x0 : cache.y[k - 1];
    const bool scaled =
        k > 0 && net.layers[k - 1].activation == Activation::softsign_residue;
    build_xe<Scalar>(src, scaled ? &cache.ynorm[k - 1] : nullptr,
                     scaled ? net.layers[k - 1].residue_a : 0.0, dim, cfg.n, cache.xe[k],
                     cache.xnorm[k]);

    cache.P[k].resize(2 * mk, mk1);
    cache.P[k].topRows(mk) = layer.W;
    cache.P[k].bottomRows(mk) = layer.b;

    cache.y[k].resize(rows, mk1);
    cache.y[k].noalias() = cache.xe[k] * cache.P[k];
    block_norms<Scalar>(cache.y[k], dim, dim, cache.ynorm[k]);
  }

  cache.out = cache.y[depth - 1];
  if (net.layers[depth - 1].activation == Activation::softsign_residue)
    activate_blocks_cached<Scalar>(cache.out, cache.ynorm[depth - 1], dim,
                                   net.layers[depth - 1].residue_a);
}

}  // namespace detail

/// Full forward pass with cache. Forward evaluation never mutates the
/// network, so one Network may serve many concurrent calls, each call
/// owning its cache.
template <class Scalar>
std::pair<VectorBatch<Scalar>, ForwardCache<Scalar>> network_forward(
    const VectorBatch<Scalar>& x0, const Network<Scalar>& net) {
  const auto& cfg = net.config;
  require_shape(x0.rows() == cfg.dim(), "network_forward: vector dimension", cfg.dim(), x0.rows());
  require_shape(x0.vec_dim == cfg.n, "network_forward: rotating rows", cfg.n, x0.vec_dim);
  ForwardCache<Scalar> cache;
  detail::forward_stacked(net, x0.entries, 1, cache);
  return {VectorBatch<Scalar>(cache.out, cfg.n), std::move(cache)};
}

/// Forward pass when the intermediates are not needed.
template <class Scalar>
VectorBatch<Scalar> network_apply(const VectorBatch<Scalar>& x0, const Network<Scalar>& net) {
  return network_forward(x0, net).first;
}

}  // namespace uenn
