#pragma once

#include <string>
#include <utility>

#include "uenn/types.hpp"

namespace uenn {

enum class Activation { softsign_residue, identity };

inline std::string to_string(Activation a) {
  return a == Activation::softsign_residue ? "softsign_residue" : "identity";
}

/// A batch of M vectors in C^d (or R^d), stored as the columns of a d x M
/// matrix. The group acts on the leading vec_dim coordinates of each column;
/// any trailing rows are scalar feature slots that transformations leave
/// fixed. For a plain batch vec_dim == rows.
template <class Scalar>
struct VectorBatch {
  Mat<Scalar> entries;
  Index vec_dim = 0;

  VectorBatch() = default;
  explicit VectorBatch(Mat<Scalar> m) : entries(std::move(m)), vec_dim(entries.rows()) {}
  VectorBatch(Mat<Scalar> m, Index vec) : entries(std::move(m)), vec_dim(vec) {
    require(vec >= 0 && vec <= entries.rows(), "VectorBatch: vec_dim out of range");
  }

  Index rows() const { return entries.rows(); }
  Index cols() const { return entries.cols(); }
  Index feature_count() const { return entries.rows() - vec_dim; }

  bool all_finite() const { return entries.allFinite(); }
};

/// `count` same-shaped samples stacked vertically, one block of `dim` rows
/// per sample. This is the layout the batched forward/backward sweeps run
/// on: one GEMM per layer instead of one per sample.
template <class Scalar>
struct SampleBatch {
  Mat<Scalar> stacked;
  Index dim = 0;
  Index vec_dim = 0;
  Index count = 0;

  SampleBatch() = default;
  SampleBatch(Mat<Scalar> data, Index dim_, Index vec, Index count_)
      : stacked(std::move(data)), dim(dim_), vec_dim(vec), count(count_) {
    require(dim >= 1 && count >= 0, "SampleBatch: bad block shape");
    require(vec >= 0 && vec <= dim, "SampleBatch: vec_dim out of range");
    require_shape(stacked.rows() == dim * count, "SampleBatch: stacked rows", dim * count,
                  stacked.rows());
  }

  static SampleBatch from_samples(const std::vector<VectorBatch<Scalar>>& samples) {
    require(!samples.empty(), "SampleBatch: need at least one sample");
    const Index dim = samples.front().rows();
    const Index vec = samples.front().vec_dim;
    const Index cols = samples.front().cols();
    Mat<Scalar> data(dim * static_cast<Index>(samples.size()), cols);
    for (Index i = 0; i < static_cast<Index>(samples.size()); ++i) {
      const auto& s = samples[i];
      require_shape(s.rows() == dim && s.cols() == cols && s.vec_dim == vec,
                    "SampleBatch: sample " + std::to_string(i) + " shape", dim, s.rows());
      data.middleRows(i * dim, dim) = s.entries;
    }
    return {std::move(data), dim, vec, static_cast<Index>(samples.size())};
  }

  VectorBatch<Scalar> sample(Index i) const {
    require(i >= 0 && i < count, "SampleBatch: sample index out of range");
    return {stacked.middleRows(i * dim, dim), vec_dim};
  }

  Index cols() const { return stacked.cols(); }
};

namespace detail {

/// Column-wise unit vectors for a matrix holding `count` samples stacked
/// vertically in blocks of `dim` rows. Within each block the leading
/// `vec_dim` rows are divided by their Euclidean norm (zero norm gives a
/// zero vector) and the remaining feature rows are set to one.
template <class Scalar>
Mat<Scalar> normalized_blocks(const Mat<Scalar>& x, Index dim, Index vec_dim) {
  const Index count = x.rows() / dim;
  Mat<Scalar> e(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index s = 0; s < count; ++s) {
      const Index top = s * dim;
      const auto v = x.col(c).segment(top, vec_dim);
      const double r = v.norm();
      if (r < kNormEps)
        e.col(c).segment(top, vec_dim).setZero();
      else
        e.col(c).segment(top, vec_dim) = v / r;
      e.col(c).segment(top + vec_dim, dim - vec_dim).setOnes();
    }
  }
  return e;
}

/// In-place vector activation on every (sample, column) block of `dim` rows.
/// softsign_residue maps u -> u/(1+|u|) + a*u using the norm of the whole
/// block; identity leaves y untouched.
template <class Scalar>
void activate_blocks(Mat<Scalar>& y, Index dim, Activation kind, double a) {
  if (kind == Activation::identity) return;
  const Index count = y.rows() / dim;
  for (Index c = 0; c < y.cols(); ++c) {
    for (Index s = 0; s < count; ++s) {
      auto u = y.col(c).segment(s * dim, dim);
      const double r = u.norm();
      u *= (1.0 / (1.0 + r) + a);
    }
  }
}

}  // namespace detail

/// e_k: each column divided by its norm, feature slots set to one. Columns
/// with norm below kNormEps map to the zero vector.
template <class Scalar>
VectorBatch<Scalar> normalize_columns(const VectorBatch<Scalar>& x) {
  return {detail::normalized_blocks(x.entries, x.rows(), x.vec_dim), x.vec_dim};
}

template <class Scalar>
VectorBatch<Scalar> apply_activation(const VectorBatch<Scalar>& y, Activation kind, double a) {
  VectorBatch<Scalar> out = y;
  detail::activate_blocks(out.entries, out.rows(), kind, a);
  return out;
}

/// Appends m scalar features per column: column alpha becomes
/// (x^(alpha), h^(alpha)) with the group acting only on the original rows.
/// h must provide one row per feature and one column per vector element.
template <class Scalar>
VectorBatch<Scalar> augment_features(const VectorBatch<Scalar>& x, const MatX& h) {
  require(x.vec_dim == x.rows(), "augment_features: batch already has feature slots");
  if (h.rows() == 0) return x;
  require_shape(h.cols() == x.cols(), "augment_features: feature columns", x.cols(), h.cols());
  Mat<Scalar> m(x.rows() + h.rows(), x.cols());
  m.topRows(x.rows()) = x.entries;
  m.bottomRows(h.rows()) = h.template cast<Scalar>();
  return {std::move(m), x.rows()};
}

}  // namespace uenn
