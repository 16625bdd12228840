#include "uenn/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uenn {

DescriptorHyper DescriptorHyper::default_grid() {
  DescriptorHyper h;
  for (double e : {0.5, 1.0, 2.0, 4.0})
    for (double rs : {0.0, 1.0, 2.0, 3.0}) {
      h.eta.push_back(e);
      h.r_s.push_back(rs);
    }
  h.r_c = 6.0;
  return h;
}

double cutoff(double r, double r_c) {
  require(r >= 0.0, "cutoff: distance must be >= 0");
  require(r_c > 0.0, "cutoff: cutoff radius must be positive");
  if (r >= r_c) return 0.0;
  const double t = 1.0 - (r / r_c) * (r / r_c);
  return t * t * t;
}

namespace {

/// Shared per-pair radial factor. scalar_symmetry, vector_symmetry and
/// gaussian_edge_features all go through this one expression so the GNN
/// special case reproduces vector_symmetry bit for bit.
double radial_term(double r, double eta, double rs, double rc) {
  return std::exp(-eta * (r - rs) * (r - rs)) * cutoff(r, rc);
}

void check_atom(Index i, const MatX& positions, const DescriptorHyper& hyper) {
  hyper.validate();
  require(positions.cols() == 3, "descriptors: positions must be N x 3");
  require(positions.allFinite(), "descriptors: positions must be finite");
  require(i >= 0 && i < positions.rows(), "descriptors: atom index out of range");
}

struct Neighbor {
  Index j = 0;
  double r = 0.0;
  Eigen::Vector3d dir;
};

/// Separation vector and distance of a pair. Every descriptor variant reads
/// pair geometry through this one function (kept out of line) so they agree
/// bit for bit; inlined copies could round the norm differently.
__attribute__((noinline)) std::pair<Eigen::Vector3d, double> separation(const MatX& positions,
                                                                        Index i, Index j) {
  const Eigen::Vector3d u = (positions.row(j) - positions.row(i)).transpose();
  return {u, u.norm()};
}

/// Neighbors of atom i sorted by (distance, direction). The key depends only
/// on geometry, never on atom labels, so the summation order below (and with
/// it every output bit) survives any relabeling of the neighbors.
std::vector<Neighbor> ordered_neighbors(Index i, const MatX& positions, const char* who) {
  std::vector<Neighbor> out;
  out.reserve(static_cast<std::size_t>(positions.rows()) - 1);
  for (Index j = 0; j < positions.rows(); ++j) {
    if (j == i) continue;
    Neighbor nb;
    nb.j = j;
    const auto [u, r] = separation(positions, i, j);
    nb.r = r;
    require(nb.r >= kNormEps, std::string(who) + ": atoms " + std::to_string(i) + " and " +
                                  std::to_string(j) + " coincide");
    nb.dir = u / nb.r;
    out.push_back(nb);
  }
  std::stable_sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.r != b.r) return a.r < b.r;
    for (int c = 0; c < 3; ++c)
      if (a.dir[c] != b.dir[c]) return a.dir[c] < b.dir[c];
    return false;
  });
  return out;
}

}  // namespace

VecX scalar_symmetry(Index i, const MatX& positions, const DescriptorHyper& hyper) {
  check_atom(i, positions, hyper);
  VecX d = VecX::Zero(hyper.size());
  for (const Neighbor& nb : ordered_neighbors(i, positions, "scalar_symmetry"))
    for (Index a = 0; a < hyper.size(); ++a)
      d(a) += radial_term(nb.r, hyper.eta[a], hyper.r_s[a], hyper.r_c);
  return d;
}

MatX vector_symmetry(Index i, const MatX& positions, const DescriptorHyper& hyper) {
  check_atom(i, positions, hyper);
  MatX d = MatX::Zero(3, hyper.size());
  for (const Neighbor& nb : ordered_neighbors(i, positions, "vector_symmetry"))
    for (Index a = 0; a < hyper.size(); ++a) {
      const double c = radial_term(nb.r, hyper.eta[a], hyper.r_s[a], hyper.r_c);
      d.col(a) += nb.dir * c;
    }
  return d;
}

std::vector<MatX> gaussian_edge_features(const MatX& positions, const DescriptorHyper& hyper) {
  hyper.validate();
  require(positions.cols() == 3, "gaussian_edge_features: positions must be N x 3");
  require(positions.allFinite(), "gaussian_edge_features: positions must be finite");
  const Index n = positions.rows();
  std::vector<MatX> e(static_cast<std::size_t>(hyper.size()), MatX::Zero(n, n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double r = separation(positions, i, j).second;
      require(r >= kNormEps, "gaussian_edge_features: atoms " + std::to_string(i) + " and " +
                                 std::to_string(j) + " coincide");
      for (Index b = 0; b < hyper.size(); ++b)
        e[static_cast<std::size_t>(b)](i, j) = radial_term(r, hyper.eta[b], hyper.r_s[b], hyper.r_c);
    }
  return e;
}

std::vector<MatX> gnn_vector_layer(const MatX& positions, const std::vector<MatX>& edge_features,
                                   const MatX& node_features, const std::vector<MatX>& weights,
                                   Activation activation, double residue_a) {
  require(positions.cols() == 3, "gnn_vector_layer: positions must be N x 3");
  require(positions.allFinite(), "gnn_vector_layer: positions must be finite");
  const Index n = positions.rows();
  const Index n_edge = static_cast<Index>(edge_features.size());
  require(n_edge >= 1 && edge_features.size() == weights.size(),
          "gnn_vector_layer: need one weight matrix per edge feature");
  for (const auto& e : edge_features)
    require_shape(e.rows() == n && e.cols() == n, "gnn_vector_layer: edge feature shape", n,
                  e.rows());
  require_shape(node_features.rows() == n, "gnn_vector_layer: node feature rows", n,
                node_features.rows());
  const Index n_delta = node_features.cols();
  const Index n_alpha = weights.front().cols();
  for (const auto& w : weights)
    require(w.rows() == n_delta && w.cols() == n_alpha,
            "gnn_vector_layer: weight tensor shape mismatch");
  require(residue_a >= 0.0, "gnn_vector_layer: residue must be >= 0");

  std::vector<MatX> out(static_cast<std::size_t>(n), MatX::Zero(3, n_alpha));
  for (Index i = 0; i < n; ++i) {
    for (const Neighbor& nb : ordered_neighbors(i, positions, "gnn_vector_layer")) {
      for (Index a = 0; a < n_alpha; ++a) {
        double c = 0.0;
        for (Index b = 0; b < n_edge; ++b)
          for (Index d = 0; d < n_delta; ++d)
            c += edge_features[static_cast<std::size_t>(b)](i, nb.j) * node_features(nb.j, d) *
                 weights[static_cast<std::size_t>(b)](d, a);
        out[static_cast<std::size_t>(i)].col(a) += nb.dir * c;
      }
    }
    detail::activate_blocks(out[static_cast<std::size_t>(i)], 3, activation, residue_a);
  }
  return out;
}

}  // namespace uenn
