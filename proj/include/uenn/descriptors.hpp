#pragma once

#include <vector>

#include "uenn/types.hpp"
#include "uenn/vector_batch.hpp"

namespace uenn {

/// Radial hyperparameters, one (eta, r_s) pair per output feature alpha,
/// sharing a cutoff radius r_c.
struct DescriptorHyper {
  std::vector<double> eta;  // A^-2
  std::vector<double> r_s;  // A
  double r_c = 6.0;         // A

  Index size() const { return static_cast<Index>(eta.size()); }

  void validate() const {
    require(!eta.empty() && eta.size() == r_s.size(),
            "DescriptorHyper: need matching, non-empty eta and r_s lists");
    require(r_c > 0.0, "DescriptorHyper: cutoff radius must be positive");
    for (double e : eta) require(e > 0.0, "DescriptorHyper: eta must be positive");
    for (double r : r_s)
      require(r >= 0.0 && r < r_c, "DescriptorHyper: need 0 <= r_s < r_c");
  }

  /// eta in {0.5, 1, 2, 4} A^-2 crossed with r_s in {0, 1, 2, 3} A
  /// (eta-major order), r_c = 6 A. 16 features.
  static DescriptorHyper default_grid();
};

/// C^2 cutoff: (1 - (r/r_c)^2)^3 inside r_c, zero outside. Value and first
/// two derivatives vanish at r_c.
double cutoff(double r, double r_c);

/// Atom-centered scalar descriptors of atom i:
/// D_i^(alpha) = sum_{j != i} exp(-eta_a (r_ij - rs_a)^2) f_c(r_ij).
/// Permutation-invariant by construction and rotation-invariant.
VecX scalar_symmetry(Index i, const MatX& positions, const DescriptorHyper& hyper);

/// Vector form: each term of scalar_symmetry weighted by the unit direction
/// r_ij/r_ij with r_ij = r_j - r_i. Columns indexed by alpha. Rotations act
/// on the output exactly as on the positions.
MatX vector_symmetry(Index i, const MatX& positions, const DescriptorHyper& hyper);

/// The descriptor edge features as a dense graph:
/// e_ij^beta = exp(-eta_b (r_ij - rs_b)^2) f_c(r_ij) off the diagonal,
/// e_ii^beta = 0. One N x N matrix per beta.
std::vector<MatX> gaussian_edge_features(const MatX& positions, const DescriptorHyper& hyper);

/// One graph layer in vector form over nodes at `positions`:
/// v'_i,alpha = sigma( sum_{j != i,beta,delta} (u_ij/|u_ij|) e_ij^beta
/// v_j,delta w_beta,delta,alpha ), u_ij = u_j - u_i. Edge features must be
/// invariant under the group action for the layer to be equivariant.
/// Coincident nodes (|u_ij| below kNormEps for j != i) are rejected.
///
/// edge_features: B matrices of N x N; node_features: N x D scalars;
/// weights: B matrices of D x A. Returns one 3 x A matrix per node. With
/// Gaussian edges, a single unit node feature, Kronecker weights and the
/// identity activation this reduces bit-exactly to vector_symmetry.
std::vector<MatX> gnn_vector_layer(const MatX& positions, const std::vector<MatX>& edge_features,
                                   const MatX& node_features, const std::vector<MatX>& weights,
                                   Activation activation, double residue_a = 0.0);

}  // namespace uenn
