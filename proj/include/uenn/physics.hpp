#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "uenn/types.hpp"
#include "uenn/vector_batch.hpp"

namespace uenn {

/// Unit system: eV, Angstrom, atomic mass unit u, femtosecond.
/// One eV/(A*u) of specific force equals kAccelUnit A/fs^2 of acceleration;
/// equivalently 1 u*A^2/fs^2 = 1/kAccelUnit eV.
inline constexpr double kBoltzmann = 8.617333262e-5;  // eV/K
inline constexpr double kAccelUnit = 9.648533e-3;     // (A/fs^2) per (eV/(A*u))

inline constexpr double kArgonMass = 39.948;  // u

struct LJParams {
  double epsilon = 120.0 * kBoltzmann;  // eV; Argon well depth, eps/k_B = 120 K
  double r0 = 3.4;                      // A

  void validate() const {
    require(epsilon > 0.0 && r0 > 0.0, "LJParams: epsilon and r0 must be positive");
  }
};

/// Point particles: one row per atom. Momenta are u*A/fs.
struct AtomSystem {
  MatX positions;  // N x 3, A
  MatX momenta;    // N x 3, u*A/fs
  VecX masses;     // N, u

  Index atom_count() const { return positions.rows(); }

  void validate() const {
    require(positions.cols() == 3 && momenta.cols() == 3, "AtomSystem: need 3 columns");
    require(positions.rows() == momenta.rows() && positions.rows() == masses.size(),
            "AtomSystem: atom count mismatch between positions, momenta, masses");
    require(positions.allFinite() && momenta.allFinite() && masses.allFinite(),
            "AtomSystem: non-finite entries");
    require((masses.array() > 0.0).all(), "AtomSystem: masses must be positive");
  }
};

double lj_pair_energy(double r, const LJParams& p);

/// Sum of pair energies over i < j.
double lj_total_energy(const MatX& positions, const LJParams& p);

/// Analytic gradient forces, N x 3 eV/A. Pair magnitude
/// (24 eps/r)(2 (r0/r)^12 - (r0/r)^6) along the pair axis.
MatX lj_forces(const MatX& positions, const LJParams& p);

double kinetic_energy(const MatX& momenta, const VecX& masses);

/// Total energy: kinetic (unit-converted) plus Lennard-Jones potential.
double hamiltonian(const AtomSystem& s, const LJParams& p);

/// Columns r12, r13, r14, r23, r24, r34 with r_ij = r_j - r_i; exactly four
/// atoms. Output is 3 x 6, fully rotating (no feature slots).
VectorBatch<double> relative_positions(const MatX& positions);

/// Gaussian momenta rescaled so the kinetic energy equals exactly
/// (3/2) N k_B T. Per-component draws scale with sqrt(mass) so the velocity
/// distribution is mass-independent; center-of-mass drift is kept.
MatX init_velocities(double temperature, const VecX& masses, std::uint64_t seed);

using ForceFn = std::function<MatX(const MatX& positions)>;

struct VerletStep {
  AtomSystem state;
  MatX forces;  // at the new positions
};

/// One velocity-Verlet update from known forces at the current positions:
/// r += (p/m) dt + (F/m) dt^2 / 2 and p += (F + F') dt / 2 with F' evaluated
/// by one force_fn call at the new positions. step_index only labels error
/// messages.
VerletStep velocity_verlet_step(const AtomSystem& s, const MatX& forces, const ForceFn& force_fn,
                                double dt, Index step_index = 0);

/// Convenience form for a single step; evaluates the starting forces itself.
VerletStep velocity_verlet_step(const AtomSystem& s, const ForceFn& force_fn, double dt,
                                Index step_index = 0);

/// States at every step, initial state included (steps+1 entries). The
/// energy column is always the analytic Hamiltonian of the stored state, no
/// matter which force provider drives the motion, so runs under different
/// providers are compared on one scale.
struct Trajectory {
  std::vector<MatX> positions;
  std::vector<MatX> momenta;
  std::vector<double> energy;

  Index step_count() const { return static_cast<Index>(positions.size()) - 1; }
};

Trajectory simulate_trajectory(const AtomSystem& initial, const ForceFn& force_provider,
                               Index steps, double dt, const LJParams& energy_params);

enum class Split { train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

struct DataRecord {
  MatX positions;  // 4 x 3, A
  MatX forces;     // 4 x 3, eV/A
};

/// Generated Lennard-Jones configurations with analytic forces, split
/// 60/20/20 and carrying the training-split standardization scalars.
struct Dataset {
  std::vector<DataRecord> records;
  std::vector<Split> splits;  // parallel to records
  double input_std = 1.0;     // one scalar over all relative-position components
  double output_std = 1.0;    // one scalar over all force components
  double sigma = 3.0;
  double r_min = 2.8;
  std::uint64_t seed = 0;
  LJParams lj;

  Index count() const { return static_cast<Index>(records.size()); }
  Index count_of(Split s) const;
  std::vector<Index> indices_of(Split s) const;

  void validate() const;
};

/// Draws `count` 4-atom configurations, 12 coordinates i.i.d. Gaussian(0,
/// sigma) per record, rejecting and redrawing any record whose minimum
/// pairwise distance falls below r_min. Splits are assigned by a seeded
/// shuffle followed by contiguous 60/20/20 slicing. Standardization scalars
/// are the standard deviations of the training split's relative-position and
/// force components (one scalar each; applied as pure rescaling later).
Dataset generate_dataset(Index count, std::uint64_t seed, double sigma = 3.0, double r_min = 2.8,
                         const LJParams& p = {});

}  // namespace uenn
