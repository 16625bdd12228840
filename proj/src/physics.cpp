#include "uenn/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uenn/random.hpp"

namespace uenn {

double lj_pair_energy(double r, const LJParams& p) {
  p.validate();
  require(r > 0.0, "lj_pair_energy: separation must be positive");
  const double s2 = (p.r0 / r) * (p.r0 / r);
  const double s6 = s2 * s2 * s2;
  return 4.0 * p.epsilon * (s6 * s6 - s6);
}

double lj_total_energy(const MatX& positions, const LJParams& p) {
  p.validate();
  require(positions.cols() == 3, "lj_total_energy: positions must be N x 3");
  const Index n = positions.rows();
  require(n >= 2, "lj_total_energy: need at least two atoms");
  double u = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double r = (positions.row(j) - positions.row(i)).norm();
      require(r > 0.0, "lj_total_energy: atoms " + std::to_string(i) + " and " +
                           std::to_string(j) + " coincide");
      u += lj_pair_energy(r, p);
    }
  return u;
}

MatX lj_forces(const MatX& positions, const LJParams& p) {
  p.validate();
  require(positions.cols() == 3, "lj_forces: positions must be N x 3");
  const Index n = positions.rows();
  require(n >= 2, "lj_forces: need at least two atoms");
  MatX f = MatX::Zero(n, 3);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const Eigen::RowVector3d d = positions.row(j) - positions.row(i);
      const double r = d.norm();
      require(r > 0.0,
              "lj_forces: atoms " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      const double s2 = (p.r0 / r) * (p.r0 / r);
      const double s6 = s2 * s2 * s2;
      // magnitude along d/r, positive = repulsive (pushes j away from i)
      const double mag = (24.0 * p.epsilon / r) * (2.0 * s6 * s6 - s6);
      const Eigen::RowVector3d fj = (mag / r) * d;
      f.row(j) += fj;
      f.row(i) -= fj;
    }
  return f;
}

double kinetic_energy(const MatX& momenta, const VecX& masses) {
  require(momenta.cols() == 3 && momenta.rows() == masses.size(),
          "kinetic_energy: momenta must be N x 3 with one mass per atom");
  double ke = 0.0;  // u*A^2/fs^2 until the final conversion
  for (Index i = 0; i < momenta.rows(); ++i)
    ke += momenta.row(i).squaredNorm() / (2.0 * masses(i));
  return ke / kAccelUnit;
}

double hamiltonian(const AtomSystem& s, const LJParams& p) {
  s.validate();
  return kinetic_energy(s.momenta, s.masses) + lj_total_energy(s.positions, p);
}

VectorBatch<double> relative_positions(const MatX& positions) {
  require_shape(positions.rows() == 4, "relative_positions: atom count", 4, positions.rows());
  require(positions.cols() == 3, "relative_positions: positions must be N x 3");
  MatX rel(3, 6);
  Index col = 0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = i + 1; j < 4; ++j)
      rel.col(col++) = (positions.row(j) - positions.row(i)).transpose();
  return VectorBatch<double>(std::move(rel));
}

MatX init_velocities(double temperature, const VecX& masses, std::uint64_t seed) {
  require(temperature >= 0.0, "init_velocities: temperature must be >= 0");
  require(masses.size() >= 1 && (masses.array() > 0.0).all(),
          "init_velocities: need positive masses");
  const Index n = masses.size();
  MatX p = MatX::Zero(n, 3);
  if (temperature == 0.0) return p;

  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    const double scale = std::sqrt(masses(i));
    for (Index c = 0; c < 3; ++c) p(i, c) = scale * rng.gaussian();
  }
  const double ke = kinetic_energy(p, masses);
  require(ke > 0.0, "init_velocities: degenerate zero draw");
  const double target = 1.5 * double(n) * kBoltzmann * temperature;
  p *= std::sqrt(target / ke);
  return p;
}

VerletStep velocity_verlet_step(const AtomSystem& s, const MatX& forces, const ForceFn& force_fn,
                                double dt, Index step_index) {
  s.validate();
  require(dt > 0.0, "velocity_verlet_step: dt must be positive");
  require(forces.rows() == s.atom_count() && forces.cols() == 3,
          "velocity_verlet_step: force shape mismatch");
  if (!forces.allFinite())
    throw numerical_error("velocity_verlet_step: non-finite forces at step " +
                          std::to_string(step_index));

  VerletStep out;
  out.state.masses = s.masses;
  out.state.positions = s.positions;
  out.state.momenta = s.momenta;
  for (Index i = 0; i < s.atom_count(); ++i) {
    const double m = s.masses(i);
    out.state.positions.row(i) +=
        (s.momenta.row(i) / m) * dt + (0.5 * kAccelUnit * dt * dt / m) * forces.row(i);
  }
  out.forces = force_fn(out.state.positions);
  require(out.forces.rows() == s.atom_count() && out.forces.cols() == 3,
          "velocity_verlet_step: force provider returned wrong shape");
  if (!out.forces.allFinite())
    throw numerical_error("velocity_verlet_step: non-finite forces at step " +
                          std::to_string(step_index + 1));
  out.state.momenta += (0.5 * kAccelUnit * dt) * (forces + out.forces);
  return out;
}

VerletStep velocity_verlet_step(const AtomSystem& s, const ForceFn& force_fn, double dt,
                                Index step_index) {
  return velocity_verlet_step(s, force_fn(s.positions), force_fn, dt, step_index);
}

Trajectory simulate_trajectory(const AtomSystem& initial, const ForceFn& force_provider,
                               Index steps, double dt, const LJParams& energy_params) {
  initial.validate();
  require(steps >= 0, "simulate_trajectory: steps must be >= 0");
  Trajectory traj;
  traj.positions.reserve(steps + 1);
  traj.momenta.reserve(steps + 1);
  traj.energy.reserve(steps + 1);

  AtomSystem cur = initial;
  traj.positions.push_back(cur.positions);
  traj.momenta.push_back(cur.momenta);
  traj.energy.push_back(hamiltonian(cur, energy_params));

  if (steps == 0) return traj;
  MatX forces = force_provider(cur.positions);
  for (Index step = 0; step < steps; ++step) {
    VerletStep next = velocity_verlet_step(cur, forces, force_provider, dt, step);
    cur = std::move(next.state);
    forces = std::move(next.forces);
    traj.positions.push_back(cur.positions);
    traj.momenta.push_back(cur.momenta);
    traj.energy.push_back(hamiltonian(cur, energy_params));
  }
  return traj;
}

Index Dataset::count_of(Split s) const {
  return static_cast<Index>(std::count(splits.begin(), splits.end(), s));
}

std::vector<Index> Dataset::indices_of(Split s) const {
  std::vector<Index> idx;
  for (Index i = 0; i < count(); ++i)
    if (splits[i] == s) idx.push_back(i);
  return idx;
}

void Dataset::validate() const {
  require(records.size() == splits.size(), "Dataset: records and splits must align");
  require(input_std > 0.0 && output_std > 0.0, "Dataset: standardization scalars must be > 0");
  require(sigma > 0.0 && r_min >= 0.0, "Dataset: bad generation parameters");
  lj.validate();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    require(rec.positions.rows() == 4 && rec.positions.cols() == 3 && rec.forces.rows() == 4 &&
                rec.forces.cols() == 3,
            "Dataset: record " + std::to_string(i) + " must hold 4 x 3 positions and forces");
    require(rec.positions.allFinite() && rec.forces.allFinite(),
            "Dataset: record " + std::to_string(i) + " has non-finite entries");
  }
}

namespace {

double min_pair_distance(const MatX& positions) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < positions.rows(); ++i)
    for (Index j = i + 1; j < positions.rows(); ++j)
      best = std::min(best, (positions.row(j) - positions.row(i)).norm());
  return best;
}

/// Standard deviation (mean removed, population denominator) of every
/// coefficient in a list of matrices, as one pooled scalar.
double pooled_std(const std::vector<MatX>& blocks) {
  double sum = 0.0, sumsq = 0.0, n = 0.0;
  for (const auto& b : blocks) {
    sum += b.sum();
    sumsq += b.squaredNorm();
    n += double(b.size());
  }
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sumsq / n - mean * mean));
}

}  // namespace

Dataset generate_dataset(Index count, std::uint64_t seed, double sigma, double r_min,
                         const LJParams& p) {
  require(count >= 1, "generate_dataset: count must be >= 1");
  require(sigma > 0.0 && r_min >= 0.0, "generate_dataset: bad sigma or r_min");
  p.validate();

  Dataset ds;
  ds.sigma = sigma;
  ds.r_min = r_min;
  ds.seed = seed;
  ds.lj = p;
  ds.records.reserve(count);

  Rng rng(seed);
  for (Index rec = 0; rec < count; ++rec) {
    MatX pos(4, 3);
    do {
      for (Index a = 0; a < 4; ++a)
        for (Index c = 0; c < 3; ++c) pos(a, c) = rng.gaussian(0.0, sigma);
    } while (min_pair_distance(pos) < r_min);
    ds.records.push_back({pos, lj_forces(pos, p)});
  }

  // Shuffle indices with the same stream, then slice 60/20/20.
  std::vector<Index> order(count);
  for (Index i = 0; i < count; ++i) order[i] = i;
  for (Index i = count - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.uniform01() * double(i + 1));
    std::swap(order[i], order[j]);
  }
  const Index n_train = static_cast<Index>(0.6 * double(count));
  const Index n_val = static_cast<Index>(0.2 * double(count));
  ds.splits.assign(count, Split::test);
  for (Index k = 0; k < count; ++k) {
    if (k < n_train)
      ds.splits[order[k]] = Split::train;
    else if (k < n_train + n_val)
      ds.splits[order[k]] = Split::val;
  }

  // One input scalar over all relative-position components of the training
  // split, one output scalar over all force components. Applied downstream
  // as pure rescaling, no centering.
  std::vector<MatX> rel, frc;
  for (Index i = 0; i < count; ++i) {
    if (ds.splits[i] != Split::train) continue;
    rel.push_back(relative_positions(ds.records[i].positions).entries);
    frc.push_back(ds.records[i].forces);
  }
  if (!rel.empty()) {
    ds.input_std = pooled_std(rel);
    ds.output_std = pooled_std(frc);
    require(ds.input_std > 0.0 && ds.output_std > 0.0,
            "generate_dataset: degenerate training split");
  }
  ds.validate();
  return ds;
}

}  // namespace uenn
