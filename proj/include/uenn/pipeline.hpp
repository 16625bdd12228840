#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "uenn/io.hpp"
#include "uenn/network.hpp"
#include "uenn/physics.hpp"
#include "uenn/train.hpp"

namespace uenn {

// ---------------------------------------------------------------------------
// Dataset -> training batches

/// 4x3 force rows as a 3x4 vector batch (atom k's force is column k).
VectorBatch<double> forces_to_columns(const MatX& forces);
MatX columns_to_forces(const MatX& cols);

/// Standardized network inputs (relative positions over input_std) and
/// targets (forces over output_std) for one split, stacked for training.
std::pair<SampleBatch<double>, SampleBatch<double>> standardized_batches(const Dataset& ds,
                                                                         Split split);

template <class Scalar>
SampleBatch<Scalar> cast_batch(const SampleBatch<double>& b) {
  return SampleBatch<Scalar>(b.stacked.cast<Scalar>(), b.dim, b.vec_dim, b.count);
}

// ---------------------------------------------------------------------------
// Force providers

/// The trained network as a force field: positions -> standardized relative
/// positions -> network -> forces in eV/A. Owns a copy of the network.
ForceFn model_force_fn(const Network<double>& net, double input_std, double output_std);
ForceFn analytic_force_fn(const LJParams& p);

// ---------------------------------------------------------------------------
// Metrics

struct ForceEval {
  double rmsd = 0.0;            // eV/A over all scalar components of the split
  std::vector<MatX> predicted;  // per record of the split, 4x3 eV/A
  std::vector<Index> indices;   // dataset indices the rows above refer to
};

/// Standardization scalars come from the caller (normally the checkpoint's,
/// which may differ from the evaluation dataset's own).
ForceEval evaluate_forces(const Network<double>& net, const Dataset& ds, Split split,
                          double input_std, double output_std);

/// Per-step deviation between equally long trajectory sets:
/// position[t] = sqrt(mean over samples and atoms of |r_ref - r_other|^2),
/// energy[t] = sqrt(mean over samples of (E_ref - E_other)^2).
struct RmsdCurves {
  std::vector<double> position;  // A
  std::vector<double> energy;    // eV
};

RmsdCurves rmsd_curves(const std::vector<Trajectory>& reference,
                       const std::vector<Trajectory>& other);

// ---------------------------------------------------------------------------
// MD setup

/// The four-atom starting geometry used for every MD comparison.
MatX default_md_positions();

/// Default geometry + seeded velocities drawn for `sample_index` via the
/// "velocity/<i>" sub-seed of the master seed.
AtomSystem make_md_system(double temperature, std::uint64_t master_seed, Index sample_index);

// ---------------------------------------------------------------------------
// Training orchestration

enum class Precision { float64, float32 };

std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

struct TrainSpec {
  std::vector<Index> widths = {6, 50, 90, 100, 80, 50, 4};
  double residue_a = 0.01;
  std::uint64_t init_seed = 0;
  FireConfig fire;
  Index log_interval = 1000;
  Precision precision = Precision::float64;
  /// Progress hook, forwarded to TrainConfig::on_log.
  std::function<void(const TrainHistoryRow&)> on_log;
};

struct TrainArtifacts {
  Checkpoint checkpoint;
  std::vector<TrainHistoryRow> history;
};

/// Trains on the dataset's train split, monitoring the val split. The
/// minimization runs in the requested precision; the checkpoint stores the
/// parameters as doubles with the final train/val losses and the test-split
/// force RMSD re-evaluated in double precision.
TrainArtifacts train_model(const Dataset& ds, const TrainSpec& spec);

// ---------------------------------------------------------------------------
// CSV artifacts

void write_history_csv(const std::vector<TrainHistoryRow>& history, const std::string& path);
void write_scatter_csv(const Dataset& ds, const ForceEval& eval, const std::string& path);
void write_rmsd_csv(const RmsdCurves& curves, double dt_fs, const std::string& path);
void write_sample_csv(const Trajectory& analytic, const Trajectory& predicted, double dt_fs,
                      const std::string& path);

/// History CSV path that belongs to a checkpoint path: `x.json` ->
/// `x_history.csv` (non-.json paths just get the suffix appended).
std::string history_path_for(const std::string& checkpoint_path);

// ---------------------------------------------------------------------------
// Command implementations (CLI verbs). All throw uenn exceptions on failure;
// the CLI maps exception types to exit codes.

struct GenDataArgs {
  Index count = 10000;
  std::uint64_t master_seed = 1;
  double sigma = 3.0;
  double r_min = 2.8;
  std::string out;
};

struct TrainArgs {
  std::string dataset;
  std::string out;  // checkpoint path; history CSV lands next to it
  std::vector<Index> widths = {6, 50, 90, 100, 80, 50, 4};
  std::uint64_t master_seed = 1;
  Index iterations = 100000;
  Index log_interval = 1000;
  Index stop_window = 1000;
  double stop_tol = 1e-10;
  Precision precision = Precision::float64;
};

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  Split split = Split::test;
  std::string scatter_out;  // optional
};

struct SimulateArgs {
  std::string provider;  // "analytic" or a checkpoint path
  std::string out_prefix;
  Index samples = 10;
  Index steps = 4000;
  double dt = 1.0;  // fs
  double temperature = 10.0;
  std::uint64_t master_seed = 1;
};

struct CheckArgs {
  std::string mode;        // equivariance | gradient | parity
  std::string checkpoint;  // optional; random configs otherwise
  std::uint64_t master_seed = 1;
};

void run_gen_data(const GenDataArgs& args);
void run_train(const TrainArgs& args);
void run_eval(const EvalArgs& args);
void run_simulate(const SimulateArgs& args);

/// Returns true when every property holds within its threshold.
bool run_check(const CheckArgs& args);

}  // namespace uenn
