#include "uenn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>

#include "uenn/checks.hpp"
#include "uenn/random.hpp"

namespace uenn {

VectorBatch<double> forces_to_columns(const MatX& forces) {
  require(forces.cols() == 3, "forces_to_columns: need 3 columns");
  VectorBatch<double> out;
  out.entries = forces.transpose();
  out.vec_dim = 3;
  return out;
}

MatX columns_to_forces(const MatX& cols) {
  require(cols.rows() == 3, "columns_to_forces: need 3 rows");
  return cols.transpose();
}

std::pair<SampleBatch<double>, SampleBatch<double>> standardized_batches(const Dataset& ds,
                                                                         Split split) {
  require(ds.input_std > 0.0 && ds.output_std > 0.0,
          "standardized_batches: standardization scalars must be positive");
  const auto idx = ds.indices_of(split);
  require(!idx.empty(), "standardized_batches: split '" + to_string(split) + "' is empty");

  std::vector<VectorBatch<double>> xs, ts;
  xs.reserve(idx.size());
  ts.reserve(idx.size());
  for (Index i : idx) {
    const auto& rec = ds.records[static_cast<std::size_t>(i)];
    VectorBatch<double> x = relative_positions(rec.positions);
    x.entries /= ds.input_std;
    VectorBatch<double> t = forces_to_columns(rec.forces);
    t.entries /= ds.output_std;
    xs.push_back(std::move(x));
    ts.push_back(std::move(t));
  }
  return {SampleBatch<double>::from_samples(xs), SampleBatch<double>::from_samples(ts)};
}

namespace {

void require_force_architecture(const NetworkConfig& cfg) {
  require(cfg.n == 3 && cfg.m == 0,
          "force model: need 3 rotating coordinates and no feature slots");
  require(!cfg.widths.empty() && cfg.widths.front() == 6 && cfg.widths.back() == 4,
          "force model: architecture must map the 6 relative positions to 4 forces");
}

MatX predict_forces(const Network<double>& net, const MatX& positions, double input_std,
                    double output_std) {
  VectorBatch<double> x = relative_positions(positions);
  x.entries /= input_std;
  VectorBatch<double> out = network_apply(x, net);
  return columns_to_forces(out.entries * output_std);
}

}  // namespace

ForceFn model_force_fn(const Network<double>& net, double input_std, double output_std) {
  net.validate();
  require_force_architecture(net.config);
  require(input_std > 0.0 && output_std > 0.0,
          "model_force_fn: standardization scalars must be positive");
  auto shared = std::make_shared<Network<double>>(net);
  return [shared, input_std, output_std](const MatX& positions) {
    return predict_forces(*shared, positions, input_std, output_std);
  };
}

ForceFn analytic_force_fn(const LJParams& p) {
  p.validate();
  return [p](const MatX& positions) { return lj_forces(positions, p); };
}

ForceEval evaluate_forces(const Network<double>& net, const Dataset& ds, Split split,
                          double input_std, double output_std) {
  net.validate();
  require_force_architecture(net.config);
  require(input_std > 0.0 && output_std > 0.0,
          "evaluate_forces: standardization scalars must be positive");

  ForceEval ev;
  ev.indices = ds.indices_of(split);
  require(!ev.indices.empty(), "evaluate_forces: split '" + to_string(split) + "' is empty");
  double sq_sum = 0.0;
  for (Index i : ev.indices) {
    const auto& rec = ds.records[static_cast<std::size_t>(i)];
    MatX pred = predict_forces(net, rec.positions, input_std, output_std);
    sq_sum += (pred - rec.forces).squaredNorm();
    ev.predicted.push_back(std::move(pred));
  }
  ev.rmsd = std::sqrt(sq_sum / (double(ev.indices.size()) * 12.0));
  return ev;
}

RmsdCurves rmsd_curves(const std::vector<Trajectory>& reference,
                       const std::vector<Trajectory>& other) {
  require(!reference.empty() && reference.size() == other.size(),
          "rmsd_curves: need equally many non-empty trajectory sets");
  const std::size_t steps = reference.front().positions.size();
  const Index atoms = reference.front().positions.front().rows();
  for (const auto* set : {&reference, &other})
    for (const auto& t : *set)
      require(t.positions.size() == steps && t.positions.front().rows() == atoms,
              "rmsd_curves: trajectory shape mismatch");

  RmsdCurves out;
  out.position.resize(steps);
  out.energy.resize(steps);
  const double n_s = double(reference.size());
  for (std::size_t t = 0; t < steps; ++t) {
    double pos_sq = 0.0, e_sq = 0.0;
    for (std::size_t s = 0; s < reference.size(); ++s) {
      pos_sq += (reference[s].positions[t] - other[s].positions[t]).squaredNorm();
      const double de = reference[s].energy[t] - other[s].energy[t];
      e_sq += de * de;
    }
    out.position[t] = std::sqrt(pos_sq / (n_s * double(atoms)));
    out.energy[t] = std::sqrt(e_sq / n_s);
  }
  return out;
}

MatX default_md_positions() {
  MatX pos(4, 3);
  pos << 3.0, 0.0, 0.1,  //
      -3.0, -0.1, 0.0,   //
      0.1, 2.5, 0.0,     //
      0.0, -2.5, -0.1;
  return pos;
}

AtomSystem make_md_system(double temperature, std::uint64_t master_seed, Index sample_index) {
  require(sample_index >= 0, "make_md_system: sample index must be >= 0");
  AtomSystem sys;
  sys.positions = default_md_positions();
  sys.masses = VecX::Constant(4, kArgonMass);
  const std::uint64_t seed =
      derive_seed(master_seed, "velocity/" + std::to_string(sample_index));
  sys.momenta = init_velocities(temperature, sys.masses, seed);
  sys.validate();
  return sys;
}

std::string to_string(Precision p) { return p == Precision::float32 ? "float" : "double"; }

Precision precision_from_string(const std::string& s) {
  if (s == "float") return Precision::float32;
  if (s == "double") return Precision::float64;
  throw contract_violation("precision must be 'float' or 'double', got '" + s + "'");
}

namespace {

template <class Scalar>
std::pair<Network<double>, TrainResult<Scalar>> train_in(const NetworkConfig& cfg,
                                                         const Dataset& ds,
                                                         const TrainSpec& spec) {
  const auto [tx_d, tt_d] = standardized_batches(ds, Split::train);
  const auto [vx_d, vt_d] = standardized_batches(ds, Split::val);
  const auto tx = cast_batch<Scalar>(tx_d);
  const auto tt = cast_batch<Scalar>(tt_d);
  const auto vx = cast_batch<Scalar>(vx_d);
  const auto vt = cast_batch<Scalar>(vt_d);

  Network<Scalar> init = xavier_network<Scalar>(cfg, spec.init_seed);
  TrainConfig tc;
  tc.log_interval = spec.log_interval;
  tc.on_log = spec.on_log;
  TrainResult<Scalar> res = train(init, tx, tt, vx, vt, spec.fire, tc);

  // Parameters widen exactly; metrics are re-derived in double elsewhere.
  Network<double> net = Network<double>::zeros(cfg);
  unflatten_parameters(flatten_parameters(res.net), net);
  return {std::move(net), std::move(res)};
}

}  // namespace

TrainArtifacts train_model(const Dataset& ds, const TrainSpec& spec) {
  ds.validate();
  spec.fire.validate();
  NetworkConfig cfg = NetworkConfig::dense(3, 0, spec.widths, spec.residue_a);
  require_force_architecture(cfg);

  TrainArtifacts art;
  Network<double> net;
  if (spec.precision == Precision::float32) {
    auto [n, res] = train_in<float>(cfg, ds, spec);
    net = std::move(n);
    art.history = std::move(res.history);
    art.checkpoint.iterations = res.iterations;
    art.checkpoint.stopped_by_plateau = res.stopped_by_plateau;
  } else {
    auto [n, res] = train_in<double>(cfg, ds, spec);
    net = std::move(n);
    art.history = std::move(res.history);
    art.checkpoint.iterations = res.iterations;
    art.checkpoint.stopped_by_plateau = res.stopped_by_plateau;
  }

  // Final losses in double precision; these are what the checkpoint records
  // and what a reload must reproduce.
  const auto [tx, tt] = standardized_batches(ds, Split::train);
  const auto [vx, vt] = standardized_batches(ds, Split::val);
  const double train_loss = network_loss(net, tx, tt);
  const double val_loss = network_loss(net, vx, vt);
  if (!art.history.empty()) {
    art.history.back().train_loss = train_loss;
    art.history.back().val_loss = val_loss;
  }

  Checkpoint ck = Checkpoint::from_network(net);
  ck.input_std = ds.input_std;
  ck.output_std = ds.output_std;
  ck.dataset_seed = ds.seed;
  ck.init_seed = spec.init_seed;
  ck.iterations = art.checkpoint.iterations;
  ck.train_loss = train_loss;
  ck.val_loss = val_loss;
  ck.stopped_by_plateau = art.checkpoint.stopped_by_plateau;
  ck.precision = to_string(spec.precision);
  ck.fire = spec.fire;
  art.checkpoint = std::move(ck);
  return art;
}

void write_history_csv(const std::vector<TrainHistoryRow>& history, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(history.size());
  for (const auto& h : history)
    rows.push_back({std::to_string(h.iteration), format_double(h.train_loss),
                    format_double(h.val_loss)});
  write_csv(path, {"iteration", "train_loss", "val_loss"}, rows);
}

void write_scatter_csv(const Dataset& ds, const ForceEval& eval, const std::string& path) {
  require(eval.indices.size() == eval.predicted.size(),
          "write_scatter_csv: prediction/index mismatch");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(eval.indices.size() * 12);
  for (std::size_t k = 0; k < eval.indices.size(); ++k) {
    const auto& actual = ds.records[static_cast<std::size_t>(eval.indices[k])].forces;
    const auto& pred = eval.predicted[k];
    for (Index a = 0; a < 4; ++a)
      for (Index c = 0; c < 3; ++c)
        rows.push_back({format_double(actual(a, c)), format_double(pred(a, c))});
  }
  write_csv(path, {"analytic_ev_per_angstrom", "predicted_ev_per_angstrom"}, rows);
}

void write_rmsd_csv(const RmsdCurves& curves, double dt_fs, const std::string& path) {
  require(curves.position.size() == curves.energy.size(), "write_rmsd_csv: curve length mismatch");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(curves.position.size());
  for (std::size_t t = 0; t < curves.position.size(); ++t)
    rows.push_back({std::to_string(t), format_double(double(t) * dt_fs),
                    format_double(curves.position[t]), format_double(curves.energy[t])});
  write_csv(path, {"step", "time_fs", "rmsd_position_angstrom", "rmsd_energy_ev"}, rows);
}

void write_sample_csv(const Trajectory& analytic, const Trajectory& predicted, double dt_fs,
                      const std::string& path) {
  require(analytic.positions.size() == predicted.positions.size(),
          "write_sample_csv: trajectory length mismatch");
  const Index atoms = analytic.positions.front().rows();
  std::vector<std::string> header = {"step", "time_fs"};
  const char* axis = "xyz";
  for (const char* who : {"analytic", "predicted"})
    for (Index a = 0; a < atoms; ++a)
      for (Index c = 0; c < 3; ++c)
        header.push_back(std::string(who) + "_atom" + std::to_string(a) + "_" + axis[c] +
                         "_angstrom");
  header.push_back("analytic_energy_ev");
  header.push_back("predicted_energy_ev");

  std::vector<std::vector<std::string>> rows;
  rows.reserve(analytic.positions.size());
  for (std::size_t t = 0; t < analytic.positions.size(); ++t) {
    std::vector<std::string> row = {std::to_string(t), format_double(double(t) * dt_fs)};
    for (const Trajectory* traj : {&analytic, &predicted})
      for (Index a = 0; a < atoms; ++a)
        for (Index c = 0; c < 3; ++c) row.push_back(format_double(traj->positions[t](a, c)));
    row.push_back(format_double(analytic.energy[t]));
    row.push_back(format_double(predicted.energy[t]));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

std::string history_path_for(const std::string& checkpoint_path) {
  const std::string suffix = ".json";
  std::string base = checkpoint_path;
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
    base.resize(base.size() - suffix.size());
  return base + "_history.csv";
}

void run_gen_data(const GenDataArgs& args) {
  require(!args.out.empty(), "gen-data: output path required");
  Dataset ds = generate_dataset(args.count, derive_seed(args.master_seed, "data"), args.sigma,
                                args.r_min);
  save_dataset(ds, args.out);
  std::cout << "wrote " << ds.count() << " records to " << args.out << " (train="
            << ds.count_of(Split::train) << " val=" << ds.count_of(Split::val)
            << " test=" << ds.count_of(Split::test)
            << " input_std=" << format_double(ds.input_std)
            << " output_std=" << format_double(ds.output_std) << ")\n";
}

void run_train(const TrainArgs& args) {
  require(!args.dataset.empty(), "train: dataset path required");
  require(!args.out.empty(), "train: checkpoint output path required");
  Dataset ds = load_dataset(args.dataset);

  TrainSpec spec;
  spec.widths = args.widths;
  spec.init_seed = derive_seed(args.master_seed, "init");
  spec.fire.i_max = args.iterations;
  spec.fire.stop_window = args.stop_window;
  spec.fire.stop_tol = args.stop_tol;
  spec.log_interval = args.log_interval;
  spec.precision = args.precision;
  spec.on_log = [](const TrainHistoryRow& row) {
    std::cerr << "iteration " << row.iteration << " train_loss " << format_double(row.train_loss)
              << " val_loss " << format_double(row.val_loss) << "\n";
  };

  TrainArtifacts art = train_model(ds, spec);
  save_checkpoint(art.checkpoint, args.out);
  write_history_csv(art.history, history_path_for(args.out));

  Network<double> net = art.checkpoint.to_network<double>();
  const ForceEval ev = evaluate_forces(net, ds, Split::test, art.checkpoint.input_std,
                                       art.checkpoint.output_std);
  std::cout << "trained " << art.checkpoint.iterations << " iterations ("
            << (art.checkpoint.stopped_by_plateau ? "plateau" : "iteration limit")
            << "), train_loss=" << format_double(art.checkpoint.train_loss)
            << " val_loss=" << format_double(art.checkpoint.val_loss)
            << " test_force_rmsd_ev_per_angstrom=" << format_double(ev.rmsd) << "\n";
  std::cout << "checkpoint " << args.out << ", history " << history_path_for(args.out) << "\n";
}

void run_eval(const EvalArgs& args) {
  require(!args.checkpoint.empty(), "eval: checkpoint path required");
  require(!args.dataset.empty(), "eval: dataset path required");
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  const Network<double> net = ck.to_network<double>();
  const Dataset ds = load_dataset(args.dataset);

  const ForceEval ev = evaluate_forces(net, ds, args.split, ck.input_std, ck.output_std);
  std::cout << "split=" << to_string(args.split) << " records=" << ev.indices.size()
            << " force_rmsd_ev_per_angstrom=" << format_double(ev.rmsd) << "\n";
  if (!args.scatter_out.empty()) {
    write_scatter_csv(ds, ev, args.scatter_out);
    std::cout << "scatter " << args.scatter_out << "\n";
  }
}

void run_simulate(const SimulateArgs& args) {
  require(!args.provider.empty(), "simulate: provider required ('analytic' or checkpoint path)");
  require(!args.out_prefix.empty(), "simulate: output prefix required");
  require(args.samples >= 1, "simulate: need at least one sample");

  const LJParams lj;
  ForceFn provider;
  if (args.provider == "analytic") {
    provider = analytic_force_fn(lj);
  } else {
    const Checkpoint ck = load_checkpoint(args.provider);
    provider = model_force_fn(ck.to_network<double>(), ck.input_std, ck.output_std);
  }
  const ForceFn reference = analytic_force_fn(lj);

  std::vector<Trajectory> ref_trajs, pred_trajs;
  for (Index s = 0; s < args.samples; ++s) {
    const AtomSystem sys = make_md_system(args.temperature, args.master_seed, s);
    ref_trajs.push_back(simulate_trajectory(sys, reference, args.steps, args.dt, lj));
    pred_trajs.push_back(simulate_trajectory(sys, provider, args.steps, args.dt, lj));
    write_sample_csv(ref_trajs.back(), pred_trajs.back(), args.dt,
                     args.out_prefix + "_sample" + std::to_string(s) + ".csv");
  }

  const RmsdCurves curves = rmsd_curves(ref_trajs, pred_trajs);
  write_rmsd_csv(curves, args.dt, args.out_prefix + "_rmsd.csv");
  std::cout << "simulated " << args.samples << " samples x " << args.steps
            << " steps, final rmsd_position_angstrom=" << format_double(curves.position.back())
            << " rmsd_energy_ev=" << format_double(curves.energy.back()) << "\n";
}

namespace {

NetworkConfig random_check_config(Rng& rng, bool with_features) {
  const Index n = 2 + Index(rng.uniform01() * 3.0);
  const Index depth = 1 + Index(rng.uniform01() * 4.0);
  std::vector<Index> widths(static_cast<std::size_t>(depth) + 1);
  for (auto& w : widths) w = 1 + Index(rng.uniform01() * 8.0);
  return NetworkConfig::dense(n, with_features ? 2 : 0, widths);
}

struct CheckCase {
  std::string name;
  double deviation;
};

bool report_cases(const std::vector<CheckCase>& cases, double threshold) {
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, c.deviation);
  const bool pass = worst < threshold;
  for (const auto& c : cases)
    std::cout << "  " << c.name << ": max_deviation=" << format_double(c.deviation) << "\n";
  std::cout << (pass ? "PASS" : "FAIL") << " worst=" << format_double(worst)
            << " threshold=" << format_double(threshold) << "\n";
  return pass;
}

}  // namespace

bool run_check(const CheckArgs& args) {
  std::vector<CheckCase> cases;
  if (args.mode == "equivariance") {
    if (!args.checkpoint.empty()) {
      const Checkpoint ck = load_checkpoint(args.checkpoint);
      Rng rng(derive_seed(args.master_seed, "check/equivariance"));
      const double dev = ck.field == "complex"
                             ? equivariance_deviation(ck.to_network<std::complex<double>>(), 10, rng)
                             : equivariance_deviation(ck.to_network<double>(), 10, rng);
      cases.push_back({"checkpoint", dev});
    } else {
      for (Index i = 0; i < 12; ++i) {
        Rng rng(derive_seed(args.master_seed, "check/equivariance/" + std::to_string(i)));
        const NetworkConfig cfg = random_check_config(rng, i % 3 == 0);
        double dev;
        if (i % 2 == 0) {
          const auto net = random_network<double>(cfg, rng);
          dev = equivariance_deviation(net, 5, rng);
        } else {
          const auto net = random_network<std::complex<double>>(cfg, rng);
          dev = equivariance_deviation(net, 5, rng);
        }
        cases.push_back({"random_net_" + std::to_string(i), dev});
      }
    }
    return report_cases(cases, 1e-10);
  }

  if (args.mode == "gradient") {
    if (!args.checkpoint.empty()) {
      const Checkpoint ck = load_checkpoint(args.checkpoint);
      require(ck.field == "real", "check gradient: only real checkpoints supported");
      Rng rng(derive_seed(args.master_seed, "check/gradient"));
      cases.push_back(
          {"checkpoint", gradient_relative_error(ck.to_network<double>(), 2, rng)});
    } else {
      for (Index i = 0; i < 6; ++i) {
        Rng rng(derive_seed(args.master_seed, "check/gradient/" + std::to_string(i)));
        NetworkConfig cfg = random_check_config(rng, i % 3 == 0);
        double err;
        if (i % 2 == 0) {
          err = gradient_relative_error(random_network<double>(cfg, rng), 3, rng);
        } else {
          err = gradient_relative_error(random_network<std::complex<double>>(cfg, rng), 3, rng);
        }
        cases.push_back({"random_net_" + std::to_string(i), err});
      }
    }
    return report_cases(cases, 1e-6);
  }

  if (args.mode == "parity") {
    if (!args.checkpoint.empty()) {
      const Checkpoint ck = load_checkpoint(args.checkpoint);
      Rng rng(derive_seed(args.master_seed, "check/parity"));
      const double dev = ck.field == "complex"
                             ? parity_deviation(ck.to_network<std::complex<double>>(), 10, rng)
                             : parity_deviation(ck.to_network<double>(), 10, rng);
      cases.push_back({"checkpoint", dev});
    } else {
      for (Index i = 0; i < 10; ++i) {
        Rng rng(derive_seed(args.master_seed, "check/parity/" + std::to_string(i)));
        const NetworkConfig cfg = random_check_config(rng, false);
        cases.push_back({"random_net_" + std::to_string(i),
                         parity_deviation(random_network<double>(cfg, rng), 5, rng)});
      }
    }
    return report_cases(cases, 1e-12);
  }

  throw contract_violation("check: unknown mode '" + args.mode +
                           "' (expected equivariance, gradient, or parity)");
}

}  // namespace uenn
