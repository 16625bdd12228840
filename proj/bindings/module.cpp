#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uenn/checks.hpp"
#include "uenn/io.hpp"
#include "uenn/physics.hpp"
#include "uenn/pipeline.hpp"
#include "uenn/random.hpp"

namespace py = pybind11;
using namespace uenn;

namespace {

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw contract_violation("unknown split '" + s + "', expected train/val/test");
}

/// Checkpoint plus the reconstructed network; the Python-facing handle for
/// everything a trained model can do.
struct ForceModel {
  Checkpoint ck;
  Network<double> net;

  explicit ForceModel(Checkpoint c) : ck(std::move(c)), net(ck.to_network<double>()) {}

  MatX predict(const MatX& positions) const {
    return model_force_fn(net, ck.input_std, ck.output_std)(positions);
  }
  double rmsd(const Dataset& ds, const std::string& split) const {
    return evaluate_forces(net, ds, split_from_string(split), ck.input_std, ck.output_std).rmsd;
  }
  void save(const std::string& path) const { save_checkpoint(ck, path); }
};

/// Builds a fresh random network of the dense layout and measures one of the
/// structural properties; the smoke tests call these with tiny architectures.
template <class Scalar>
double equivariance_of(Index n, Index m, const std::vector<Index>& widths, Index unitaries,
                       std::uint64_t seed) {
  Rng rng(seed);
  const auto net = random_network<Scalar>(NetworkConfig::dense(n, m, widths), rng);
  return equivariance_deviation(net, unitaries, rng);
}

template <class Scalar>
double gradient_error_of(Index n, Index m, const std::vector<Index>& widths, Index samples,
                         std::uint64_t seed, double step) {
  Rng rng(seed);
  const auto net = random_network<Scalar>(NetworkConfig::dense(n, m, widths), rng);
  return gradient_relative_error(net, samples, rng, step);
}

template <class Scalar>
double parity_of(Index n, const std::vector<Index>& widths, Index trials, std::uint64_t seed) {
  Rng rng(seed);
  const auto net = random_network<Scalar>(NetworkConfig::dense(n, 0, widths), rng);
  return parity_deviation(net, trials, rng);
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Unitary-equivariant force networks: data generation, training, prediction, MD";

  mod.attr("K_BOLTZMANN_EV_PER_K") = kBoltzmann;
  mod.attr("ARGON_MASS_U") = kArgonMass;

  py::register_exception<contract_violation>(mod, "ContractViolation", PyExc_ValueError);
  py::register_exception<io_error>(mod, "IoError", PyExc_IOError);

  py::class_<LJParams>(mod, "LJParams")
      .def(py::init<>())
      .def(py::init([](double epsilon, double r0) {
             LJParams p;
             p.epsilon = epsilon;
             p.r0 = r0;
             p.validate();
             return p;
           }),
           py::arg("epsilon"), py::arg("r0"))
      .def_readwrite("epsilon", &LJParams::epsilon)
      .def_readwrite("r0", &LJParams::r0);

  mod.def("lj_pair_energy", &lj_pair_energy, py::arg("r"), py::arg("params") = LJParams{});
  mod.def("lj_total_energy", &lj_total_energy, py::arg("positions"),
          py::arg("params") = LJParams{});
  mod.def("lj_forces", &lj_forces, py::arg("positions"), py::arg("params") = LJParams{},
          "Analytic forces, one row per atom, eV/A");
  mod.def(
      "relative_positions",
      [](const MatX& positions) { return MatX(relative_positions(positions).entries); },
      py::arg("positions"),
      "The six pairwise separation vectors of a 4-atom configuration as a 3x6 matrix");

  py::class_<Dataset>(mod, "Dataset")
      .def_property_readonly("count", &Dataset::count)
      .def_readonly("seed", &Dataset::seed)
      .def_readonly("input_std", &Dataset::input_std)
      .def_readonly("output_std", &Dataset::output_std)
      .def_readonly("sigma", &Dataset::sigma)
      .def_readonly("r_min", &Dataset::r_min)
      .def(
          "count_of",
          [](const Dataset& ds, const std::string& s) { return ds.count_of(split_from_string(s)); },
          py::arg("split"))
      .def(
          "positions",
          [](const Dataset& ds, Index i) {
            require(i >= 0 && i < ds.count(), "Dataset: record index out of range");
            return ds.records[static_cast<std::size_t>(i)].positions;
          },
          py::arg("index"))
      .def(
          "forces",
          [](const Dataset& ds, Index i) {
            require(i >= 0 && i < ds.count(), "Dataset: record index out of range");
            return ds.records[static_cast<std::size_t>(i)].forces;
          },
          py::arg("index"))
      .def(
          "split",
          [](const Dataset& ds, Index i) {
            require(i >= 0 && i < ds.count(), "Dataset: record index out of range");
            return to_string(ds.splits[static_cast<std::size_t>(i)]);
          },
          py::arg("index"))
      .def(
          "save",
          [](const Dataset& ds, const std::string& path) { save_dataset(ds, path); },
          py::arg("path"));

  mod.def("generate_dataset", &generate_dataset, py::arg("count"), py::arg("seed"),
          py::arg("sigma") = 3.0, py::arg("r_min") = 2.8, py::arg("params") = LJParams{},
          py::call_guard<py::gil_scoped_release>(),
          "Seeded 4-atom Lennard-Jones configurations with analytic forces, split 60/20/20");
  mod.def("load_dataset", &load_dataset, py::arg("path"));

  py::class_<ForceModel>(mod, "ForceModel")
      .def_property_readonly("widths", [](const ForceModel& m) { return m.ck.config.widths; })
      .def_property_readonly("iterations", [](const ForceModel& m) { return m.ck.iterations; })
      .def_property_readonly("train_loss", [](const ForceModel& m) { return m.ck.train_loss; })
      .def_property_readonly("val_loss", [](const ForceModel& m) { return m.ck.val_loss; })
      .def_property_readonly("input_std", [](const ForceModel& m) { return m.ck.input_std; })
      .def_property_readonly("output_std", [](const ForceModel& m) { return m.ck.output_std; })
      .def("predict_forces", &ForceModel::predict, py::arg("positions"),
           "Model forces for a 4x3 configuration, eV/A")
      .def("rmsd", &ForceModel::rmsd, py::arg("dataset"), py::arg("split") = "test")
      .def("save", &ForceModel::save, py::arg("path"));

  mod.def(
      "load_model", [](const std::string& path) { return ForceModel(load_checkpoint(path)); },
      py::arg("path"));

  mod.def(
      "train_force_model",
      [](const Dataset& ds, const std::vector<Index>& widths, std::uint64_t master_seed,
         Index iterations, const std::string& precision, Index log_interval, Index stop_window,
         double stop_tol) {
        TrainSpec spec;
        spec.widths = widths;
        spec.init_seed = derive_seed(master_seed, "init");
        spec.fire.i_max = iterations;
        spec.fire.stop_window = stop_window;
        spec.fire.stop_tol = stop_tol;
        spec.log_interval = log_interval;
        spec.precision = precision_from_string(precision);
        TrainArtifacts art;
        {
          py::gil_scoped_release release;
          art = train_model(ds, spec);
        }
        MatX history(static_cast<Index>(art.history.size()), 3);
        for (Index r = 0; r < history.rows(); ++r) {
          const auto& row = art.history[static_cast<std::size_t>(r)];
          history(r, 0) = double(row.iteration);
          history(r, 1) = row.train_loss;
          history(r, 2) = row.val_loss;
        }
        return py::make_tuple(ForceModel(std::move(art.checkpoint)), history);
      },
      py::arg("dataset"), py::arg("widths") = std::vector<Index>{6, 50, 90, 100, 80, 50, 4},
      py::arg("master_seed") = 1, py::arg("iterations") = 100000,
      py::arg("precision") = "double", py::arg("log_interval") = 1000,
      py::arg("stop_window") = 1000, py::arg("stop_tol") = 1e-10,
      "FIRE-trains a force network; returns (model, history) where history rows are "
      "(iteration, train_loss, val_loss)");

  py::class_<Trajectory>(mod, "Trajectory")
      .def_readonly("positions", &Trajectory::positions)
      .def_readonly("momenta", &Trajectory::momenta)
      .def_readonly("energy", &Trajectory::energy)
      .def_property_readonly("step_count", &Trajectory::step_count);

  mod.def(
      "simulate",
      [](Index steps, double dt_fs, double temperature, std::uint64_t master_seed,
         Index sample_index, const ForceModel* model) {
        const AtomSystem sys = make_md_system(temperature, master_seed, sample_index);
        const ForceFn fn = model == nullptr
                               ? analytic_force_fn(LJParams{})
                               : model_force_fn(model->net, model->ck.input_std,
                                                model->ck.output_std);
        py::gil_scoped_release release;
        return simulate_trajectory(sys, fn, steps, dt_fs, LJParams{});
      },
      py::arg("steps"), py::arg("dt_fs") = 1.0, py::arg("temperature") = 10.0,
      py::arg("master_seed") = 1, py::arg("sample_index") = 0, py::arg("model") = nullptr,
      "Velocity-Verlet MD of the 4-atom argon system; forces from `model` or, when None, "
      "the analytic potential. The energy column is always the analytic Hamiltonian.");

  mod.def(
      "equivariance_deviation",
      [](Index n, Index m, const std::vector<Index>& widths, bool complex_field, Index unitaries,
         std::uint64_t seed) {
        return complex_field ? equivariance_of<std::complex<double>>(n, m, widths, unitaries, seed)
                             : equivariance_of<double>(n, m, widths, unitaries, seed);
      },
      py::arg("n"), py::arg("m"), py::arg("widths"), py::arg("complex_field") = false,
      py::arg("unitaries") = 10, py::arg("seed") = 0,
      "Worst relative deviation of f(Ux) from U f(x) for a random dense network");

  mod.def(
      "gradient_relative_error",
      [](Index n, Index m, const std::vector<Index>& widths, bool complex_field, Index samples,
         std::uint64_t seed, double step) {
        return complex_field ? gradient_error_of<std::complex<double>>(n, m, widths, samples, seed, step)
                             : gradient_error_of<double>(n, m, widths, samples, seed, step);
      },
      py::arg("n"), py::arg("m"), py::arg("widths"), py::arg("complex_field") = false,
      py::arg("samples") = 2, py::arg("seed") = 0, py::arg("step") = 1e-6,
      "Backpropagation against central finite differences on a random network");

  mod.def(
      "parity_deviation",
      [](Index n, const std::vector<Index>& widths, bool complex_field, Index trials,
         std::uint64_t seed) {
        return complex_field ? parity_of<std::complex<double>>(n, widths, trials, seed)
                             : parity_of<double>(n, widths, trials, seed);
      },
      py::arg("n"), py::arg("widths"), py::arg("complex_field") = false, py::arg("trials") = 10,
      py::arg("seed") = 0, "Odd-parity deviation ||f(-x) + f(x)|| / ||f(x)|| for m = 0 networks");

  mod.def("derive_seed", &derive_seed, py::arg("master_seed"), py::arg("tag"),
          "The sub-seed a master seed assigns to a named pipeline stage");
}
