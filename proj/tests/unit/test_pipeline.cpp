#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "uenn/checks.hpp"
#include "uenn/pipeline.hpp"
#include "uenn/random.hpp"

using namespace uenn;
namespace fs = std::filesystem;

TEST_CASE("force rows and columns convert back and forth") {
  MatX f(4, 3);
  f << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  auto cols = forces_to_columns(f);
  CHECK(cols.vec_dim == 3);
  CHECK(cols.cols() == 4);
  CHECK(cols.entries(0, 0) == 1.0);
  CHECK(cols.entries(2, 3) == 12.0);
  CHECK((columns_to_forces(cols.entries) - f).norm() == 0.0);
}

TEST_CASE("standardized batches rescale inputs and targets") {
  auto ds = generate_dataset(30, 11);
  auto [x, t] = standardized_batches(ds, Split::train);
  CHECK(x.count == ds.count_of(Split::train));
  CHECK(x.dim == 3);  // rows per sample: pure vector part
  CHECK(t.dim == 3);
  CHECK(x.cols() == 6);  // one column per atom pair
  CHECK(t.cols() == 4);  // one column per atom
  CHECK(x.vec_dim == 3);
  CHECK(t.vec_dim == 3);

  const auto train_idx = ds.indices_of(Split::train);
  const auto& rec = ds.records[size_t(train_idx[0])];
  MatX want_x = relative_positions(rec.positions).entries / ds.input_std;
  CHECK((x.sample(0).entries - want_x).cwiseAbs().maxCoeff() == 0.0);
  MatX want_t = forces_to_columns(rec.forces).entries / ds.output_std;
  CHECK((t.sample(0).entries - want_t).cwiseAbs().maxCoeff() == 0.0);

  // the standardized training inputs have (population) std 1 by construction
  double sum = 0.0, sumsq = 0.0, n = 0.0;
  for (Index i = 0; i < x.count; ++i) {
    sum += x.sample(i).entries.sum();
    sumsq += x.sample(i).entries.squaredNorm();
    n += double(x.sample(i).entries.size());
  }
  const double mean = sum / n;
  CHECK(std::sqrt(sumsq / n - mean * mean) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("model force provider agrees with evaluate_forces") {
  auto ds = generate_dataset(20, 21);
  auto cfg = NetworkConfig::dense(3, 0, {6, 8, 4});
  auto net = xavier_network<double>(cfg, 5);

  auto eval = evaluate_forces(net, ds, Split::test, ds.input_std, ds.output_std);
  CHECK(eval.indices.size() == size_t(ds.count_of(Split::test)));
  CHECK(eval.predicted.size() == eval.indices.size());
  CHECK(std::isfinite(eval.rmsd));

  auto fn = model_force_fn(net, ds.input_std, ds.output_std);
  for (std::size_t k = 0; k < eval.indices.size(); ++k) {
    const MatX direct = fn(ds.records[size_t(eval.indices[k])].positions);
    CHECK((direct - eval.predicted[k]).cwiseAbs().maxCoeff() == 0.0);
  }

  // rmsd definition: sqrt(mean squared component error)
  double sq = 0.0;
  for (std::size_t k = 0; k < eval.indices.size(); ++k)
    sq += (eval.predicted[k] - ds.records[size_t(eval.indices[k])].forces).squaredNorm();
  CHECK(eval.rmsd ==
        doctest::Approx(std::sqrt(sq / (double(eval.indices.size()) * 12.0))).epsilon(1e-14));
}

TEST_CASE("the learned force field inherits rotation equivariance") {
  auto ds = generate_dataset(10, 33);
  auto cfg = NetworkConfig::dense(3, 0, {6, 10, 4});
  auto net = xavier_network<double>(cfg, 6);
  auto fn = model_force_fn(net, ds.input_std, ds.output_std);

  Rng rng(77);
  MatX pos = ds.records[0].positions;
  MatX rot = random_rotation(3, rng);
  const MatX f = fn(pos);
  const MatX f_rot = fn(pos * rot.transpose());
  CHECK((f_rot - f * rot.transpose()).cwiseAbs().maxCoeff() < 1e-10);

  // and translation invariance: only relative positions enter (up to the
  // roundoff of forming (a+s)-(b+s) instead of a-b)
  MatX shifted = pos;
  shifted.rowwise() += Eigen::RowVector3d(5.0, -3.0, 1.0);
  CHECK((fn(shifted) - f).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic provider matches lj_forces") {
  LJParams p;
  auto fn = analytic_force_fn(p);
  auto ds = generate_dataset(3, 9);
  for (const auto& rec : ds.records)
    CHECK((fn(rec.positions) - lj_forces(rec.positions, p)).norm() == 0.0);
}

TEST_CASE("rmsd curves match a hand example") {
  // two single-sample trajectories, one step apart: at t=1 one atom of four is
  // displaced by (1,0,0), so the position RMSD is sqrt(1/4) = 0.5
  Trajectory a, b;
  a.positions = {MatX::Zero(4, 3), MatX::Zero(4, 3)};
  b.positions = a.positions;
  b.positions[1](2, 0) = 1.0;
  a.momenta = {MatX::Zero(4, 3), MatX::Zero(4, 3)};
  b.momenta = a.momenta;
  a.energy = {1.0, 2.0};
  b.energy = {1.0, 2.25};

  auto curves = rmsd_curves({a}, {b});
  REQUIRE(curves.position.size() == 2);
  CHECK(curves.position[0] == 0.0);
  CHECK(curves.position[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(curves.energy[0] == 0.0);
  CHECK(curves.energy[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("a provider compared with itself gives identically zero rmsd") {
  LJParams p;
  auto sys = make_md_system(10.0, 1, 0);
  auto traj = simulate_trajectory(sys, analytic_force_fn(p), 20, 1.0, p);
  auto curves = rmsd_curves({traj}, {traj});
  for (double v : curves.position) CHECK(v == 0.0);
  for (double v : curves.energy) CHECK(v == 0.0);
}

TEST_CASE("md systems are seeded per sample") {
  auto a0 = make_md_system(10.0, 1, 0);
  auto a0_again = make_md_system(10.0, 1, 0);
  auto a1 = make_md_system(10.0, 1, 1);
  CHECK((a0.momenta - a0_again.momenta).norm() == 0.0);
  CHECK((a0.momenta - a1.momenta).norm() != 0.0);
  CHECK((a0.positions - a1.positions).norm() == 0.0);  // same geometry
  CHECK(kinetic_energy(a0.momenta, a0.masses) ==
        doctest::Approx(6.0 * kBoltzmann * 10.0).epsilon(1e-13));
}

TEST_CASE("precision names round trip") {
  CHECK(to_string(Precision::float64) == "double");
  CHECK(to_string(Precision::float32) == "float");
  CHECK(precision_from_string("double") == Precision::float64);
  CHECK(precision_from_string("float") == Precision::float32);
  CHECK_THROWS_AS(precision_from_string("half"), contract_violation);
}

TEST_CASE("history csv path derives from the checkpoint path") {
  CHECK(history_path_for("runs/model.json") == "runs/model_history.csv");
  CHECK(history_path_for("model") == "model_history.csv");
}

TEST_CASE("a tiny training run learns and fills the checkpoint") {
  auto ds = generate_dataset(60, 3);
  TrainSpec spec;
  spec.widths = {6, 10, 4};
  spec.init_seed = derive_seed(3, "init");
  spec.fire.i_max = 300;
  spec.fire.stop_window = 0;
  spec.log_interval = 100;

  auto art = train_model(ds, spec);
  const auto& ck = art.checkpoint;
  CHECK(ck.field == "real");
  CHECK(ck.config.widths == spec.widths);
  CHECK(ck.iterations == 300);
  CHECK_FALSE(ck.stopped_by_plateau);
  CHECK(ck.precision == "double");
  CHECK(ck.input_std == ds.input_std);
  CHECK(ck.output_std == ds.output_std);
  CHECK(ck.train_loss < art.history.front().train_loss);
  CHECK(std::isfinite(ck.val_loss));

  // the recorded final losses are reproducible from the stored parameters
  auto net = ck.to_network<double>();
  auto [tx, tt] = standardized_batches(ds, Split::train);
  CHECK(network_loss(net, tx, tt) == doctest::Approx(ck.train_loss).epsilon(1e-12));
  auto [vx, vt] = standardized_batches(ds, Split::val);
  CHECK(network_loss(net, vx, vt) == doctest::Approx(ck.val_loss).epsilon(1e-12));

  // history rows: iteration 0, every log_interval, and the final row
  REQUIRE(art.history.size() >= 2);
  CHECK(art.history.front().iteration == 0);
  CHECK(art.history.back().iteration == 300);
  CHECK(art.history.back().train_loss == ck.train_loss);
}

TEST_CASE("training in float32 still records double-precision losses") {
  auto ds = generate_dataset(50, 4);
  TrainSpec spec;
  spec.widths = {6, 8, 4};
  spec.init_seed = 12;
  spec.fire.i_max = 150;
  spec.fire.stop_window = 0;
  spec.precision = Precision::float32;

  auto art = train_model(ds, spec);
  CHECK(art.checkpoint.precision == "float");
  auto net = art.checkpoint.to_network<double>();
  auto [tx, tt] = standardized_batches(ds, Split::train);
  CHECK(network_loss(net, tx, tt) == doctest::Approx(art.checkpoint.train_loss).epsilon(1e-12));
}

TEST_CASE("plateau stopping reports itself") {
  auto ds = generate_dataset(40, 5);
  TrainSpec spec;
  spec.widths = {6, 6, 4};
  spec.init_seed = 9;
  spec.fire.i_max = 50000;
  spec.fire.stop_window = 20;
  spec.fire.stop_tol = 1e-2;  // generous: trigger quickly
  spec.log_interval = 500;

  auto art = train_model(ds, spec);
  CHECK(art.checkpoint.stopped_by_plateau);
  CHECK(art.checkpoint.iterations < 50000);
}

TEST_CASE("scatter csv lists analytic and predicted components") {
  namespace fs = std::filesystem;
  auto ds = generate_dataset(10, 6);
  auto net = xavier_network<double>(NetworkConfig::dense(3, 0, {6, 4}), 2);
  auto eval = evaluate_forces(net, ds, Split::val, ds.input_std, ds.output_std);

  const auto path = (fs::temp_directory_path() / "uenn_scatter_test.csv").string();
  write_scatter_csv(ds, eval, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("analytic") != std::string::npos);
  CHECK(header.find("predicted") != std::string::npos);
  Index lines = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == ds.count_of(Split::val) * 12);
  fs::remove(path);
}
