#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uenn/pipeline.hpp"

namespace {

std::vector<uenn::Index> parse_arch(const std::string& s) {
  std::vector<uenn::Index> widths;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t dash = std::min(s.find('-', pos), s.size());
    const std::string tok = s.substr(pos, dash - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw CLI::ValidationError("--arch", "expected dash-separated widths like 6-50-90-100-80-50-4");
    widths.push_back(static_cast<uenn::Index>(std::stoll(tok)));
    pos = dash + 1;
  }
  if (widths.size() < 2)
    throw CLI::ValidationError("--arch", "need at least input and output widths");
  return widths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unitary-equivariant force networks on Lennard-Jones argon"};
  app.require_subcommand(1);

  uenn::GenDataArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("gen-data", "Generate a force dataset");
  cmd_gen->add_option("--count", gen.count, "Number of records")->capture_default_str();
  cmd_gen->add_option("--seed", gen.master_seed, "Master seed")->capture_default_str();
  cmd_gen->add_option("--sigma", gen.sigma, "Coordinate std in Angstrom")->capture_default_str();
  cmd_gen->add_option("--r-min", gen.r_min, "Minimum pair distance in Angstrom")
      ->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "Output dataset path (JSON lines)")->required();

  uenn::TrainArgs tr;
  std::string arch = "6-50-90-100-80-50-4";
  std::string precision = "double";
  CLI::App* cmd_train = app.add_subcommand("train", "Train a force model");
  cmd_train->add_option("--data", tr.dataset, "Dataset path")->required();
  cmd_train->add_option("--out", tr.out, "Checkpoint output path (.json)")->required();
  cmd_train->add_option("--arch", arch, "Dash-separated layer widths")->capture_default_str();
  cmd_train->add_option("--seed", tr.master_seed, "Master seed")->capture_default_str();
  cmd_train->add_option("--iterations", tr.iterations, "Gradient evaluation budget")
      ->capture_default_str();
  cmd_train->add_option("--log-interval", tr.log_interval, "History row spacing")
      ->capture_default_str();
  cmd_train->add_option("--stop-window", tr.stop_window,
                        "Plateau detection window in iterations; 0 disables")
      ->capture_default_str();
  cmd_train->add_option("--stop-tol", tr.stop_tol, "Plateau relative-change tolerance")
      ->capture_default_str();
  cmd_train->add_option("--precision", precision, "Minimization scalar type")
      ->check(CLI::IsMember({"double", "float"}))
      ->capture_default_str();

  uenn::EvalArgs ev;
  std::string split = "test";
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate force RMSD on a split");
  cmd_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  cmd_eval->add_option("--data", ev.dataset, "Dataset path")->required();
  cmd_eval->add_option("--split", split, "train, val, or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  cmd_eval->add_option("--out", ev.scatter_out, "Scatter CSV path (analytic vs predicted)");

  uenn::SimulateArgs sim;
  CLI::App* cmd_sim = app.add_subcommand("simulate", "Run MD against the analytic reference");
  cmd_sim->add_option("--provider", sim.provider, "'analytic' or a checkpoint path")->required();
  cmd_sim->add_option("--out", sim.out_prefix, "Output prefix for CSV files")->required();
  cmd_sim->add_option("--samples", sim.samples, "Independent velocity draws")
      ->capture_default_str();
  cmd_sim->add_option("--steps", sim.steps, "MD steps per sample")->capture_default_str();
  cmd_sim->add_option("--dt", sim.dt, "Time step in fs")->capture_default_str();
  cmd_sim->add_option("--temperature", sim.temperature, "Initial temperature in K")
      ->capture_default_str();
  cmd_sim->add_option("--seed", sim.master_seed, "Master seed")->capture_default_str();

  uenn::CheckArgs chk;
  CLI::App* cmd_check = app.add_subcommand("check", "Run a property suite");
  cmd_check->add_option("--mode", chk.mode, "equivariance, gradient, or parity")
      ->required()
      ->check(CLI::IsMember({"equivariance", "gradient", "parity"}));
  cmd_check->add_option("--checkpoint", chk.checkpoint,
                        "Check this model instead of random networks");
  cmd_check->add_option("--seed", chk.master_seed, "Master seed")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (cmd_train->parsed()) {
      tr.widths = parse_arch(arch);
      tr.precision = uenn::precision_from_string(precision);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 0 covers --help and --version
  }

  try {
    if (cmd_gen->parsed()) {
      uenn::run_gen_data(gen);
    } else if (cmd_train->parsed()) {
      uenn::run_train(tr);
    } else if (cmd_eval->parsed()) {
      if (split == "train") ev.split = uenn::Split::train;
      else if (split == "val") ev.split = uenn::Split::val;
      else ev.split = uenn::Split::test;
      uenn::run_eval(ev);
    } else if (cmd_sim->parsed()) {
      uenn::run_simulate(sim);
    } else if (cmd_check->parsed()) {
      if (!uenn::run_check(chk)) return 3;
    }
  } catch (const uenn::contract_violation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const uenn::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const uenn::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
