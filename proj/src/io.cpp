#include "uenn/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace uenn {

using json = nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), "format_double: conversion failed");
  return std::string(buf, ptr);
}

namespace {

json mat_to_json(const MatX& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatX json_to_mat(const json& j, Index rows, Index cols, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw io_error(where + ": expected " + std::to_string(rows) + " rows");
  MatX m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw io_error(where + ": expected " + std::to_string(cols) + " columns");
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Split split_from_string(const std::string& s, const std::string& where) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw io_error(where + ": unknown split '" + s + "'");
}

Activation activation_from_string(const std::string& s, const std::string& where) {
  if (s == "softsign_residue") return Activation::softsign_residue;
  if (s == "identity") return Activation::identity;
  throw io_error(where + ": unknown activation '" + s + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw io_error("write to '" + path + "' failed");
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw io_error("'" + path + "' is not valid JSON");
  return j;
}

std::string meta_path_for(const std::string& path) { return path + ".meta.json"; }

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();

  std::ostringstream lines;
  for (Index i = 0; i < ds.count(); ++i) {
    json rec;
    rec["split"] = to_string(ds.splits[static_cast<std::size_t>(i)]);
    rec["positions"] = mat_to_json(ds.records[static_cast<std::size_t>(i)].positions);
    rec["forces"] = mat_to_json(ds.records[static_cast<std::size_t>(i)].forces);
    lines << rec.dump() << '\n';
  }
  write_text_file(path, lines.str());

  json meta;
  meta["format_version"] = 1;
  meta["count"] = ds.count();
  meta["seed"] = ds.seed;
  meta["sigma_angstrom"] = ds.sigma;
  meta["r_min_angstrom"] = ds.r_min;
  meta["lj"] = {{"epsilon_ev", ds.lj.epsilon}, {"r0_angstrom", ds.lj.r0}};
  meta["splits"] = {{"train", ds.count_of(Split::train)},
                    {"val", ds.count_of(Split::val)},
                    {"test", ds.count_of(Split::test)}};
  meta["standardization"] = {{"input_std_angstrom", ds.input_std},
                             {"output_std_ev_per_angstrom", ds.output_std}};
  meta["units"] = {{"positions", "angstrom"}, {"forces", "ev_per_angstrom"}};
  write_text_file(meta_path_for(path), meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& path) {
  const json meta = parse_json_file(meta_path_for(path));
  try {
    require(meta.at("format_version").get<int>() == 1, "unsupported dataset format version");
  } catch (const json::exception& e) {
    throw io_error("dataset meta '" + meta_path_for(path) + "': " + e.what());
  }

  Dataset ds;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no + 1);
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded()) throw io_error(where + ": not valid JSON");
    try {
      ds.splits.push_back(split_from_string(rec.at("split").get<std::string>(), where));
      DataRecord r;
      r.positions = json_to_mat(rec.at("positions"), 4, 3, where + " positions");
      r.forces = json_to_mat(rec.at("forces"), 4, 3, where + " forces");
      ds.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw io_error(where + ": " + e.what());
    }
    ++line_no;
  }

  try {
    if (meta.at("count").get<Index>() != ds.count())
      throw io_error("dataset '" + path + "': meta count does not match record count");
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.sigma = meta.at("sigma_angstrom").get<double>();
    ds.r_min = meta.at("r_min_angstrom").get<double>();
    ds.lj.epsilon = meta.at("lj").at("epsilon_ev").get<double>();
    ds.lj.r0 = meta.at("lj").at("r0_angstrom").get<double>();
    ds.input_std = meta.at("standardization").at("input_std_angstrom").get<double>();
    ds.output_std = meta.at("standardization").at("output_std_ev_per_angstrom").get<double>();
    const auto& splits = meta.at("splits");
    if (splits.at("train").get<Index>() != ds.count_of(Split::train) ||
        splits.at("val").get<Index>() != ds.count_of(Split::val) ||
        splits.at("test").get<Index>() != ds.count_of(Split::test))
      throw io_error("dataset '" + path + "': meta split sizes do not match records");
  } catch (const json::exception& e) {
    throw io_error("dataset meta '" + meta_path_for(path) + "': " + e.what());
  }

  ds.validate();
  return ds;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  require(ck.field == "real" || ck.field == "complex",
          "checkpoint field must be 'real' or 'complex'");
  ck.config.validate();
  require(ck.params.size() == flat_parameter_count(ck.config, ck.field == "complex"),
          "checkpoint parameter vector length does not match the architecture");

  json j;
  j["version"] = kCheckpointVersion;
  j["field"] = ck.field;

  json cfg;
  cfg["n"] = ck.config.n;
  cfg["m"] = ck.config.m;
  cfg["widths"] = ck.config.widths;
  json acts = json::array();
  for (Activation a : ck.config.activations) acts.push_back(to_string(a));
  cfg["activations"] = std::move(acts);
  cfg["residue_a"] = ck.config.residue_a;
  j["config"] = std::move(cfg);

  j["params"] = std::vector<double>(ck.params.data(), ck.params.data() + ck.params.size());
  j["standardization"] = {{"input_std", ck.input_std}, {"output_std", ck.output_std}};
  j["dataset_seed"] = ck.dataset_seed;
  j["init_seed"] = ck.init_seed;

  json tr;
  tr["iterations"] = ck.iterations;
  tr["train_loss"] = ck.train_loss;
  tr["val_loss"] = ck.val_loss;
  tr["stopped_by_plateau"] = ck.stopped_by_plateau;
  tr["precision"] = ck.precision;
  tr["fire"] = {{"n_min", ck.fire.n_min},
                {"f_inc", ck.fire.f_inc},
                {"f_dec", ck.fire.f_dec},
                {"alpha_start", ck.fire.alpha_start},
                {"f_alpha", ck.fire.f_alpha},
                {"dt_init", ck.fire.dt_init},
                {"dt_max", ck.fire.dt_max},
                {"i_max", ck.fire.i_max},
                {"pseudo_mass", ck.fire.pseudo_mass},
                {"stop_window", ck.fire.stop_window},
                {"stop_tol", ck.fire.stop_tol}};
  j["training"] = std::move(tr);

  write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = parse_json_file(path);
  Checkpoint ck;
  try {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw io_error("checkpoint '" + path + "': unsupported version");
    ck.field = j.at("field").get<std::string>();

    const auto& cfg = j.at("config");
    ck.config.n = cfg.at("n").get<Index>();
    ck.config.m = cfg.at("m").get<Index>();
    ck.config.widths = cfg.at("widths").get<std::vector<Index>>();
    for (const auto& a : cfg.at("activations"))
      ck.config.activations.push_back(activation_from_string(a.get<std::string>(), path));
    ck.config.residue_a = cfg.at("residue_a").get<double>();

    const auto params = j.at("params").get<std::vector<double>>();
    ck.params = Eigen::Map<const VecX>(params.data(), static_cast<Index>(params.size()));
    ck.input_std = j.at("standardization").at("input_std").get<double>();
    ck.output_std = j.at("standardization").at("output_std").get<double>();
    ck.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
    ck.init_seed = j.at("init_seed").get<std::uint64_t>();

    const auto& tr = j.at("training");
    ck.iterations = tr.at("iterations").get<std::int64_t>();
    ck.train_loss = tr.at("train_loss").get<double>();
    ck.val_loss = tr.at("val_loss").get<double>();
    ck.stopped_by_plateau = tr.at("stopped_by_plateau").get<bool>();
    ck.precision = tr.at("precision").get<std::string>();
    ck.fire.n_min = tr.at("fire").at("n_min").get<Index>();
    ck.fire.f_inc = tr.at("fire").at("f_inc").get<double>();
    ck.fire.f_dec = tr.at("fire").at("f_dec").get<double>();
    ck.fire.alpha_start = tr.at("fire").at("alpha_start").get<double>();
    ck.fire.f_alpha = tr.at("fire").at("f_alpha").get<double>();
    ck.fire.dt_init = tr.at("fire").at("dt_init").get<double>();
    ck.fire.dt_max = tr.at("fire").at("dt_max").get<double>();
    ck.fire.i_max = tr.at("fire").at("i_max").get<Index>();
    ck.fire.pseudo_mass = tr.at("fire").at("pseudo_mass").get<double>();
    ck.fire.stop_window = tr.at("fire").at("stop_window").get<Index>();
    ck.fire.stop_tol = tr.at("fire").at("stop_tol").get<double>();
  } catch (const json::exception& e) {
    throw io_error("checkpoint '" + path + "': " + e.what());
  }

  try {
    require(ck.field == "real" || ck.field == "complex", "field must be 'real' or 'complex'");
    ck.config.validate();
    ck.fire.validate();
    require(ck.params.size() == flat_parameter_count(ck.config, ck.field == "complex"),
            "parameter vector length does not match the architecture");
  } catch (const contract_violation& e) {
    throw io_error("checkpoint '" + path + "': " + e.what());
  }
  return ck;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    require(row.size() == header.size(), "write_csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace uenn
