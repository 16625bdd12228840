#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uenn/fire.hpp"
#include "uenn/network.hpp"
#include "uenn/physics.hpp"
#include "uenn/types.hpp"

namespace uenn {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Dataset files are JSON lines (one record per line) plus a `<path>.meta.json`
// sidecar describing provenance, units and the standardization constants.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// A trained model plus everything needed to reproduce its evaluation:
// flattened parameters, standardization constants and the training record.
struct Checkpoint {
  std::string field;  // "real" or "complex"
  NetworkConfig config;
  VecX params;
  double input_std = 1.0;
  double output_std = 1.0;
  std::uint64_t dataset_seed = 0;
  std::uint64_t init_seed = 0;
  std::int64_t iterations = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool stopped_by_plateau = false;
  std::string precision;  // scalar type used during minimization
  FireConfig fire;

  template <class Scalar>
  Network<Scalar> to_network() const {
    const char* want = is_complex_v<Scalar> ? "complex" : "real";
    require(field == want,
            std::string("checkpoint field is '") + field + "', expected '" + want + "'");
    Network<Scalar> net = Network<Scalar>::zeros(config);
    unflatten_parameters(params, net);
    return net;
  }

  template <class Scalar>
  static Checkpoint from_network(const Network<Scalar>& net) {
    Checkpoint ck;
    ck.field = is_complex_v<Scalar> ? "complex" : "real";
    ck.config = net.config;
    ck.params = flatten_parameters(net);
    return ck;
  }
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Plain CSV with a header row; cells are written verbatim.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace uenn
