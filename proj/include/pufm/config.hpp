#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "pufm/data.hpp"
#include "pufm/densify.hpp"
#include "pufm/flow.hpp"
#include "pufm/transport.hpp"
#include "pufm/velocity_net.hpp"

namespace pufm {

enum class TransportSolver { kAuto, kExact, kAuction };

struct DatasetConfig {
  std::vector<ShapeSpec> train_shapes;
  std::vector<ShapeSpec> eval_shapes;
  std::size_t patches_per_shape = 32;
  std::size_t dense_size = 1024;
  std::size_t sparse_size = 256;
  std::size_t surface_points = 16384;  // dense sampling per source shape
  std::size_t rate = 4;                // dense/sparse cardinality ratio
};

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t batch = 8;
  std::size_t iterations = 2000;
};

struct PathsConfig {
  std::string data_dir = "data";
  std::string out_dir = "out";
};

struct RunConfig {
  DatasetConfig dataset;
  DensifyConfig densify;
  ScheduleConfig flow;
  NetArch net;
  std::uint64_t net_seed = 1;
  OptimizerConfig optimizer;
  TransportConfig transport;
  TransportSolver solver = TransportSolver::kAuto;
  PathsConfig paths;
  std::uint64_t master_seed = 42;
  std::size_t workers = 1;
};

// Defaults: six analytic training shapes, two held-out, 4x rate.
RunConfig default_config();

// Line-oriented `key = value` under [section] headers, applied on top of the
// defaults. Unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

// Canonical printed form; parse_config(print_config(c)) reproduces c.
std::string print_config(const RunConfig& cfg);

// FNV-1a over the canonical printed form.
std::uint64_t config_hash(const RunConfig& cfg);

// Throws ConfigError on inconsistent settings (gamma vs. rate, sizes, ...).
void validate(const RunConfig& cfg);

// PUFM_SEED environment variable overrides the master seed.
void apply_env_seed(RunConfig& cfg);

// Transport dispatch honoring the configured solver choice.
TransportConfig solver_config(const RunConfig& cfg);

}  // namespace pufm
