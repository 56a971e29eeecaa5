#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pufm/config.hpp"
#include "pufm/data.hpp"
#include "pufm/io.hpp"
#include "pufm/metrics.hpp"

namespace pufm {

// Samples every configured shape, cuts training patches, and writes them as
// XYZ files plus manifest.txt under cfg.paths.data_dir. Held-out eval shapes
// are written whole: a dense ground truth plus a random-subset input cloud.
// Fully deterministic: the same config reproduces every byte.
void cmd_build_data(const RunConfig& cfg);

struct EvalShapeFiles {
  std::string shape;
  std::filesystem::path input;
  std::filesystem::path gt;
};

// Reads back what cmd_build_data wrote. Patch clouds are stored normalized,
// so the returned pairs carry identity NormParams.
std::vector<PatchPair> load_train_patches(const RunConfig& cfg);
std::vector<EvalShapeFiles> list_eval_shapes(const RunConfig& cfg);

enum class TrainMethod { kFlowAligned, kFlowUnaligned, kBaselineDdpm };

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_log;
  std::vector<double> losses;  // one entry per completed iteration
  bool diverged = false;
};

// Core optimization loop over in-memory patches; writes <name>.ckpt and
// <name>.loss.tsv under out_dir. Divergence (non-finite loss or gradients)
// stops the run and saves the last finite parameters.
TrainResult train_patches(const RunConfig& cfg, const std::vector<PatchPair>& patches,
                          TrainMethod method, const std::filesystem::path& out_dir,
                          const std::string& name);

TrainResult cmd_train(const RunConfig& cfg, TrainMethod method);

struct UpsampleOptions {
  std::optional<double> inference_eta;     // defaults to the training eta
  std::optional<std::size_t> num_steps;    // defaults to cfg.flow.num_steps
};

// Patch-based upsampling: FPS seeds pick overlapping sparse_size-point
// patches, each is normalized, densified, integrated through the learned
// field, denormalized, and merged; FPS reconciliation trims the merge to
// exactly rate * input count. Rates beyond the trained factor repeat the
// stage until the target is covered.
PointCloud upsample_cloud(const PointCloud& input, std::size_t rate, const Checkpoint& ckpt,
                          const RunConfig& cfg, const UpsampleOptions& opts = {});

void cmd_upsample(const RunConfig& cfg, const std::filesystem::path& input_path,
                  std::size_t rate, const std::filesystem::path& ckpt_path,
                  const std::filesystem::path& out_path, const UpsampleOptions& opts = {});

// Evaluates prediction vs. ground truth (plus optional mesh for the
// point-to-surface metric), writes a key=value report, and appends one row to
// the shared results table.
EvalReport cmd_eval(const std::filesystem::path& pred_path, const std::filesystem::path& gt_path,
                    const std::optional<std::filesystem::path>& mesh_path,
                    const std::filesystem::path& report_path,
                    const std::filesystem::path& results_table);

struct ToyMethodResult {
  std::string method;  // aligned | unaligned | ddpm
  double final_loss = 0.0;
  std::vector<std::pair<std::size_t, double>> cd_vs_steps;
};

struct ToyReport {
  std::string demo;
  std::vector<ToyMethodResult> methods;
  std::filesystem::path out_dir;
};

// Named demos: "ring2letter" (planar) and "sphere2torus". Trains the aligned
// and unaligned flow variants plus the ddpm baseline at matched budgets,
// dumps trajectory snapshots at t in {0, 0.25, 0.5, 0.75, 1}, and writes a
// convergence table of CD vs. sampling step count per method.
ToyReport cmd_toy(const RunConfig& cfg, const std::string& demo);

}  // namespace pufm
