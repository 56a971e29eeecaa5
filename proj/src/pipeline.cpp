#include "pufm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "pufm/baselines.hpp"
#include "pufm/densify.hpp"
#include "pufm/errors.hpp"
#include "pufm/flow.hpp"
#include "pufm/transport.hpp"

namespace pufm {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

PointCloud read_cloud(const fs::path& path) {
  if (path.extension() == ".ply") return read_ply(path);
  return read_xyz(path);
}

void write_cloud(const PointCloud& cloud, const fs::path& path) {
  if (path.extension() == ".ply") write_ply(cloud, path);
  else write_xyz(cloud, path);
}

}  // namespace

void cmd_build_data(const RunConfig& cfg) {
  validate(cfg);
  const fs::path dir = cfg.paths.data_dir;
  make_dir(dir);

  std::ostringstream manifest;
  manifest << "# patch manifest\n";
  manifest << fmt("config_hash=%016llx\n", static_cast<unsigned long long>(config_hash(cfg)));

  for (std::size_t si = 0; si < cfg.dataset.train_shapes.size(); ++si) {
    const ShapeSpec& spec = cfg.dataset.train_shapes[si];
    Rng srng = make_rng(derive_seed(cfg.master_seed, "train-surface", si));
    const PointCloud surface = sample_shape(spec, cfg.dataset.surface_points, srng);
    Rng prng = make_rng(derive_seed(cfg.master_seed, "train-patches", si));
    const auto patches = extract_patches(surface, cfg.dataset.patches_per_shape,
                                         cfg.dataset.dense_size, cfg.dataset.sparse_size, prng);
    for (std::size_t pi = 0; pi < patches.size(); ++pi) {
      const std::string base = fmt("train_s%02zu_p%03zu", si, pi);
      write_xyz(patches[pi].sparse, dir / (base + "_sparse.xyz"));
      write_xyz(patches[pi].dense, dir / (base + "_dense.xyz"));
      manifest << "patch\tshape=" << to_string(spec) << "\tindex=" << pi
               << "\tseed_index=" << patches[pi].seed_index << "\tsparse=" << base
               << "_sparse.xyz\tdense=" << base << "_dense.xyz\n";
    }
  }

  for (std::size_t si = 0; si < cfg.dataset.eval_shapes.size(); ++si) {
    const ShapeSpec& spec = cfg.dataset.eval_shapes[si];
    Rng srng = make_rng(derive_seed(cfg.master_seed, "eval-surface", si));
    const PointCloud gt = sample_shape(spec, cfg.dataset.surface_points, srng);
    const std::size_t n_input =
        std::max<std::size_t>(1, cfg.dataset.surface_points / cfg.dataset.rate);
    // Uniformly random subset, mirroring how training pairs subsample their
    // dense patches.
    Rng irng = make_rng(derive_seed(cfg.master_seed, "eval-input", si));
    std::vector<std::size_t> pool(gt.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_input; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, gt.size() - 1);
      std::swap(pool[i], pool[pick(irng)]);
    }
    pool.resize(n_input);
    std::sort(pool.begin(), pool.end());
    const PointCloud input = gather(gt, pool);
    const std::string base = fmt("eval_s%02zu", si);
    write_xyz(gt, dir / (base + "_gt.xyz"));
    write_xyz(input, dir / (base + "_input.xyz"));
    manifest << "eval\tshape=" << to_string(spec) << "\tinput=" << base << "_input.xyz\tgt="
             << base << "_gt.xyz\n";
  }

  write_text(dir / "manifest.txt", manifest.str());
  write_text(dir / "config.ini", print_config(cfg));
}

namespace {

// Splits a tab-separated manifest record into its key=value fields.
std::vector<std::pair<std::string, std::string>> record_fields(const std::string& line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, '\t')) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

std::string field_or_throw(const std::vector<std::pair<std::string, std::string>>& fields,
                           const std::string& key, int lineno) {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  throw FormatError("manifest line " + std::to_string(lineno) + ": missing field '" + key + "'");
}

}  // namespace

std::vector<PatchPair> load_train_patches(const RunConfig& cfg) {
  const fs::path dir = cfg.paths.data_dir;
  std::ifstream in(dir / "manifest.txt");
  if (!in)
    throw IoError("dataset missing: cannot open " + (dir / "manifest.txt").string() +
                  " (run build-data first)");

  std::vector<PatchPair> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("patch\t", 0) != 0) continue;
    const auto fields = record_fields(line);
    PatchPair p;
    p.source_id = field_or_throw(fields, "shape", lineno);
    p.seed_index = std::stoull(field_or_throw(fields, "seed_index", lineno));
    p.sparse = read_xyz(dir / field_or_throw(fields, "sparse", lineno));
    p.dense = read_xyz(dir / field_or_throw(fields, "dense", lineno));
    if (p.sparse.size() != cfg.dataset.sparse_size || p.dense.size() != cfg.dataset.dense_size)
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": patch sizes do not match the config");
    out.push_back(std::move(p));
  }
  if (out.empty()) throw FormatError("manifest lists no training patches");
  return out;
}

std::vector<EvalShapeFiles> list_eval_shapes(const RunConfig& cfg) {
  const fs::path dir = cfg.paths.data_dir;
  std::ifstream in(dir / "manifest.txt");
  if (!in)
    throw IoError("dataset missing: cannot open " + (dir / "manifest.txt").string() +
                  " (run build-data first)");
  std::vector<EvalShapeFiles> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("eval\t", 0) != 0) continue;
    const auto fields = record_fields(line);
    EvalShapeFiles e;
    e.shape = field_or_throw(fields, "shape", lineno);
    e.input = dir / field_or_throw(fields, "input", lineno);
    e.gt = dir / field_or_throw(fields, "gt", lineno);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

struct ItemResult {
  double loss = 0.0;
  std::vector<float> grads;
};

// One flow-matching batch item: densify, optionally align, draw t, regress
// the straight-path velocity.
ItemResult flow_item(const VelocityNet<float>& net, const RunConfig& cfg,
                     const TransportConfig& tcfg, const std::vector<PatchPair>& patches,
                     AssignmentCache& cache, bool aligned, std::size_t patch_id,
                     std::uint64_t dseed, std::uint64_t iter, std::uint64_t j,
                     std::size_t batch) {
  const PatchPair& pp = patches[patch_id];
  DensifyConfig dcfg = cfg.densify;
  dcfg.rng_seed = dseed;
  const PointCloud x0 = midpoint_densify(pp.sparse, dcfg);
  PointCloud x1 = pp.dense;
  if (aligned) {
    const Assignment a = cache.get_or_compute(
        patch_id, dseed, [&] { return assign(cost_matrix(x0, x1), tcfg); });
    x1 = align(x1, a);
  }

  Rng trng = make_rng(derive_seed(cfg.master_seed, "t", iter, j));
  const double t = sample_t(trng, cfg.flow);
  const FlowState state = interpolate(x0, x1, t);
  const std::vector<Vec3> target = velocity_target(x0, x1);

  VelocityNet<float>::Tape tape;
  const std::vector<float> out =
      net.forward(flatten<float>(state.x_t), static_cast<float>(t), nullptr, &tape);

  ItemResult r;
  r.loss = fm_loss(unflatten(out), target);
  const std::vector<float> tf = flatten<float>(target);
  std::vector<float> upstream(out.size());
  const float scale =
      2.0f / (3.0f * static_cast<float>(x0.size()) * static_cast<float>(batch));
  for (std::size_t k = 0; k < out.size(); ++k) upstream[k] = (out[k] - tf[k]) * scale;
  r.grads = net.backward(tape, upstream);
  return r;
}

// One diffusion-baseline item: noise the dense cloud, condition on the
// densified sparse cloud, regress x1 - eps.
ItemResult ddpm_item(const VelocityNet<float>& net, const RunConfig& cfg,
                     const DiffusionSchedule& sched, const std::vector<PatchPair>& patches,
                     std::size_t patch_id, std::uint64_t dseed, std::uint64_t iter,
                     std::uint64_t j, std::size_t batch) {
  const PatchPair& pp = patches[patch_id];
  DensifyConfig dcfg = cfg.densify;
  dcfg.rng_seed = dseed;
  const PointCloud cond = midpoint_densify(pp.sparse, dcfg);

  Rng trng = make_rng(derive_seed(cfg.master_seed, "t", iter, j));
  const std::size_t t_index =
      std::uniform_int_distribution<std::size_t>(0, sched.num_steps())(trng);
  Rng erng = make_rng(derive_seed(cfg.master_seed, "eps", iter, j));
  const auto [x_t, eps] = diffuse_forward(pp.dense, t_index, erng, sched);

  std::vector<Vec3> target(pp.dense.size());
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = pp.dense[i] - eps[i];

  const double t = static_cast<double>(t_index) / static_cast<double>(sched.num_steps());
  const std::vector<float> cond_flat = flatten<float>(cond);
  VelocityNet<float>::Tape tape;
  const std::vector<float> out =
      net.forward(flatten<float>(x_t), static_cast<float>(t), &cond_flat, &tape);

  ItemResult r;
  r.loss = baseline_loss(unflatten(out), target);
  const std::vector<float> tf = flatten<float>(target);
  std::vector<float> upstream(out.size());
  const float scale =
      2.0f / (3.0f * static_cast<float>(target.size()) * static_cast<float>(batch));
  for (std::size_t k = 0; k < out.size(); ++k) upstream[k] = (out[k] - tf[k]) * scale;
  r.grads = net.backward(tape, upstream);
  return r;
}

}  // namespace

TrainResult train_patches(const RunConfig& cfg, const std::vector<PatchPair>& patches,
                          TrainMethod method, const fs::path& out_dir, const std::string& name) {
  validate(cfg);
  if (patches.empty()) throw std::invalid_argument("train: no patches");
  for (const PatchPair& p : patches) {
    check_cloud(p.sparse);
    check_cloud(p.dense);
    if (p.dense.size() != cfg.dataset.rate * p.sparse.size())
      throw std::invalid_argument("train: patch cardinality does not match the configured rate");
  }
  make_dir(out_dir);

  NetArch arch = cfg.net;
  arch.conditioned = method == TrainMethod::kBaselineDdpm;
  Rng init_rng = make_rng(derive_seed(cfg.master_seed, "net-init", cfg.net_seed));
  VelocityNet<float> net = init_params<float>(arch, init_rng);

  AdamState<float> adam(net.params.size());
  adam.lr = cfg.optimizer.lr;
  adam.beta1 = cfg.optimizer.beta1;
  adam.beta2 = cfg.optimizer.beta2;

  const DiffusionSchedule sched(100);
  const TransportConfig tcfg = solver_config(cfg);
  AssignmentCache cache;
  std::uint64_t cache_epoch = ~std::uint64_t{0};

  const std::size_t npatches = patches.size();
  const std::size_t batch = cfg.optimizer.batch;
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, (npatches + batch - 1) / batch);

  TrainResult result;
  result.checkpoint = out_dir / (name + ".ckpt");
  result.loss_log = out_dir / (name + ".loss.tsv");
  std::ofstream log(result.loss_log, std::ios::binary);
  if (!log) throw IoError("cannot open " + result.loss_log.string() + " for writing");

  std::vector<float> last_good = net.params;
  AdamState<float> last_good_adam = adam;
  std::uint64_t completed = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::uint64_t iter = 0; iter < cfg.optimizer.iterations; ++iter) {
    const std::uint64_t epoch = iter / steps_per_epoch;
    if (epoch != cache_epoch) {
      cache.clear();
      cache_epoch = epoch;
    }

    Rng brng = make_rng(derive_seed(cfg.master_seed, "batch", iter));
    std::vector<std::size_t> ids(batch);
    for (auto& id : ids) id = std::uniform_int_distribution<std::size_t>(0, npatches - 1)(brng);

    std::vector<ItemResult> items(batch);
    auto work = [&](std::size_t j) {
      const std::uint64_t dseed = derive_seed(cfg.master_seed, "densify", ids[j], epoch);
      if (method == TrainMethod::kBaselineDdpm)
        items[j] = ddpm_item(net, cfg, sched, patches, ids[j], dseed, iter, j, batch);
      else
        items[j] = flow_item(net, cfg, tcfg, patches, cache,
                             method == TrainMethod::kFlowAligned, ids[j], dseed, iter, j, batch);
    };

    try {
      if (cfg.workers <= 1) {
        for (std::size_t j = 0; j < batch; ++j) work(j);
      } else {
        std::vector<std::thread> pool;
        std::mutex err_mutex;
        std::exception_ptr err;
        for (std::size_t w = 0; w < std::min(cfg.workers, batch); ++w) {
          pool.emplace_back([&, w] {
            for (std::size_t j = w; j < batch; j += cfg.workers) {
              try {
                work(j);
              } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
              }
            }
          });
        }
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
      }

      // Fixed accumulation order keeps the result identical for any worker count.
      std::vector<float> grads(net.params.size(), 0.0f);
      double loss_sum = 0.0;
      for (std::size_t j = 0; j < batch; ++j) {
        loss_sum += items[j].loss;
        const auto& g = items[j].grads;
        for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += g[k];
      }
      const double loss = loss_sum / static_cast<double>(batch);
      if (!std::isfinite(loss)) throw NumericalError("training loss is not finite");

      // The wall-time column breaks bitwise log comparison, so single-worker
      // runs (the reproducibility mode) log zero there.
      double seconds = 0.0;
      if (cfg.workers > 1)
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      log << fmt("%llu\t%.17g\t%.3f\n", static_cast<unsigned long long>(iter), loss, seconds);
      result.losses.push_back(loss);

      adam_step(net.params, grads, adam);
      last_good = net.params;
      last_good_adam = adam;
      completed = iter + 1;
    } catch (const NumericalError&) {
      result.diverged = true;
      break;
    }
  }

  Checkpoint ck;
  ck.arch = arch;
  ck.params = last_good;
  ck.adam = last_good_adam;
  ck.meta.train_step = completed;
  ck.meta.config_hash = config_hash(cfg);
  save_checkpoint(ck, result.checkpoint);
  return result;
}

TrainResult cmd_train(const RunConfig& cfg, TrainMethod method) {
  const auto patches = load_train_patches(cfg);
  const char* name = method == TrainMethod::kFlowAligned     ? "flow"
                     : method == TrainMethod::kFlowUnaligned ? "flow-noalign"
                                                             : "ddpm";
  return train_patches(cfg, patches, method, cfg.paths.out_dir, name);
}

namespace {

// One trained-factor application: overlapping patches, densify, integrate,
// merge, trim back to exactly gamma times the stage input count.
PointCloud upsample_stage(const PointCloud& cloud, const VelocityNet<float>& net,
                          const RunConfig& cfg, double eta, const ScheduleConfig& flow_cfg,
                          std::size_t stage_index) {
  const std::size_t n = cloud.size();
  const std::size_t gamma = cfg.densify.gamma;
  const std::size_t target = n * gamma;

  std::vector<std::vector<std::size_t>> patch_indices;
  if (n <= cfg.dataset.sparse_size) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    patch_indices.push_back(std::move(all));
  } else {
    const std::size_t psize = cfg.dataset.sparse_size;
    const std::size_t npatches = std::min(n, (2 * n + psize - 1) / psize);
    const auto seeds = fps(cloud, npatches);
    const KdTree tree(cloud);
    for (const std::size_t s : seeds) patch_indices.push_back(tree.knn(cloud[s], psize));
  }

  const VelocityField field = [&net](const PointCloud& x, double t) {
    return unflatten(net.forward(flatten<float>(x), static_cast<float>(t)));
  };

  PointCloud merged;
  merged.reserve(patch_indices.size() * patch_indices.front().size() * gamma);
  for (std::size_t i = 0; i < patch_indices.size(); ++i) {
    const PointCloud patch = gather(cloud, patch_indices[i]);
    auto [patch_n, norm] = normalize(patch);
    DensifyConfig dcfg = cfg.densify;
    dcfg.eta = eta;
    dcfg.rng_seed = derive_seed(cfg.master_seed, "upsample", stage_index, i);
    const PointCloud x0 = midpoint_densify(patch_n, dcfg);
    const PointCloud sampled = euler_sample(field, x0, flow_cfg);
    for (const Vec3& p : denormalize(sampled, norm)) merged.push_back(p);
  }

  if (merged.size() == target) return merged;
  return gather(merged, fps(merged, target));
}

}  // namespace

PointCloud upsample_cloud(const PointCloud& input, std::size_t rate, const Checkpoint& ckpt,
                          const RunConfig& cfg, const UpsampleOptions& opts) {
  check_cloud(input);
  if (rate < 2) throw std::invalid_argument("upsample: rate must be at least 2");
  if (ckpt.arch.conditioned)
    throw FormatError("checkpoint holds the diffusion baseline; upsampling needs a flow model");

  VelocityNet<float> net(ckpt.arch);
  net.params = ckpt.params;

  const double eta = opts.inference_eta.value_or(cfg.densify.eta);
  ScheduleConfig flow_cfg = cfg.flow;
  if (opts.num_steps) flow_cfg.num_steps = *opts.num_steps;

  const std::size_t target = rate * input.size();
  PointCloud current = input;
  std::size_t stage_index = 0;
  while (current.size() < target)
    current = upsample_stage(current, net, cfg, eta, flow_cfg, stage_index++);
  if (current.size() == target) return current;
  return gather(current, fps(current, target));
}

void cmd_upsample(const RunConfig& cfg, const fs::path& input_path, std::size_t rate,
                  const fs::path& ckpt_path, const fs::path& out_path,
                  const UpsampleOptions& opts) {
  if (rate < 2) throw ConfigError("upsample: rate must be at least 2");
  const PointCloud input = read_cloud(input_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const PointCloud output = upsample_cloud(input, rate, ckpt, cfg, opts);
  if (out_path.has_parent_path()) make_dir(out_path.parent_path());
  write_cloud(output, out_path);
}

EvalReport cmd_eval(const fs::path& pred_path, const fs::path& gt_path,
                    const std::optional<fs::path>& mesh_path, const fs::path& report_path,
                    const fs::path& results_table) {
  const PointCloud pred = read_cloud(pred_path);
  const PointCloud gt = read_cloud(gt_path);
  std::optional<TriangleMesh> mesh;
  if (mesh_path) mesh = read_obj(*mesh_path);

  EvalReport rep = evaluate_clouds(pred, gt, mesh ? &*mesh : nullptr);
  rep.pred_source = pred_path.string();
  rep.gt_source = gt_path.string();
  if (mesh_path) rep.mesh_source = mesh_path->string();

  if (report_path.has_parent_path()) make_dir(report_path.parent_path());
  write_text(report_path, to_key_value(rep));

  const bool fresh = !fs::exists(results_table);
  if (results_table.has_parent_path()) make_dir(results_table.parent_path());
  std::ofstream table(results_table, std::ios::binary | std::ios::app);
  if (!table) throw IoError("cannot open " + results_table.string() + " for writing");
  if (fresh) table << "pred\tgt\tcd\thd\tp2f\n";
  table << rep.pred_source << "\t" << rep.gt_source << "\t" << fmt("%.9g", rep.cd) << "\t"
        << fmt("%.9g", rep.hd) << "\t" << (rep.p2f ? fmt("%.9g", *rep.p2f) : std::string("-"))
        << "\n";
  return rep;
}

ToyReport cmd_toy(const RunConfig& cfg_in, const std::string& demo) {
  ShapeSpec from, to;
  if (demo == "ring2letter") {
    from = parse_shape("ring:0.6,1.0");
    to = parse_shape("letter");
  } else if (demo == "sphere2torus") {
    from = parse_shape("sphere:1.0");
    to = parse_shape("torus:1.0,0.3");
  } else {
    throw ConfigError("unknown toy demo '" + demo + "' (have: ring2letter, sphere2torus)");
  }

  // The toy task is equal-cardinality shape-to-shape transport.
  RunConfig cfg = cfg_in;
  cfg.dataset.rate = 1;
  cfg.densify.gamma = 1;
  cfg.dataset.dense_size = cfg.dataset.sparse_size;
  validate(cfg);

  const std::size_t n = cfg.dataset.sparse_size;
  Rng srng = make_rng(derive_seed(cfg.master_seed, "toy-source"));
  Rng trng = make_rng(derive_seed(cfg.master_seed, "toy-target"));
  const PointCloud source = normalize(sample_shape(from, n, srng)).first;
  const PointCloud target = normalize(sample_shape(to, n, trng)).first;

  const fs::path out_dir = fs::path(cfg.paths.out_dir) / ("toy-" + demo);
  make_dir(out_dir);
  write_xyz(source, out_dir / "source.xyz");
  write_xyz(target, out_dir / "target.xyz");

  std::vector<PatchPair> patches(1);
  patches[0].sparse = source;
  patches[0].dense = target;
  patches[0].source_id = demo;

  DensifyConfig eval_densify = cfg.densify;
  eval_densify.rng_seed = derive_seed(cfg.master_seed, "toy-eval-densify");
  const PointCloud x0_eval = midpoint_densify(source, eval_densify);

  const DiffusionSchedule sched(100);
  constexpr std::size_t kStepGrid[] = {1, 2, 5, 10, 20, 30, 50, 100};
  constexpr std::size_t kSnapshotSteps = 8;  // trajectory states at t = k/8
  const std::pair<std::size_t, const char*> kSnapshots[] = {
      {0, "000"}, {2, "025"}, {4, "050"}, {6, "075"}, {8, "100"}};

  ToyReport report;
  report.demo = demo;
  report.out_dir = out_dir;

  std::ostringstream conv;
  conv << "method\tsteps\tcd\n";

  const std::pair<TrainMethod, const char*> methods[] = {
      {TrainMethod::kFlowAligned, "aligned"},
      {TrainMethod::kFlowUnaligned, "unaligned"},
      {TrainMethod::kBaselineDdpm, "ddpm"},
  };
  for (const auto& [method, mname] : methods) {
    const TrainResult tr =
        train_patches(cfg, patches, method, out_dir, std::string("toy-") + mname);
    const Checkpoint ck = load_checkpoint(tr.checkpoint);
    VelocityNet<float> net(ck.arch);
    net.params = ck.params;

    ToyMethodResult mr;
    mr.method = mname;
    mr.final_loss = tr.losses.empty() ? std::nan("") : tr.losses.back();

    if (method != TrainMethod::kBaselineDdpm) {
      const VelocityField field = [&net](const PointCloud& x, double t) {
        return unflatten(net.forward(flatten<float>(x), static_cast<float>(t)));
      };
      ScheduleConfig snap_cfg = cfg.flow;
      snap_cfg.num_steps = kSnapshotSteps;
      std::vector<PointCloud> traj;
      euler_sample(field, x0_eval, snap_cfg, &traj);
      for (const auto& [idx, label] : kSnapshots)
        write_xyz(traj[idx], out_dir / (std::string(mname) + "-t" + label + ".xyz"));

      for (const std::size_t steps : kStepGrid) {
        ScheduleConfig sc = cfg.flow;
        sc.num_steps = steps;
        const PointCloud y = euler_sample(field, x0_eval, sc);
        mr.cd_vs_steps.emplace_back(steps, chamfer(y, target));
      }
    } else {
      const std::vector<float> cond_flat = flatten<float>(x0_eval);
      const VelocityField field = [&net, &cond_flat](const PointCloud& x, double t) {
        return unflatten(net.forward(flatten<float>(x), static_cast<float>(t), &cond_flat));
      };
      {
        std::vector<PointCloud> traj;
        Rng start_rng = make_rng(derive_seed(cfg.master_seed, "toy-ddpm-start"));
        baseline_sample(field, n, kSnapshotSteps, sched, start_rng, nullptr, &traj);
        for (const auto& [idx, label] : kSnapshots)
          write_xyz(traj[idx], out_dir / (std::string(mname) + "-t" + label + ".xyz"));
      }
      for (const std::size_t steps : kStepGrid) {
        // Same Gaussian start for every step count isolates the step effect.
        Rng start_rng = make_rng(derive_seed(cfg.master_seed, "toy-ddpm-start"));
        const PointCloud y = baseline_sample(field, n, steps, sched, start_rng);
        mr.cd_vs_steps.emplace_back(steps, chamfer(y, target));
      }
    }

    for (const auto& [steps, cd] : mr.cd_vs_steps)
      conv << mname << "\t" << steps << "\t" << fmt("%.9g", cd) << "\n";
    report.methods.push_back(std::move(mr));
  }

  write_text(out_dir / "convergence.tsv", conv.str());
  std::ostringstream rep;
  rep << "demo=" << demo << "\n";
  for (const ToyMethodResult& mr : report.methods)
    rep << "method=" << mr.method << "\tfinal_loss=" << fmt("%.17g", mr.final_loss) << "\n";
  write_text(out_dir / "report.txt", rep.str());
  return report;
}

}  // namespace pufm
