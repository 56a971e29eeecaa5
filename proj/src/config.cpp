#include "pufm/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "pufm/errors.hpp"
#include "pufm/rng.hpp"

namespace pufm {

RunConfig default_config() {
  RunConfig cfg;
  for (const char* s : {"sphere:1.0", "sphere:0.6", "torus:1.0,0.3", "torus:0.75,0.2",
                        "bump:1.0,0.5,0.3", "bump:1.0,0.35,0.45"})
    cfg.dataset.train_shapes.push_back(parse_shape(s));
  for (const char* s : {"torus:1.1,0.4", "bump:1.0,0.65,0.25"})
    cfg.dataset.eval_shapes.push_back(parse_shape(s));
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest decimal that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_shapes(const std::vector<ShapeSpec>& shapes) {
  std::string out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (i) out += ";";
    out += to_string(shapes[i]);
  }
  return out;
}

std::vector<ShapeSpec> parse_shapes(const std::string& text) {
  std::vector<ShapeSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_shape(item));
  }
  return out;
}

std::uint64_t parse_u64(const std::string& v, int line) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("config line " + std::to_string(line) + ": bad integer '" + v + "'");
  return out;
}

double parse_f64(const std::string& v, int line) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError("config line " + std::to_string(line) + ": bad number '" + v + "'");
  return out;
}

const char* to_cstr(TimestepLaw law) {
  return law == TimestepLaw::kCosine ? "cosine" : "uniform";
}
const char* to_cstr(SamplerMode mode) {
  return mode == SamplerMode::kEuler ? "euler" : "literal";
}
const char* to_cstr(TransportSolver s) {
  switch (s) {
    case TransportSolver::kAuto: return "auto";
    case TransportSolver::kExact: return "exact";
    default: return "auction";
  }
}

}  // namespace

std::string print_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[dataset]\n";
  os << "train_shapes = " << fmt_shapes(cfg.dataset.train_shapes) << "\n";
  os << "eval_shapes = " << fmt_shapes(cfg.dataset.eval_shapes) << "\n";
  os << "patches_per_shape = " << cfg.dataset.patches_per_shape << "\n";
  os << "dense_size = " << cfg.dataset.dense_size << "\n";
  os << "sparse_size = " << cfg.dataset.sparse_size << "\n";
  os << "surface_points = " << cfg.dataset.surface_points << "\n";
  os << "rate = " << cfg.dataset.rate << "\n";
  os << "\n[densify]\n";
  os << "gamma = " << cfg.densify.gamma << "\n";
  os << "eta = " << fmt_double(cfg.densify.eta) << "\n";
  os << "\n[flow]\n";
  os << "t_law = " << to_cstr(cfg.flow.t_law) << "\n";
  os << "num_steps = " << cfg.flow.num_steps << "\n";
  os << "sampler_mode = " << to_cstr(cfg.flow.sampler_mode) << "\n";
  os << "\n[net]\n";
  os << "enc_hidden = " << cfg.net.enc_hidden << "\n";
  os << "feat = " << cfg.net.feat << "\n";
  os << "dec_hidden = " << cfg.net.dec_hidden << "\n";
  os << "time_dim = " << cfg.net.time_dim << "\n";
  os << "seed = " << cfg.net_seed << "\n";
  os << "\n[optimizer]\n";
  os << "lr = " << fmt_double(cfg.optimizer.lr) << "\n";
  os << "beta1 = " << fmt_double(cfg.optimizer.beta1) << "\n";
  os << "beta2 = " << fmt_double(cfg.optimizer.beta2) << "\n";
  os << "batch = " << cfg.optimizer.batch << "\n";
  os << "iterations = " << cfg.optimizer.iterations << "\n";
  os << "\n[transport]\n";
  os << "solver = " << to_cstr(cfg.solver) << "\n";
  os << "exact_max_n = " << cfg.transport.exact_max_n << "\n";
  os << "epsilon = " << fmt_double(cfg.transport.epsilon) << "\n";
  os << "\n[paths]\n";
  os << "data_dir = " << cfg.paths.data_dir << "\n";
  os << "out_dir = " << cfg.paths.out_dir << "\n";
  os << "\n[run]\n";
  os << "master_seed = " << cfg.master_seed << "\n";
  os << "workers = " << cfg.workers << "\n";
  return os.str();
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg = default_config();
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "dataset" && section != "densify" && section != "flow" &&
          section != "net" && section != "optimizer" && section != "transport" &&
          section != "paths" && section != "run")
        throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" +
                          section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto unknown = [&]() -> ConfigError {
      return ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                         "' in section [" + section + "]");
    };

    try {
      if (section == "dataset") {
        if (key == "train_shapes") cfg.dataset.train_shapes = parse_shapes(value);
        else if (key == "eval_shapes") cfg.dataset.eval_shapes = parse_shapes(value);
        else if (key == "patches_per_shape") cfg.dataset.patches_per_shape = parse_u64(value, lineno);
        else if (key == "dense_size") cfg.dataset.dense_size = parse_u64(value, lineno);
        else if (key == "sparse_size") cfg.dataset.sparse_size = parse_u64(value, lineno);
        else if (key == "surface_points") cfg.dataset.surface_points = parse_u64(value, lineno);
        else if (key == "rate") cfg.dataset.rate = parse_u64(value, lineno);
        else throw unknown();
      } else if (section == "densify") {
        if (key == "gamma") cfg.densify.gamma = parse_u64(value, lineno);
        else if (key == "eta") cfg.densify.eta = parse_f64(value, lineno);
        else throw unknown();
      } else if (section == "flow") {
        if (key == "t_law") {
          if (value == "cosine") cfg.flow.t_law = TimestepLaw::kCosine;
          else if (value == "uniform") cfg.flow.t_law = TimestepLaw::kUniform;
          else throw ConfigError("config line " + std::to_string(lineno) + ": t_law must be cosine or uniform");
        } else if (key == "num_steps") cfg.flow.num_steps = parse_u64(value, lineno);
        else if (key == "sampler_mode") {
          if (value == "euler") cfg.flow.sampler_mode = SamplerMode::kEuler;
          else if (value == "literal") cfg.flow.sampler_mode = SamplerMode::kLiteral;
          else throw ConfigError("config line " + std::to_string(lineno) + ": sampler_mode must be euler or literal");
        } else throw unknown();
      } else if (section == "net") {
        if (key == "enc_hidden") cfg.net.enc_hidden = parse_u64(value, lineno);
        else if (key == "feat") cfg.net.feat = parse_u64(value, lineno);
        else if (key == "dec_hidden") cfg.net.dec_hidden = parse_u64(value, lineno);
        else if (key == "time_dim") cfg.net.time_dim = parse_u64(value, lineno);
        else if (key == "seed") cfg.net_seed = parse_u64(value, lineno);
        else throw unknown();
      } else if (section == "optimizer") {
        if (key == "lr") cfg.optimizer.lr = parse_f64(value, lineno);
        else if (key == "beta1") cfg.optimizer.beta1 = parse_f64(value, lineno);
        else if (key == "beta2") cfg.optimizer.beta2 = parse_f64(value, lineno);
        else if (key == "batch") cfg.optimizer.batch = parse_u64(value, lineno);
        else if (key == "iterations") cfg.optimizer.iterations = parse_u64(value, lineno);
        else throw unknown();
      } else if (section == "transport") {
        if (key == "solver") {
          if (value == "auto") cfg.solver = TransportSolver::kAuto;
          else if (value == "exact") cfg.solver = TransportSolver::kExact;
          else if (value == "auction") cfg.solver = TransportSolver::kAuction;
          else throw ConfigError("config line " + std::to_string(lineno) + ": solver must be auto, exact, or auction");
        } else if (key == "exact_max_n") cfg.transport.exact_max_n = parse_u64(value, lineno);
        else if (key == "epsilon") cfg.transport.epsilon = parse_f64(value, lineno);
        else throw unknown();
      } else if (section == "paths") {
        if (key == "data_dir") cfg.paths.data_dir = value;
        else if (key == "out_dir") cfg.paths.out_dir = value;
        else throw unknown();
      } else if (section == "run") {
        if (key == "master_seed") cfg.master_seed = parse_u64(value, lineno);
        else if (key == "workers") cfg.workers = parse_u64(value, lineno);
        else throw unknown();
      } else {
        throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
      }
    } catch (const std::invalid_argument& e) {
      // Shape-spec parse failures surface with their config location.
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = print_config(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : text) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  const auto& d = cfg.dataset;
  if (d.train_shapes.empty()) fail("train_shapes is empty");
  if (d.patches_per_shape == 0) fail("patches_per_shape must be positive");
  if (d.sparse_size == 0) fail("sparse_size must be positive");
  if (d.rate == 0) fail("rate must be positive");
  if (d.dense_size != d.rate * d.sparse_size)
    fail("dense_size must equal rate * sparse_size");
  if (d.surface_points < d.dense_size) fail("surface_points must cover one dense patch");
  if (cfg.densify.gamma != d.rate) fail("densify gamma must equal the dataset rate");
  if (cfg.densify.eta < 0.0) fail("eta must be nonnegative");
  if (cfg.flow.num_steps == 0) fail("num_steps must be positive");
  if (cfg.net.enc_hidden == 0 || cfg.net.feat == 0 || cfg.net.dec_hidden == 0)
    fail("net widths must be positive");
  if (cfg.net.time_dim == 0 || cfg.net.time_dim % 2 != 0) fail("time_dim must be even and positive");
  if (!(cfg.optimizer.lr > 0.0)) fail("lr must be positive");
  if (!(cfg.optimizer.beta1 >= 0.0 && cfg.optimizer.beta1 < 1.0)) fail("beta1 out of [0, 1)");
  if (!(cfg.optimizer.beta2 >= 0.0 && cfg.optimizer.beta2 < 1.0)) fail("beta2 out of [0, 1)");
  if (cfg.optimizer.batch == 0) fail("batch must be positive");
  if (cfg.optimizer.iterations == 0) fail("iterations must be positive");
  if (!(cfg.transport.epsilon > 0.0)) fail("transport epsilon must be positive");
  if (cfg.paths.data_dir.empty() || cfg.paths.out_dir.empty()) fail("paths must be nonempty");
  if (cfg.workers == 0) fail("workers must be positive");
}

void apply_env_seed(RunConfig& cfg) {
  const char* env = std::getenv("PUFM_SEED");
  if (!env || !*env) return;
  const std::string v(env);
  std::uint64_t seed = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), seed);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("PUFM_SEED must be an unsigned integer, got '" + v + "'");
  cfg.master_seed = seed;
}

TransportConfig solver_config(const RunConfig& cfg) {
  TransportConfig t = cfg.transport;
  if (cfg.solver == TransportSolver::kExact)
    t.exact_max_n = std::numeric_limits<std::size_t>::max();
  else if (cfg.solver == TransportSolver::kAuction)
    t.exact_max_n = 0;
  return t;
}

}  // namespace pufm
