#include "pufm/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace pufm {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Full-token double parse; rejects partial consumption and non-finite values.
bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || !std::isfinite(v)) return false;
  out = v;
  return true;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(std::move(t));
  return toks;
}

}  // namespace

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  PointCloud cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 3) throw ParseError(lineno, "expected 3 coordinates, got " +
                                                      std::to_string(toks.size()));
    Vec3 p;
    for (int a = 0; a < 3; ++a)
      if (!parse_double(toks[a], p[a]))
        throw ParseError(lineno, "bad coordinate '" + toks[a] + "'");
    cloud.push_back(p);
  }
  return cloud;
}

void write_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  char buf[128];
  for (const Vec3& p : cloud) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

struct PlyProperty {
  std::string name;
  std::size_t size = 0;   // bytes in binary mode
  bool is_float = false;  // float32
  bool is_double = false;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
  return 0;
}

[[noreturn]] void ply_header_error(int lineno, const std::string& line, const std::string& why) {
  throw FormatError("PLY header line " + std::to_string(lineno) + " ('" + line + "'): " + why);
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  int lineno = 0;

  auto next_line = [&]() {
    if (!std::getline(in, line)) throw FormatError("PLY header ends before end_header");
    ++lineno;
    strip_cr(line);
  };

  next_line();
  if (line != "ply") ply_header_error(lineno, line, "missing 'ply' magic");

  bool binary = false;
  bool have_format = false;
  bool in_vertex_element = false;
  bool vertex_seen = false;
  std::uint64_t vertex_count = 0;
  std::vector<PlyProperty> props;

  for (;;) {
    next_line();
    if (line == "end_header") break;
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;

    if (toks[0] == "format") {
      if (toks.size() < 2) ply_header_error(lineno, line, "malformed format line");
      if (toks[1] == "ascii") binary = false;
      else if (toks[1] == "binary_little_endian") binary = true;
      else if (toks[1] == "binary_big_endian")
        ply_header_error(lineno, line, "big-endian PLY is not supported");
      else ply_header_error(lineno, line, "unknown format '" + toks[1] + "'");
      have_format = true;
    } else if (toks[0] == "element") {
      if (toks.size() < 3) ply_header_error(lineno, line, "malformed element line");
      if (!vertex_seen) {
        // The vertex element must come first; we never read past its payload.
        if (toks[1] != "vertex")
          ply_header_error(lineno, line, "first element must be 'vertex'");
        const auto& c = toks[2];
        const auto res = std::from_chars(c.data(), c.data() + c.size(), vertex_count);
        if (res.ec != std::errc{} || res.ptr != c.data() + c.size())
          ply_header_error(lineno, line, "bad vertex count '" + c + "'");
        vertex_seen = true;
        in_vertex_element = true;
      } else {
        in_vertex_element = false;  // later elements are ignored
      }
    } else if (toks[0] == "property") {
      if (!in_vertex_element) continue;
      if (toks.size() >= 2 && toks[1] == "list")
        ply_header_error(lineno, line, "list properties in the vertex element are not supported");
      if (toks.size() < 3) ply_header_error(lineno, line, "malformed property line");
      PlyProperty p;
      p.name = toks[2];
      p.size = ply_type_size(toks[1]);
      if (p.size == 0) ply_header_error(lineno, line, "unknown property type '" + toks[1] + "'");
      p.is_float = toks[1] == "float" || toks[1] == "float32";
      p.is_double = toks[1] == "double" || toks[1] == "float64";
      props.push_back(std::move(p));
    } else {
      ply_header_error(lineno, line, "unknown header keyword '" + toks[0] + "'");
    }
  }

  if (!have_format) throw FormatError("PLY header has no format line");
  if (!vertex_seen) throw FormatError("PLY header has no vertex element");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    const PlyProperty& p = props[i];
    if (p.name == "x") ix = static_cast<int>(i);
    else if (p.name == "y") iy = static_cast<int>(i);
    else if (p.name == "z") iz = static_cast<int>(i);
  }
  auto pos_ok = [&](int i) {
    return i >= 0 && (props[i].is_float || props[i].is_double);
  };
  if (!pos_ok(ix) || !pos_ok(iy) || !pos_ok(iz))
    throw FormatError("PLY vertex element lacks float/double x, y, z properties");

  PointCloud cloud;
  if (vertex_count == 0) return cloud;

  if (!binary) {
    std::string tok;
    for (std::uint64_t v = 0; v < vertex_count; ++v) {
      Vec3 p;
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (!(in >> tok)) throw FormatError("PLY vertex data truncated");
        if (static_cast<int>(i) == ix || static_cast<int>(i) == iy ||
            static_cast<int>(i) == iz) {
          double val;
          if (!parse_double(tok, val)) throw FormatError("PLY bad vertex value '" + tok + "'");
          if (static_cast<int>(i) == ix) p.x = val;
          else if (static_cast<int>(i) == iy) p.y = val;
          else p.z = val;
        }
      }
      cloud.push_back(p);
    }
    return cloud;
  }

  std::size_t stride = 0;
  std::size_t off_x = 0, off_y = 0, off_z = 0;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (static_cast<int>(i) == ix) off_x = stride;
    if (static_cast<int>(i) == iy) off_y = stride;
    if (static_cast<int>(i) == iz) off_z = stride;
    stride += props[i].size;
  }

  // Validate the payload size against the actual file before allocating
  // anything proportional to the declared count.
  const std::streampos data_start = in.tellg();
  in.seekg(0, std::ios::end);
  const std::uint64_t remaining = static_cast<std::uint64_t>(in.tellg() - data_start);
  in.seekg(data_start);
  if (vertex_count > remaining / stride) throw FormatError("PLY vertex data truncated");

  cloud.reserve(vertex_count);
  std::vector<char> buf(stride);
  auto load_coord = [&](std::size_t off, std::size_t idx) {
    if (props[idx].is_float) {
      float f;
      std::memcpy(&f, buf.data() + off, 4);
      return static_cast<double>(f);
    }
    double d;
    std::memcpy(&d, buf.data() + off, 8);
    return d;
  };
  for (std::uint64_t v = 0; v < vertex_count; ++v) {
    if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
      throw FormatError("PLY vertex data truncated");
    Vec3 p;
    p.x = load_coord(off_x, static_cast<std::size_t>(ix));
    p.y = load_coord(off_y, static_cast<std::size_t>(iy));
    p.z = load_coord(off_z, static_cast<std::size_t>(iz));
    cloud.push_back(p);
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nend_header\n";
  for (const Vec3& p : cloud) {
    const float xyz[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                          static_cast<float>(p.z)};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  TriangleMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;

    if (toks[0] == "v") {
      if (toks.size() < 4) throw ParseError(lineno, "vertex needs 3 coordinates");
      Vec3 p;
      for (int a = 0; a < 3; ++a)
        if (!parse_double(toks[a + 1], p[a]))
          throw ParseError(lineno, "bad vertex coordinate '" + toks[a + 1] + "'");
      mesh.vertices.push_back(p);
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw ParseError(lineno, "face needs at least 3 vertices");
      std::vector<int> idx;
      idx.reserve(toks.size() - 1);
      const long long n = static_cast<long long>(mesh.vertices.size());
      for (std::size_t i = 1; i < toks.size(); ++i) {
        // Keep only the vertex index of v/vt/vn triplets.
        std::string ref = toks[i].substr(0, toks[i].find('/'));
        long long v = 0;
        const auto res = std::from_chars(ref.data(), ref.data() + ref.size(), v);
        if (ref.empty() || res.ec != std::errc{} || res.ptr != ref.data() + ref.size())
          throw ParseError(lineno, "bad face index '" + toks[i] + "'");
        if (v < 0) v = n + v;  // -1 refers to the most recent vertex
        else if (v == 0) throw ParseError(lineno, "face index 0 is invalid");
        else v -= 1;
        if (v < 0 || v >= n)
          throw ParseError(lineno, "face index out of range (have " + std::to_string(n) +
                                       " vertices)");
        idx.push_back(static_cast<int>(v));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i)
        mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
    }
    // vn/vt/o/g/s/usemtl/mtllib and anything else are skipped.
  }
  return mesh;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_f32s(std::ostream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * 4));
}

struct CheckpointReader {
  std::ifstream in;
  std::uint64_t remaining;

  explicit CheckpointReader(const std::filesystem::path& path) : in(open_in(path)) {
    in.seekg(0, std::ios::end);
    remaining = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
  }

  void raw(void* dst, std::uint64_t n) {
    if (n > remaining) throw FormatError("checkpoint truncated");
    if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
      throw FormatError("checkpoint truncated");
    remaining -= n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::string str(std::uint32_t max_len) {
    const std::uint32_t len = u32();
    if (len > max_len) throw FormatError("checkpoint string field too long");
    std::string s(len, '\0');
    raw(s.data(), len);
    return s;
  }
  std::vector<float> f32s(std::uint64_t count) {
    if (count > remaining / 4) throw FormatError("checkpoint truncated");
    std::vector<float> v(count);
    raw(v.data(), count * 4);
    return v;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::uint64_t count = ckpt.arch.param_count();
  if (ckpt.params.size() != count)
    throw std::invalid_argument("save_checkpoint: parameter count does not match architecture");
  if (ckpt.adam && (ckpt.adam->m.size() != count || ckpt.adam->v.size() != count))
    throw std::invalid_argument("save_checkpoint: optimizer state does not match architecture");

  std::ofstream out = open_out(path);
  out.write("PUFM", 4);
  put_u32(out, kCheckpointVersion);

  const std::pair<std::string, std::uint64_t> arch_fields[] = {
      {"enc_hidden", ckpt.arch.enc_hidden},
      {"feat", ckpt.arch.feat},
      {"dec_hidden", ckpt.arch.dec_hidden},
      {"time_dim", ckpt.arch.time_dim},
      {"conditioned", ckpt.arch.conditioned ? 1u : 0u},
  };
  put_u32(out, static_cast<std::uint32_t>(std::size(arch_fields)));
  for (const auto& [key, value] : arch_fields) {
    put_str(out, key);
    put_str(out, std::to_string(value));
  }

  put_u64(out, count);
  put_f32s(out, ckpt.params);

  out.put(ckpt.adam ? '\1' : '\0');
  if (ckpt.adam) {
    put_u64(out, ckpt.adam->step);
    put_f32s(out, ckpt.adam->m);
    put_f32s(out, ckpt.adam->v);
  }

  put_u64(out, ckpt.meta.train_step);
  put_u64(out, ckpt.meta.config_hash);
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  CheckpointReader r(path);

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "PUFM", 4) != 0) throw FormatError("bad checkpoint magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  const std::uint32_t npairs = r.u32();
  if (npairs > 64) throw FormatError("checkpoint architecture record too large");
  std::map<std::string, std::uint64_t> fields;
  for (std::uint32_t i = 0; i < npairs; ++i) {
    const std::string key = r.str(256);
    const std::string val = r.str(256);
    std::uint64_t parsed = 0;
    const auto res = std::from_chars(val.data(), val.data() + val.size(), parsed);
    if (val.empty() || res.ec != std::errc{} || res.ptr != val.data() + val.size())
      throw FormatError("bad architecture value for '" + key + "'");
    fields[key] = parsed;
  }
  auto field = [&](const char* key) {
    const auto it = fields.find(key);
    if (it == fields.end())
      throw FormatError(std::string("checkpoint architecture record lacks '") + key + "'");
    return it->second;
  };

  Checkpoint ckpt;
  ckpt.arch.enc_hidden = field("enc_hidden");
  ckpt.arch.feat = field("feat");
  ckpt.arch.dec_hidden = field("dec_hidden");
  ckpt.arch.time_dim = field("time_dim");
  ckpt.arch.conditioned = field("conditioned") != 0;
  if (ckpt.arch.enc_hidden == 0 || ckpt.arch.feat == 0 || ckpt.arch.dec_hidden == 0 ||
      ckpt.arch.time_dim == 0 || ckpt.arch.time_dim % 2 != 0 ||
      ckpt.arch.enc_hidden > (1u << 20) || ckpt.arch.feat > (1u << 20) ||
      ckpt.arch.dec_hidden > (1u << 20) || ckpt.arch.time_dim > (1u << 20))
    throw FormatError("implausible checkpoint architecture");

  const std::uint64_t count = r.u64();
  if (count != ckpt.arch.param_count())
    throw FormatError("checkpoint payload length does not match its architecture");
  ckpt.params = r.f32s(count);

  const std::uint8_t has_adam = r.u8();
  if (has_adam > 1) throw FormatError("bad optimizer-state flag");
  if (has_adam) {
    AdamState<float> adam(0);
    adam.step = r.u64();
    adam.m = r.f32s(count);
    adam.v = r.f32s(count);
    ckpt.adam = std::move(adam);
  }

  ckpt.meta.train_step = r.u64();
  ckpt.meta.config_hash = r.u64();
  if (r.remaining != 0) throw FormatError("trailing bytes after checkpoint payload");
  return ckpt;
}

}  // namespace pufm
