#include "trisoup/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "trisoup/core/error.hpp"

namespace trisoup {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError(path + ": truncated checkpoint");
  return v;
}

void put_vec(std::ofstream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

std::vector<double> get_vec(std::ifstream& in, const std::string& path) {
  const auto n = get<std::uint64_t>(in, path);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
  if (!in) throw ParseError(path + ": truncated checkpoint array");
  return v;
}

void put_param(std::ofstream& out, const ParamArray& p) {
  put_vec(out, p.value);
  put_vec(out, p.m1);
  put_vec(out, p.m2);
}

void get_param(std::ifstream& in, const std::string& path, ParamArray& p,
               std::size_t count) {
  p.value = get_vec(in, path);
  p.m1 = get_vec(in, path);
  p.m2 = get_vec(in, path);
  p.grad.assign(count * p.stride, 0.0);
  if (p.value.size() != count * static_cast<std::size_t>(p.stride)) {
    throw ParseError(path + ": parameter array size mismatch");
  }
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), s.size());
}

std::string get_string(std::ifstream& in, const std::string& path) {
  const auto n = get<std::uint64_t>(in, path);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw ParseError(path + ": truncated checkpoint string");
  return s;
}

}  // namespace

namespace {

void put_edge_ref(std::ofstream& out, const EdgeRef& ref) {
  put<std::int32_t>(out, ref.tri);
  put<std::int32_t>(out, ref.edge);
  for (int k = 0; k < 3; ++k) put<double>(out, ref.midpoint[k]);
  for (int k = 0; k < 3; ++k) put<double>(out, ref.outward[k]);
  for (int k = 0; k < 3; ++k) put<double>(out, ref.dir[k]);
}

EdgeRef get_edge_ref(std::ifstream& in, const std::string& path) {
  EdgeRef ref;
  ref.tri = get<std::int32_t>(in, path);
  ref.edge = static_cast<std::int8_t>(get<std::int32_t>(in, path));
  for (int k = 0; k < 3; ++k) ref.midpoint[k] = get<double>(in, path);
  for (int k = 0; k < 3; ++k) ref.outward[k] = get<double>(in, path);
  for (int k = 0; k < 3; ++k) ref.dir[k] = get<double>(in, path);
  return ref;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, ck.soup.count());
  put<std::int32_t>(out, ck.soup.sh_degree());
  put<std::int64_t>(out, ck.iteration);
  put<std::int64_t>(out, ck.adam_steps);
  put<double>(out, ck.split_size_threshold);

  for (const ParamArray* p : ck.soup.params()) put_param(out, *p);

  put_vec(out, ck.stats.max_grad_mu);
  put_vec(out, ck.stats.max_screen_extent);
  put<std::uint64_t>(out, ck.stats.grad_dir.size());
  for (const Vec3& v : ck.stats.grad_dir) {
    put<double>(out, v[0]);
    put<double>(out, v[1]);
    put<double>(out, v[2]);
  }

  put<std::uint64_t>(out, ck.graph.connections.size());
  for (const EdgeConnection& conn : ck.graph.connections) {
    put_edge_ref(out, conn.a);
    put_edge_ref(out, conn.b);
    put<std::int32_t>(out, conn.crossed ? 1 : 0);
  }
  put<std::uint64_t>(out, ck.graph.soup_count);
  put<std::int64_t>(out, ck.graph.build_iteration);

  put_string(out, ck.rng_state);
  put<std::uint64_t>(out, ck.camera_order.size());
  out.write(reinterpret_cast<const char*>(ck.camera_order.data()),
            ck.camera_order.size() * sizeof(std::int32_t));
  put<std::int64_t>(out, ck.epoch_pos);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(path + ": not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint ck;
  const auto count = get<std::uint64_t>(in, path);
  const auto sh_degree = get<std::int32_t>(in, path);
  ck.iteration = get<std::int64_t>(in, path);
  ck.adam_steps = get<std::int64_t>(in, path);
  ck.split_size_threshold = get<double>(in, path);

  ck.soup = TriangleSoup(count, sh_degree);
  for (ParamArray* p : ck.soup.params()) get_param(in, path, *p, count);

  ck.stats.max_grad_mu = get_vec(in, path);
  ck.stats.max_screen_extent = get_vec(in, path);
  const auto dirs = get<std::uint64_t>(in, path);
  ck.stats.grad_dir.resize(dirs);
  for (auto& v : ck.stats.grad_dir) {
    v[0] = get<double>(in, path);
    v[1] = get<double>(in, path);
    v[2] = get<double>(in, path);
  }
  if (ck.stats.size() != count) throw ParseError(path + ": stats length mismatch");

  const auto n_conn = get<std::uint64_t>(in, path);
  ck.graph.connections.resize(n_conn);
  for (auto& conn : ck.graph.connections) {
    conn.a = get_edge_ref(in, path);
    conn.b = get_edge_ref(in, path);
    conn.crossed = get<std::int32_t>(in, path) != 0;
  }
  ck.graph.soup_count = get<std::uint64_t>(in, path);
  ck.graph.build_iteration = get<std::int64_t>(in, path);

  ck.rng_state = get_string(in, path);
  const auto order = get<std::uint64_t>(in, path);
  ck.camera_order.resize(order);
  in.read(reinterpret_cast<char*>(ck.camera_order.data()), order * sizeof(std::int32_t));
  ck.epoch_pos = get<std::int64_t>(in, path);
  if (!in) throw ParseError(path + ": truncated checkpoint tail");
  return ck;
}

}  // namespace trisoup
