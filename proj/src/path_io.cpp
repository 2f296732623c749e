#include "pdmp/path_io.hpp"

#include "pdmp/errors.hpp"

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace pdmp {

namespace {

constexpr char kMagic[8] = {'P', 'D', 'M', 'P', 'P', 'A', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_column(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(ErrorCode::InvalidConfig, "binary path file is truncated");
  return v;
}

template <class T>
std::vector<T> get_column(std::istream& in, std::size_t n) {
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) fail(ErrorCode::InvalidConfig, "binary path file is truncated");
  return v;
}

}  // namespace

void write_path_jsonl(const EmbeddedPath& path, std::ostream& out, const nlohmann::json& header) {
  if (!header.is_null()) out << header.dump() << '\n';
  std::vector<double> y(static_cast<std::size_t>(path.dim()));
  for (std::size_t n = 0; n <= path.steps(); ++n) {
    for (int k = 0; k < path.dim(); ++k) y[static_cast<std::size_t>(k)] = path.y(n, k);
    nlohmann::json rec = {{"n", n}, {"tau", path.jump_time(n)}, {"y", y}, {"i", path.flow(n) + 1}};
    out << rec.dump() << '\n';
  }
}

void write_path_binary(const EmbeddedPath& path, std::ostream& out, const nlohmann::json& header) {
  const std::string h = header.dump();
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(h.size()));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  const std::size_t n = path.steps() + 1;
  put(out, static_cast<std::uint64_t>(n));
  put(out, static_cast<std::uint32_t>(path.dim()));
  put_column(out, path.jump_times());
  put_column(out, path.interjumps());
  std::vector<std::int32_t> flows(n);
  for (std::size_t k = 0; k < n; ++k) flows[k] = path.flow(k) + 1;
  put_column(out, flows);
  std::vector<double> col(n);
  for (int d = 0; d < path.dim(); ++d) {
    for (std::size_t k = 0; k < n; ++k) col[k] = path.y(k, d);
    put_column(out, col);
  }
}

LoadedPath read_path_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) fail(ErrorCode::InvalidConfig, "not a binary path file");
  if (get<std::uint32_t>(in) != kVersion) fail(ErrorCode::InvalidConfig, "unsupported binary path version");
  std::string h(get<std::uint32_t>(in), '\0');
  in.read(h.data(), static_cast<std::streamsize>(h.size()));
  LoadedPath out;
  out.header = nlohmann::json::parse(h);
  const auto n = static_cast<std::size_t>(get<std::uint64_t>(in));
  const auto dim = static_cast<int>(get<std::uint32_t>(in));
  if (n == 0 || dim < 1 || dim > 16) fail(ErrorCode::InvalidConfig, "binary path file has a bad shape");
  get_column<double>(in, n);  // tau is rebuilt from dtau
  const auto dtau = get_column<double>(in, n);
  const auto flows = get_column<std::int32_t>(in, n);
  std::vector<std::vector<double>> ys;
  for (int d = 0; d < dim; ++d) ys.push_back(get_column<double>(in, n));
  auto state = [&](std::size_t k) {
    HybridState x;
    x.y.resize(dim);
    for (int d = 0; d < dim; ++d) x.y[d] = ys[static_cast<std::size_t>(d)][k];
    x.flow = flows[k] - 1;
    return x;
  };
  out.path = EmbeddedPath(state(0));
  out.path.reserve(n - 1);
  for (std::size_t k = 1; k < n; ++k) out.path.push(state(k), dtau[k]);
  return out;
}

}  // namespace pdmp
