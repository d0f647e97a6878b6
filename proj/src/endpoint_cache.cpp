#include "fkmc/endpoint_cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fkmc::cache {

namespace {

static_assert(std::endian::native == std::endian::little,
              "endpoint cache assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("endpoint cache truncated");
  return v;
}

constexpr char kMagic[4] = {'F', 'K', 'E', 'C'};

}  // namespace

void save_endpoint_sets(const std::string& path,
                        const std::vector<backward::EndpointSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("nothing to save");
  const auto& first = sets.front();
  for (const auto& s : sets) {
    if (s.dimension != first.dimension || s.dt != first.dt || s.seed != first.seed ||
        s.n_particles != first.n_particles || s.horizon != first.horizon)
      throw std::invalid_argument("endpoint sets in one cache must share parameters");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open cache file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCacheVersion);
  put<std::uint64_t>(out, first.seed);
  put<double>(out, first.dt);
  put<std::uint64_t>(out, first.n_particles);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(first.dimension));
  put<std::uint32_t>(out, 0);  // reserved
  put<double>(out, first.horizon);
  put<std::uint64_t>(out, sets.size());

  const int d = first.dimension;
  for (const auto& s : sets) {
    for (int k = 0; k < d; ++k) put<double>(out, s.x[static_cast<std::size_t>(k)]);
    put<std::uint64_t>(out, s.records.size());
    put<std::uint64_t>(out, s.n_faulted);
    for (const auto& r : s.records) {
      put<std::uint64_t>(out, r.particle);
      for (int k = 0; k < d; ++k) put<double>(out, r.x0[static_cast<std::size_t>(k)]);
      put<double>(out, r.weight);
      put<double>(out, r.source_sum);
    }
  }
  if (!out) throw std::runtime_error("write to cache file failed: " + path);
}

std::vector<backward::EndpointSet> load_endpoint_sets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cache file: " + path);

  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not an endpoint cache file: " + path);
  const auto version = get<std::uint32_t>(in);
  if (version != kCacheVersion)
    throw std::runtime_error("endpoint cache version " + std::to_string(version) +
                             " not supported (expected " + std::to_string(kCacheVersion) + ")");
  const auto seed = get<std::uint64_t>(in);
  const auto dt = get<double>(in);
  const auto n_particles = get<std::uint64_t>(in);
  const auto dim = get<std::uint32_t>(in);
  get<std::uint32_t>(in);  // reserved
  const auto horizon = get<double>(in);
  const auto n_points = get<std::uint64_t>(in);
  if (dim < 1 || dim > static_cast<std::uint32_t>(kMaxDim))
    throw std::runtime_error("endpoint cache has invalid dimension");

  std::vector<backward::EndpointSet> sets;
  sets.reserve(n_points);
  for (std::uint64_t p = 0; p < n_points; ++p) {
    backward::EndpointSet s;
    s.dimension = static_cast<int>(dim);
    s.horizon = horizon;
    s.dt = dt;
    s.seed = seed;
    s.n_particles = n_particles;
    s.x.resize(dim);
    for (auto& v : s.x) v = get<double>(in);
    const auto n_records = get<std::uint64_t>(in);
    s.n_faulted = get<std::uint64_t>(in);
    if (n_records + s.n_faulted != n_particles)
      throw std::runtime_error("endpoint cache record counts are inconsistent");
    s.records.resize(n_records);
    for (auto& r : s.records) {
      r.particle = get<std::uint64_t>(in);
      for (std::uint32_t k = 0; k < dim; ++k) r.x0[k] = get<double>(in);
      r.weight = get<double>(in);
      r.source_sum = get<double>(in);
    }
    sets.push_back(std::move(s));
  }
  return sets;
}

}  // namespace fkmc::cache
