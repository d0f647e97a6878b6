#pragma once

#include <string>
#include <vector>

#include "fkmc/backward.hpp"

namespace fkmc::cache {

/// Versioned little-endian binary container for endpoint sets (one per
/// query point, all traced with the same seed/dt/N/T). Loading refuses
/// version or parameter mismatches instead of guessing.
///
/// Layout:
///   magic "FKEC", u32 version,
///   u64 seed, f64 dt, u64 n_particles, u32 dim, u32 reserved, f64 horizon,
///   u64 n_points,
///   then per point: f64 x[dim], u64 n_records, u64 n_faulted,
///                   records { u64 particle, f64 x0[dim], f64 weight, f64 q }.
inline constexpr std::uint32_t kCacheVersion = 1;

void save_endpoint_sets(const std::string& path,
                        const std::vector<backward::EndpointSet>& sets);

std::vector<backward::EndpointSet> load_endpoint_sets(const std::string& path);

}  // namespace fkmc::cache
