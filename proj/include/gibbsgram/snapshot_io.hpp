#pragma once

#include <filesystem>
#include <vector>

#include "gibbsgram/sde.hpp"

namespace gibbs {

/// Binary snapshot dump: the 5 magic bytes "GKSN1", then little-endian u64
/// path_count, u64 time_count, u64 n and path-major f64 data.
void write_snapshots_binary(const std::filesystem::path& file, const EnsembleSnapshots& ens);

struct RawSnapshots {
  std::uint64_t path_count = 0;
  std::uint64_t time_count = 0;
  std::uint64_t dimension = 0;
  std::vector<double> data;
};

RawSnapshots read_snapshots_binary(const std::filesystem::path& file);

/// One row per (path, time): path,t,x1..xn with 17 significant digits.
void write_snapshots_csv(const std::filesystem::path& file, const EnsembleSnapshots& ens);

}  // namespace gibbs
