#include "gibbsgram/snapshot_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "gibbsgram/errors.hpp"

namespace gibbs {

namespace {

constexpr std::array<char, 5> kMagic{'G', 'K', 'S', 'N', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

}  // namespace

void write_snapshots_binary(const std::filesystem::path& file, const EnsembleSnapshots& ens) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + file.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_u64(os, ens.path_count());
  put_u64(os, ens.time_count());
  put_u64(os, static_cast<std::uint64_t>(ens.dimension()));
  for (double v : ens.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw Error("failed writing " + file.string());
}

RawSnapshots read_snapshots_binary(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot open snapshot file " + file.string());
  std::array<char, 5> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ConfigError(file.string() + " is not a GKSN1 snapshot file");
  RawSnapshots raw;
  raw.path_count = get_u64(is);
  raw.time_count = get_u64(is);
  raw.dimension = get_u64(is);
  if (!is) throw ConfigError(file.string() + ": truncated header");
  const auto size = std::filesystem::file_size(file);
  const std::uint64_t count = raw.path_count * raw.time_count * raw.dimension;
  if (size != 5 + 24 + 8 * count)
    throw ConfigError(file.string() + ": header announces " + std::to_string(count) +
                      " values but the file holds " + std::to_string((size - 29) / 8));
  raw.data.resize(count);
  for (auto& v : raw.data) v = std::bit_cast<double>(get_u64(is));
  return raw;
}

void write_snapshots_csv(const std::filesystem::path& file, const EnsembleSnapshots& ens) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw Error("cannot open " + file.string() + " for writing");
  os.precision(17);
  os << "path,t";
  for (Index i = 0; i < ens.dimension(); ++i) os << ",x" << i + 1;
  os << '\n';
  const auto times = ens.schedule().times();
  for (std::size_t k = 0; k < ens.path_count(); ++k)
    for (std::size_t j = 0; j < ens.time_count(); ++j) {
      os << k << ',' << times[j];
      const auto x = ens.state(k, j);
      for (Index i = 0; i < x.size(); ++i) os << ',' << x[i];
      os << '\n';
    }
  if (!os) throw Error("failed writing " + file.string());
}

}  // namespace gibbs
