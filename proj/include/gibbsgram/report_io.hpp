#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsgram/fokker_planck.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/reduction.hpp"

namespace gibbs {

using Json = nlohmann::ordered_json;

/// Rows x cols CSV, 17 significant digits, no header.
void write_matrix_csv(const std::filesystem::path& file, const Eigen::Ref<const Matrix>& m);
Matrix read_matrix_csv(const std::filesystem::path& file);

/// {provenance, n, temperature, horizon, eigenvalues (descending), matrix (row-major)}
Json gramian_json(const GramianMatrix& g);
/// {eigenvalues, explained_fraction, sign_convention}
Json basis_json(const ProjectionBasis& rho);
/// {l1_distance, gramian_rel_error, grid_spec, mc_spec}
Json crosscheck_json(const CrosscheckReport& r);
Json grid_json(const GridSpec& grid);

/// Grid coordinates and density value, one row per node.
void write_density_csv(const std::filesystem::path& file, const GridDensity& rho);

void write_json(const std::filesystem::path& file, const Json& j);

std::string sha256_hex(const std::filesystem::path& file);

/// Output directory of one command run. Files are registered as they are
/// written; write_manifest() lists them with their SHA-256 digests.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path file(const std::string& name);

  /// Writes manifest.json = `header` + {"files": [{name, bytes, sha256}]}.
  std::filesystem::path write_manifest(Json header) const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

}  // namespace gibbs
