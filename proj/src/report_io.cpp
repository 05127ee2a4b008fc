#include "gibbsgram/report_io.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "gibbsgram/errors.hpp"

namespace gibbs {

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw Error("cannot open " + file.string() + " for writing");
  os.precision(17);
  return os;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void write_matrix_csv(const std::filesystem::path& file, const Eigen::Ref<const Matrix>& m) {
  auto os = open_out(file);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
  if (!os) throw Error("failed writing " + file.string());
}

Matrix read_matrix_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw Error("cannot open " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(file.string() + ": ragged CSV matrix");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(file.string() + ": empty CSV matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Json gramian_json(const GramianMatrix& g) {
  const auto& meta = g.metadata();
  Json j;
  j["provenance"] = to_string(meta.provenance);
  j["n"] = g.dimension();
  j["temperature"] = optional_number(meta.temperature);
  j["horizon"] = optional_number(meta.horizon);
  j["snapshot_count"] = meta.snapshot_count;
  j["sample_count"] = meta.sample_count ? Json(*meta.sample_count) : Json(nullptr);
  j["reference"] = meta.reference == Reference::origin ? "origin" : "initial_state";
  const Vector ev = g.eigenvalues();
  j["eigenvalues"] = std::vector<double>(ev.data(), ev.data() + ev.size());
  std::vector<double> flat;
  for (Index r = 0; r < g.dimension(); ++r)
    for (Index c = 0; c < g.dimension(); ++c) flat.push_back(g.matrix()(r, c));
  j["matrix"] = flat;
  return j;
}

Json basis_json(const ProjectionBasis& rho) {
  Json j;
  j["k"] = rho.rank();
  j["n"] = rho.rows();
  j["eigenvalues"] = std::vector<double>(rho.eigenvalues.data(),
                                         rho.eigenvalues.data() + rho.eigenvalues.size());
  const Vector f = rho.explained_fraction();
  j["explained_fraction"] = std::vector<double>(f.data(), f.data() + f.size());
  j["sign_convention"] = "first-nonzero-positive";
  return j;
}

Json grid_json(const GridSpec& grid) {
  Json j;
  j["lower"] = std::vector<double>(grid.lower.data(), grid.lower.data() + grid.lower.size());
  j["upper"] = std::vector<double>(grid.upper.data(), grid.upper.data() + grid.upper.size());
  j["points"] = grid.points;
  return j;
}

Json crosscheck_json(const CrosscheckReport& r) {
  Json j;
  j["l1_distance"] = r.l1_distance;
  j["gramian_rel_error"] = r.gramian_rel_error;
  Json grid = grid_json(r.grid);
  grid["bins_per_axis"] = r.bins_per_axis;
  j["grid_spec"] = grid;
  j["mc_spec"] = {{"paths", r.paths}, {"dt", r.dt}, {"seed", r.seed},
                  {"temperature", r.temperature}, {"tau", r.tau}};
  return j;
}

void write_density_csv(const std::filesystem::path& file, const GridDensity& rho) {
  auto os = open_out(file);
  const auto& grid = rho.grid();
  if (grid.dimension() == 1) {
    os << "x1,density\n";
    for (int i = 0; i < grid.points[0]; ++i) os << grid.coordinate(0, i) << ',' << rho(i) << '\n';
  } else {
    os << "x1,x2,density\n";
    for (int i = 0; i < grid.points[0]; ++i)
      for (int j = 0; j < grid.points[1]; ++j)
        os << grid.coordinate(0, i) << ',' << grid.coordinate(1, j) << ',' << rho(i, j) << '\n';
  }
  if (!os) throw Error("failed writing " + file.string());
}

void write_json(const std::filesystem::path& file, const Json& j) {
  auto os = open_out(file);
  os << j.dump(2) << '\n';
  if (!os) throw Error("failed writing " + file.string());
}

std::string sha256_hex(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot open " + file.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 initialization failed");
  std::array<char, 1 << 16> buffer;
  while (is) {
    is.read(buffer.data(), buffer.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

RunDirectory::RunDirectory(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path RunDirectory::file(const std::string& name) {
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  return root_ / name;
}

std::filesystem::path RunDirectory::write_manifest(Json header) const {
  Json files = Json::array();
  for (const auto& name : files_) {
    const auto path = root_ / name;
    files.push_back({{"name", name},
                     {"bytes", std::filesystem::file_size(path)},
                     {"sha256", sha256_hex(path)}});
  }
  header["files"] = files;
  const auto path = root_ / "manifest.json";
  write_json(path, header);
  return path;
}

}  // namespace gibbs
