#include "gibbsgram/config.hpp"

#include <fstream>
#include <set>
#include <utility>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gibbsgram/errors.hpp"

namespace gibbs {

namespace {

class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& origin)
      : node_(std::move(node)), path_(std::move(path)), origin_(origin) {
    if (!node_.IsMap()) fail(node_, "expected a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    std::ostringstream os;
    os << origin_ << ":" << at.Mark().line + 1 << ": " << (path_.empty() ? "<root>" : path_) << ": "
       << msg;
    throw ConfigError(os.str());
  }

  [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
    fail(get_raw(key), msg);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    used_.insert(key);
    return static_cast<bool>(std::as_const(node_)[key]);
  }

  YAML::Node get_raw(const std::string& key) const {
    const YAML::Node n = std::as_const(node_)[key];
    return n ? n : node_;
  }

  YAML::Node require(const std::string& key) {
    if (!has(key)) fail(node_, "missing required key '" + key + "'");
    return std::as_const(node_)[key];
  }

  Section sub(const std::string& key) { return Section(require(key), key_path(key), origin_); }

  double number(const std::string& key) { return scalar<double>(key, require(key), "a number"); }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const YAML::Node n = require(key);
    const std::string text = scalar<std::string>(key, n, "a nonnegative integer");
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
      fail(n, "'" + key + "' must be a nonnegative integer, got '" + text + "'");
    return scalar<std::uint64_t>(key, n, "a nonnegative integer");
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_integer(key) : fallback;
  }

  std::string text(const std::string& key) { return scalar<std::string>(key, require(key), "a string"); }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     const std::string& fallback) {
    const std::string v = text(key, fallback);
    for (const auto& a : allowed)
      if (a == v) return v;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail_key(key, "'" + key + "' must be one of {" + list + "}, got '" + v + "'");
  }

  Vector vector(const std::string& key) {
    const YAML::Node n = require(key);
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list of numbers");
    Vector v(static_cast<Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) v[static_cast<Index>(i)] = scalar<double>(key, n[i], "a number");
    return v;
  }

  /// Row-major list of rows.
  Matrix matrix(const std::string& key) {
    const YAML::Node n = require(key);
    if (!n.IsSequence() || n.size() == 0) fail(n, "'" + key + "' must be a nonempty list of rows");
    const std::size_t rows = n.size();
    if (!n[0].IsSequence()) fail(n[0], "'" + key + "' rows must be lists of numbers");
    const std::size_t cols = n[0].size();
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const YAML::Node row = n[i];
      if (!row.IsSequence() || row.size() != cols)
        fail(row, "'" + key + "' row " + std::to_string(i + 1) + " must have " + std::to_string(cols) +
                      " entries");
      for (std::size_t j = 0; j < cols; ++j)
        m(static_cast<Index>(i), static_cast<Index>(j)) = scalar<double>(key, row[j], "a number");
    }
    return m;
  }

  std::vector<std::string> strings(const std::string& key) {
    const YAML::Node n = require(key);
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto& e : n) out.push_back(scalar<std::string>(key, e, "a string"));
    return out;
  }

  std::vector<std::vector<std::string>> string_rows(const std::string& key) {
    const YAML::Node n = require(key);
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list of rows");
    std::vector<std::vector<std::string>> out;
    for (const auto& row : n) {
      if (!row.IsSequence()) fail(row, "'" + key + "' rows must be lists of strings");
      std::vector<std::string> r;
      for (const auto& e : row) r.push_back(scalar<std::string>(key, e, "a string"));
      out.push_back(std::move(r));
    }
    return out;
  }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, "unknown key '" + key_path(key) + "'");
    }
  }

 private:
  template <typename T>
  T scalar(const std::string& key, const YAML::Node& n, const char* what) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be " + what);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + key + "' must be " + what + ", got '" + n.Scalar() + "'");
    }
  }

  YAML::Node node_;
  std::string path_;
  const std::string& origin_;
  std::set<std::string> used_;
};

Json rows_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <typename F>
auto checked(Section& s, const std::string& key, F&& build) {
  try {
    return build();
  } catch (const ConfigError& e) {
    s.fail_key(key, e.what());
  }
}

ModelSection parse_model(Section s) {
  const std::string kind = s.choice("kind", {"linear", "fhn", "expression"}, "");
  const std::string label = s.text("label", kind);
  Json echo = {{"kind", kind}, {"label", label}};
  std::optional<DynamicsModel> model;

  if (kind == "linear") {
    const Matrix A = s.matrix("A");
    const Matrix B = s.matrix("B");
    const Vector x0 = s.has("x0") ? s.vector("x0") : Vector::Zero(A.rows());
    model = checked(s, "A", [&] { return build_linear(A, B, x0, label); });
    echo["A"] = rows_json(A);
    echo["B"] = rows_json(B);
    echo["x0"] = vector_json(x0);
  } else if (kind == "fhn") {
    const Matrix coupling = s.has("coupling") ? s.matrix("coupling") : fhn_reference_coupling();
    const Index p = coupling.rows();
    const Matrix pattern = s.has("input_pattern") ? s.matrix("input_pattern") : Matrix::Ones(p, 1);
    Vector x0;
    if (s.has("x0")) {
      x0 = s.vector("x0");
    } else if (p == 4) {
      x0 = fhn_reference_initial_state();
    } else {
      s.require("x0");
    }
    model = checked(s, "coupling", [&] { return build_fhn(coupling, pattern, x0, label); });
    echo["coupling"] = rows_json(coupling);
    echo["input_pattern"] = rows_json(pattern);
    echo["x0"] = vector_json(x0);
  } else {
    const auto drift = s.strings("drift");
    const auto gain = s.string_rows("gain");
    const Vector x0 = s.vector("x0");
    model = checked(s, "drift", [&] { return build_expression_model(drift, gain, x0, label); });
    echo["drift"] = drift;
    echo["gain"] = gain;
    echo["x0"] = vector_json(x0);
  }
  s.finish();
  return {kind, *model, echo};
}

NoiseSpec parse_noise(Section s, Json& echo) {
  NoiseSpec n;
  n.temperature = s.number("temperature");
  if (!(n.temperature >= 0.0)) s.fail_key("temperature", "temperature must be >= 0");
  n.seed = s.unsigned_integer("seed", 1);
  n.path_count = s.unsigned_integer("paths", 1);
  if (n.path_count == 0) s.fail_key("paths", "paths must be positive");
  s.finish();
  echo = {{"temperature", n.temperature}, {"seed", n.seed}, {"paths", n.path_count}};
  return n;
}

ScheduleSection parse_schedule(Section s, Json& echo) {
  ScheduleSection out;
  out.dt = s.number("dt");
  if (!(out.dt > 0.0)) s.fail_key("dt", "dt must be positive");
  echo["dt"] = out.dt;
  const bool times = s.has("times");
  const bool range = s.has("range");
  if (times && range) s.fail_key("range", "give either 'times' or 'range', not both");
  if (times) {
    const Vector t = s.vector("times");
    out.schedule = checked(s, "times", [&] {
      return SnapshotSchedule(std::vector<double>(t.data(), t.data() + t.size()), out.dt);
    });
    echo["times"] = vector_json(t);
  } else if (range) {
    Section r = s.sub("range");
    ScheduleSection::Range spec{r.number("start"), r.number("step"), r.number("stop")};
    r.finish();
    out.range = spec;
    out.schedule = checked(s, "range",
                           [&] { return SnapshotSchedule::range(spec.start, spec.step, spec.stop, out.dt); });
    echo["range"] = {{"start", spec.start}, {"step", spec.step}, {"stop", spec.stop}};
  }
  s.finish();
  return out;
}

}  // namespace

const ModelSection& RunConfig::require_model() const {
  if (!model) throw ConfigError(source.string() + ": missing required section 'model'");
  return *model;
}

const NoiseSpec& RunConfig::require_noise() const {
  if (!noise) throw ConfigError(source.string() + ": missing required section 'noise'");
  return *noise;
}

const ScheduleSection& RunConfig::require_schedule() const {
  if (!schedule) throw ConfigError(source.string() + ": missing required section 'schedule'");
  return *schedule;
}

const SnapshotSchedule& RunConfig::require_times() const {
  const auto& s = require_schedule();
  if (!s.schedule)
    throw ConfigError(source.string() + ": schedule: snapshot times required ('times' or 'range')");
  return *s.schedule;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig cfg;
  cfg.source = origin;
  if (!root || root.IsNull()) throw ConfigError(origin + ": empty configuration");
  Section top(root, "", origin);
  Json& echo = cfg.echo;

  if (top.has("model")) {
    cfg.model = parse_model(top.sub("model"));
    echo["model"] = cfg.model->echo;
  }
  if (top.has("noise")) cfg.noise = parse_noise(top.sub("noise"), echo["noise"]);
  if (top.has("schedule")) cfg.schedule = parse_schedule(top.sub("schedule"), echo["schedule"]);

  if (top.has("gramian")) {
    Section s = top.sub("gramian");
    GramianSection g;
    g.mode = s.choice("mode", {"summed", "at_time"}, "summed") == "summed" ? GramianSection::Mode::summed
                                                                           : GramianSection::Mode::at_time;
    if (s.has("time")) g.time = s.number("time");
    if (g.mode == GramianSection::Mode::at_time && !g.time)
      s.fail(root["gramian"], "mode 'at_time' needs 'time'");
    g.reference = s.choice("reference", {"origin", "initial_state"}, "origin") == "origin"
                      ? Reference::origin
                      : Reference::initial_state;
    if (s.has("snapshots")) {
      std::filesystem::path p = s.text("snapshots");
      if (p.is_relative()) p = std::filesystem::path(origin).parent_path() / p;
      g.snapshots = p;
    }
    s.finish();
    Json& e = echo["gramian"];
    e["mode"] = g.mode == GramianSection::Mode::summed ? "summed" : "at_time";
    e["time"] = g.time ? Json(*g.time) : Json(nullptr);
    e["reference"] = g.reference == Reference::origin ? "origin" : "initial_state";
    e["snapshots"] = g.snapshots ? Json(g.snapshots->filename().string()) : Json(nullptr);
    cfg.gramian = g;
  }

  if (top.has("reduce")) {
    Section s = top.sub("reduce");
    ReduceSection r;
    r.k = static_cast<Index>(s.unsigned_integer("k", 2));
    s.finish();
    echo["reduce"] = {{"k", r.k}};
    cfg.reduce = r;
  }

  if (top.has("oracle")) {
    Section s = top.sub("oracle");
    OracleSection o;
    o.tau = s.number("tau");
    if (!(o.tau > 0.0)) s.fail_key("tau", "tau must be positive");
    Section g = s.sub("grid");
    o.grid.lower = g.vector("lower");
    o.grid.upper = g.vector("upper");
    if (g.has("points")) {
      const YAML::Node pts = g.get_raw("points");
      if (pts.IsSequence()) {
        const Vector v = g.vector("points");
        for (Index i = 0; i < v.size(); ++i) o.grid.points.push_back(static_cast<int>(v[i]));
      } else {
        o.grid.points.assign(static_cast<std::size_t>(o.grid.lower.size()),
                             static_cast<int>(g.unsigned_integer("points")));
      }
    } else {
      g.require("points");
    }
    g.finish();
    checked(s, "grid", [&] {
      o.grid.validate();
      return 0;
    });
    o.bins = static_cast<int>(s.unsigned_integer("bins", 40));
    if (o.bins < 1) s.fail_key("bins", "bins must be positive");
    o.max_l1 = s.number("max_l1", 0.05);
    o.max_gramian_rel_error = s.number("max_gramian_rel_error", 0.05);
    o.evolve.checkpoints = static_cast<int>(s.unsigned_integer("checkpoints", 10));
    o.evolve.cfl = s.number("cfl", 0.9);
    o.evolve.max_mass_drift = s.number("max_mass_drift", 1e-3);
    s.finish();
    std::vector<int> pts = o.grid.points;
    echo["oracle"] = {{"tau", o.tau},
                      {"grid", {{"lower", vector_json(o.grid.lower)}, {"upper", vector_json(o.grid.upper)}, {"points", pts}}},
                      {"bins", o.bins},
                      {"max_l1", o.max_l1},
                      {"max_gramian_rel_error", o.max_gramian_rel_error},
                      {"checkpoints", o.evolve.checkpoints},
                      {"cfl", o.evolve.cfl},
                      {"max_mass_drift", o.evolve.max_mass_drift}};
    cfg.oracle = o;
  }

  if (top.has("fhn")) {
    Section s = top.sub("fhn");
    SyncSection f;
    f.threshold = s.number("sync_threshold", 0.1);
    f.hold = s.number("sync_hold", 10.0);
    if (!(f.threshold > 0.0)) s.fail_key("sync_threshold", "sync_threshold must be positive");
    if (!(f.hold >= 0.0)) s.fail_key("sync_hold", "sync_hold must be >= 0");
    s.finish();
    echo["fhn"] = {{"sync_threshold", f.threshold}, {"sync_hold", f.hold}};
    cfg.fhn = f;
  }

  if (top.has("validate")) {
    Section s = top.sub("validate");
    ValidateSection v;
    v.tau = s.number("tau");
    if (!(v.tau > 0.0)) s.fail_key("tau", "tau must be positive");
    v.replicates = s.unsigned_integer("replicates", 10);
    if (v.replicates == 0) s.fail_key("replicates", "replicates must be positive");
    v.max_relative_error = s.number("max_relative_error", 0.05);
    s.finish();
    echo["validate"] = {{"tau", v.tau}, {"replicates", v.replicates}, {"max_relative_error", v.max_relative_error}};
    cfg.validate = v;
  }

  top.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + file.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  RunConfig cfg = parse_run_config(ss.str(), file.string());
  cfg.source_sha256 = sha256_hex(file);
  return cfg;
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.noise) throw ConfigError("--seed given but the configuration has no 'noise' section");
  cfg.noise->seed = seed;
  cfg.echo["noise"]["seed"] = seed;
}

FhnExperimentConfig fhn_experiment_config(const RunConfig& cfg) {
  const auto& m = cfg.require_model();
  if (m.kind != "fhn") throw ConfigError(cfg.source.string() + ": model: repro-fhn needs kind 'fhn'");
  const auto& net = *m.model.fhn();
  const auto& noise = cfg.require_noise();
  const auto& sched = cfg.require_schedule();
  if (!sched.range)
    throw ConfigError(cfg.source.string() + ": schedule: repro-fhn needs a 'range' {start, step, stop}");
  FhnExperimentConfig f;
  f.coupling = net.coupling;
  f.input_pattern = net.input_pattern;
  f.initial_state = m.model.initial_state();
  f.temperature = noise.temperature;
  f.seed = noise.seed;
  f.paths = noise.path_count;
  f.time_start = sched.range->start;
  f.time_step = sched.range->step;
  f.time_stop = sched.range->stop;
  f.dt = sched.dt;
  if (cfg.fhn) {
    f.sync_threshold = cfg.fhn->threshold;
    f.sync_hold = cfg.fhn->hold;
  }
  return f;
}

LinearValidationConfig linear_validation_config(const RunConfig& cfg) {
  const auto& m = cfg.require_model();
  if (m.kind != "linear")
    throw ConfigError(cfg.source.string() + ": model: validate-linear needs kind 'linear'");
  if (!cfg.validate) throw ConfigError(cfg.source.string() + ": missing required section 'validate'");
  const auto& noise = cfg.require_noise();
  LinearValidationConfig v;
  v.system = *m.model.linear();
  v.initial_state = m.model.initial_state();
  v.temperature = noise.temperature;
  v.seed = noise.seed;
  v.paths = noise.path_count;
  v.dt = cfg.require_schedule().dt;
  v.tau = cfg.validate->tau;
  v.replicates = cfg.validate->replicates;
  v.max_relative_error = cfg.validate->max_relative_error;
  return v;
}

}  // namespace gibbs
