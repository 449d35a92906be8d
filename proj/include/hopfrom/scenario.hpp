#pragma once
// Declarative scenarios: YAML schema, the analysis pipeline and its artifacts.

#include <hopfrom/continuation.hpp>
#include <hopfrom/dpim.hpp>
#include <hopfrom/fem.hpp>
#include <hopfrom/io.hpp>
#include <hopfrom/models.hpp>
#include <hopfrom/romdyn.hpp>
#include <hopfrom/spectral.hpp>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hopfrom {

/// Schema violation, carrying file, line and field path in the message.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelType { Ziegler2, Ziegler3, Beck };
enum class ExpansionKind { Absolute, TimesHopf, TimesCoalescence };
enum class JordanMode { Off, On, Auto };

struct ExpansionSpec {
  ExpansionKind kind = ExpansionKind::TimesHopf;
  double value = 1.0;
  std::string tag() const;
};

struct RomSpec {
  std::string group = "rom";
  std::vector<ExpansionSpec> expansions;
  std::vector<int> orders;
  int modes = 2;
  JordanMode jordan = JordanMode::Auto;
  double jordanGap = 1e-3;  // auto mode engages below this relative master-eigenvalue gap
  double rTol = 0.05;
};

struct SweepSpec {
  double pMin = 0.0, pMax = 1.0;
  int points = 61;
};

struct DiagramSpec {
  double aboveHopf = 1.0;  // branch followed up to P_H + aboveHopf
  double dsMax = 0.05;
  int maxPoints = 400;
};

struct FomSpec {
  std::vector<double> offsets;  // relative to P_H
  std::vector<double> loads;    // absolute
  int samplesPerPeriod = 200;
  double settleTol = 1e-4;
  int maxPeriods = 2000;
};

struct ManifoldSpec {
  double offset = 0.1;  // relative to the predicted Hopf load
  std::vector<double> radii{1e-3};
  int angles = 12;
  double tEnd = 100.0;
  double sampleDt = 0.1;
};

struct Scenario {
  std::string name;
  std::string sourcePath;
  std::string sha256;
  ModelType model = ModelType::Ziegler2;
  ZieglerParams ziegler;
  BeckParams beck;
  std::optional<SweepSpec> sweep;
  std::vector<RomSpec> roms;
  std::optional<DiagramSpec> diagram;
  std::optional<FomSpec> fom;
  std::optional<ManifoldSpec> manifold;
  std::string compareCoordinate;  // label; empty selects the model default
  double compareThreshold = 0.05;
  std::string outputDirectory = "out";
  std::set<std::string> formats{"csv", "json", "rom"};
};

inline std::string ExpansionSpec::tag() const {
  char buf[64];
  switch (kind) {
    case ExpansionKind::Absolute: std::snprintf(buf, sizeof buf, "P%g", value); break;
    case ExpansionKind::TimesHopf: std::snprintf(buf, sizeof buf, "%gPH", value); break;
    case ExpansionKind::TimesCoalescence: std::snprintf(buf, sizeof buf, "%gPc", value); break;
  }
  return buf;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

namespace detail {

/// A YAML node with its field path, for diagnostics.
class Cfg {
 public:
  Cfg(YAML::Node node, std::string path, std::shared_ptr<const std::string> file)
      : node_(std::move(node)), path_(std::move(path)), file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << *file_;
    const YAML::Mark m = node_.Mark();
    if (!m.is_null()) os << ":" << m.line + 1 << ":" << m.column + 1;
    os << ": " << (path_.empty() ? "<root>" : path_) << ": " << msg;
    throw ConfigError(os.str());
  }

  bool isMap() const { return node_.IsMap(); }
  bool has(const std::string& key) const { return node_.IsMap() && node_[key] && !node_[key].IsNull(); }
  const std::string& path() const { return path_; }

  Cfg child(const std::string& key) const {
    if (!has(key)) fail("missing required field '" + key + "'");
    return Cfg(node_[key], path_ + "/" + key, file_);
  }

  void requireMap() const {
    if (!node_.IsMap()) fail("expected a mapping");
  }

  void allowOnly(std::initializer_list<const char*> keys) const {
    requireMap();
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        Cfg(kv.first, path_ + "/" + k, file_).fail("unknown field '" + k + "'");
    }
  }

  std::vector<Cfg> items() const {
    if (!node_.IsSequence()) fail("expected a list");
    std::vector<Cfg> out;
    for (std::size_t i = 0; i < node_.size(); ++i) out.emplace_back(node_[i], path_ + "/" + std::to_string(i), file_);
    return out;
  }

  double asDouble() const {
    if (!node_.IsScalar()) fail("expected a number");
    try {
      return node_.as<double>();
    } catch (const YAML::Exception&) {
      fail("expected a number, got '" + node_.Scalar() + "'");
    }
  }

  int asInt() const {
    if (!node_.IsScalar()) fail("expected an integer");
    try {
      return node_.as<int>();
    } catch (const YAML::Exception&) {
      fail("expected an integer, got '" + node_.Scalar() + "'");
    }
  }

  std::string asString() const {
    if (!node_.IsScalar()) fail("expected a string");
    return node_.Scalar();
  }

  double num(const std::string& key, double def) const { return has(key) ? child(key).asDouble() : def; }
  int integer(const std::string& key, int def) const { return has(key) ? child(key).asInt() : def; }
  std::string str(const std::string& key, const std::string& def) const { return has(key) ? child(key).asString() : def; }

  double positive(const std::string& key, double def) const {
    const double v = num(key, def);
    if (!(v > 0)) child(key).fail("must be positive");
    return v;
  }
  double nonNegative(const std::string& key, double def) const {
    const double v = num(key, def);
    if (!(v >= 0)) child(key).fail("must be non-negative");
    return v;
  }
  int atLeast(const std::string& key, int def, int lo) const {
    const int v = integer(key, def);
    if (v < lo) child(key).fail("must be at least " + std::to_string(lo));
    return v;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& c : child(key).items()) out.push_back(c.asDouble());
    return out;
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::shared_ptr<const std::string> file_;
};

inline void readZiegler(const Cfg& m, Scenario& s) {
  m.allowOnly({"type", "preset", "masses", "stiffnesses", "length", "damping"});
  const int n = s.model == ModelType::Ziegler2 ? 2 : 3;
  const std::string preset = m.str("preset", "unit");
  if (preset == "unit") s.ziegler = n == 2 ? ZieglerParams::unit2() : ZieglerParams::unit3();
  else if (preset == "tuned") s.ziegler = n == 2 ? ZieglerParams::tuned2() : ZieglerParams::tuned3();
  else m.child("preset").fail("expected 'unit' or 'tuned'");
  for (const char* key : {"masses", "stiffnesses"}) {
    if (!m.has(key)) continue;
    const auto v = m.numbers(key);
    if (static_cast<int>(v.size()) != n) m.child(key).fail("expected " + std::to_string(n) + " values");
    for (double x : v)
      if (!(x > 0)) m.child(key).fail("values must be positive");
    (std::string(key) == "masses" ? s.ziegler.m : s.ziegler.k) = v;
  }
  s.ziegler.L = m.positive("length", s.ziegler.L);
  if (m.has("damping")) {
    const Cfg d = m.child("damping");
    d.allowOnly({"mass", "stiffness"});
    s.ziegler.xi_m = d.nonNegative("mass", 0.0);
    s.ziegler.xi_k = d.nonNegative("stiffness", 0.0);
  }
}

inline void readBeck(const Cfg& m, Scenario& s) {
  m.allowOnly({"type", "length", "height", "young", "poisson", "density", "mesh", "damping"});
  BeckParams& b = s.beck;
  b.length = m.positive("length", b.length);
  b.height = m.positive("height", b.height);
  b.young = m.positive("young", b.young);
  b.poisson = m.num("poisson", b.poisson);
  if (!(b.poisson >= 0 && b.poisson < 0.5)) m.child("poisson").fail("must lie in [0, 0.5)");
  b.density = m.positive("density", b.density);
  if (m.has("mesh")) {
    const Cfg mesh = m.child("mesh");
    mesh.allowOnly({"nx", "ny"});
    b.nx = mesh.atLeast("nx", b.nx, 1);
    b.ny = mesh.atLeast("ny", b.ny, 1);
  }
  if (m.has("damping")) {
    const Cfg d = m.child("damping");
    d.allowOnly({"mass", "stiffness", "omega_ref"});
    b.xiMass = d.nonNegative("mass", 0.0);
    b.xiStiff = d.nonNegative("stiffness", 0.0);
    b.omegaRef = d.positive("omega_ref", b.omegaRef);
  }
}

inline ExpansionSpec readExpansion(const Cfg& e) {
  ExpansionSpec x;
  if (!e.isMap()) {
    x.kind = ExpansionKind::Absolute;
    x.value = e.asDouble();
    return x;
  }
  e.allowOnly({"value", "times_PH", "times_Pc"});
  int given = 0;
  if (e.has("value")) {
    x = {ExpansionKind::Absolute, e.num("value", 0)};
    ++given;
  }
  if (e.has("times_PH")) {
    x = {ExpansionKind::TimesHopf, e.positive("times_PH", 1)};
    ++given;
  }
  if (e.has("times_Pc")) {
    x = {ExpansionKind::TimesCoalescence, e.positive("times_Pc", 1)};
    ++given;
  }
  if (given != 1) e.fail("expected exactly one of 'value', 'times_PH', 'times_Pc'");
  return x;
}

inline RomSpec readRom(const Cfg& r) {
  r.allowOnly({"name", "expansion", "expansions", "order", "orders", "modes", "jordan", "jordan_gap", "r_tol"});
  RomSpec spec;
  spec.group = r.str("name", "rom");
  if (r.has("expansion") == r.has("expansions")) r.fail("expected exactly one of 'expansion', 'expansions'");
  if (r.has("expansion")) spec.expansions.push_back(readExpansion(r.child("expansion")));
  else
    for (const auto& e : r.child("expansions").items()) spec.expansions.push_back(readExpansion(e));
  if (r.has("order") == r.has("orders")) r.fail("expected exactly one of 'order', 'orders'");
  if (r.has("order")) spec.orders.push_back(r.child("order").asInt());
  else
    for (const auto& o : r.child("orders").items()) spec.orders.push_back(o.asInt());
  if (spec.expansions.empty() || spec.orders.empty()) r.fail("needs at least one expansion and one order");
  for (int o : spec.orders)
    if (o < 1 || o > 15) r.child(r.has("order") ? "order" : "orders").fail("orders must lie in [1, 15]");
  spec.modes = r.integer("modes", 2);
  if (spec.modes != 1 && spec.modes != 2) r.child("modes").fail("expected 1 or 2");
  const std::string j = r.str("jordan", "auto");
  if (j == "on") spec.jordan = JordanMode::On;
  else if (j == "off") spec.jordan = JordanMode::Off;
  else if (j == "auto") spec.jordan = JordanMode::Auto;
  else r.child("jordan").fail("expected 'on', 'off' or 'auto'");
  if (spec.jordan == JordanMode::On && spec.modes != 2) r.child("jordan").fail("Jordan enforcement needs two master modes");
  spec.jordanGap = r.positive("jordan_gap", spec.jordanGap);
  spec.rTol = r.positive("r_tol", spec.rTol);
  return spec;
}

}  // namespace detail

/// Parses and validates a scenario; text is the file content, label names it in diagnostics.
inline Scenario parse_scenario(const std::string& text, const std::string& label) {
  auto file = std::make_shared<const std::string>(label);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << label << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": syntax error: " << e.msg;
    throw ConfigError(os.str());
  }
  using detail::Cfg;
  const Cfg top(root, "", file);
  top.allowOnly({"name", "model", "analysis", "output"});
  Scenario s;
  s.sourcePath = label;
  s.sha256 = sha256_hex(text);
  s.name = top.child("name").asString();
  if (s.name.empty()) top.child("name").fail("must not be empty");

  const Cfg m = top.child("model");
  m.requireMap();
  const std::string type = m.child("type").asString();
  if (type == "ziegler2") s.model = ModelType::Ziegler2;
  else if (type == "ziegler3") s.model = ModelType::Ziegler3;
  else if (type == "beck") s.model = ModelType::Beck;
  else m.child("type").fail("expected 'ziegler2', 'ziegler3' or 'beck'");
  if (s.model == ModelType::Beck) detail::readBeck(m, s);
  else detail::readZiegler(m, s);

  if (!top.has("analysis")) top.fail("missing required field 'analysis'");
  const Cfg a = top.child("analysis");
  if (!a.isMap() || YAML::Node(root["analysis"]).size() == 0) a.fail("analysis block is empty: nothing to run");
  a.allowOnly({"sweep", "roms", "diagram", "fom", "manifold", "compare"});
  if (a.has("sweep")) {
    const Cfg w = a.child("sweep");
    w.allowOnly({"p_min", "p_max", "points"});
    SweepSpec sw;
    sw.pMin = w.num("p_min", 0.0);
    sw.pMax = w.child("p_max").asDouble();
    if (!(sw.pMax > sw.pMin)) w.child("p_max").fail("must exceed p_min");
    sw.points = w.atLeast("points", sw.points, 2);
    s.sweep = sw;
  }
  if (a.has("roms"))
    for (const auto& r : a.child("roms").items()) s.roms.push_back(detail::readRom(r));
  if (a.has("diagram")) {
    const Cfg d = a.child("diagram");
    d.allowOnly({"above_hopf", "ds_max", "max_points"});
    DiagramSpec ds;
    ds.aboveHopf = d.positive("above_hopf", ds.aboveHopf);
    ds.dsMax = d.positive("ds_max", ds.dsMax);
    ds.maxPoints = d.atLeast("max_points", ds.maxPoints, 2);
    s.diagram = ds;
  }
  if (a.has("fom")) {
    const Cfg f = a.child("fom");
    f.allowOnly({"offsets", "loads", "samples_per_period", "settle_tol", "max_periods"});
    FomSpec fs;
    if (f.has("offsets")) fs.offsets = f.numbers("offsets");
    if (f.has("loads")) fs.loads = f.numbers("loads");
    if (fs.offsets.empty() && fs.loads.empty()) f.fail("expected 'offsets' or 'loads'");
    fs.samplesPerPeriod = f.atLeast("samples_per_period", fs.samplesPerPeriod, 8);
    fs.settleTol = f.positive("settle_tol", fs.settleTol);
    fs.maxPeriods = f.atLeast("max_periods", fs.maxPeriods, 4);
    s.fom = fs;
  }
  if (a.has("manifold")) {
    const Cfg mf = a.child("manifold");
    mf.allowOnly({"offset", "radii", "angles", "t_end", "sample_dt"});
    ManifoldSpec ms;
    ms.offset = mf.num("offset", ms.offset);
    if (mf.has("radii")) ms.radii = mf.numbers("radii");
    for (double r : ms.radii)
      if (!(r > 0)) mf.child("radii").fail("radii must be positive");
    ms.angles = mf.atLeast("angles", ms.angles, 1);
    ms.tEnd = mf.positive("t_end", ms.tEnd);
    ms.sampleDt = mf.positive("sample_dt", ms.sampleDt);
    s.manifold = ms;
  }
  if (a.has("compare")) {
    const Cfg c = a.child("compare");
    c.allowOnly({"coordinate", "threshold"});
    s.compareCoordinate = c.str("coordinate", "");
    s.compareThreshold = c.positive("threshold", s.compareThreshold);
  }
  if (!s.sweep && s.roms.empty() && !s.fom) a.fail("analysis block needs at least one of 'sweep', 'roms', 'fom'");

  // events referenced downstream must be computed in the same run
  bool needsHopf = s.fom && !s.fom->offsets.empty();
  bool needsCoalescence = false;
  for (const auto& r : s.roms)
    for (const auto& e : r.expansions) {
      needsHopf |= e.kind == ExpansionKind::TimesHopf;
      needsCoalescence |= e.kind == ExpansionKind::TimesCoalescence;
    }
  if (s.model == ModelType::Beck && s.beck.xiStiff > 0) needsHopf = true;
  if ((needsHopf || needsCoalescence) && !s.sweep) a.fail("P_H or P_c is referenced but no 'sweep' computes it");
  if (needsCoalescence && s.model == ModelType::Beck) a.fail("'times_Pc' is not available for the FE model");
  if ((s.diagram || s.manifold) && s.roms.empty()) a.fail("'diagram' and 'manifold' need at least one ROM");

  if (top.has("output")) {
    const Cfg o = top.child("output");
    o.allowOnly({"directory", "formats"});
    s.outputDirectory = o.str("directory", s.outputDirectory);
    if (o.has("formats")) {
      s.formats.clear();
      for (const auto& f : o.child("formats").items()) {
        const std::string v = f.asString();
        if (v != "csv" && v != "json" && v != "rom") f.fail("expected 'csv', 'json' or 'rom'");
        s.formats.insert(v);
      }
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Pipeline

struct RunOptions {
  std::string outDir;  // overrides the scenario output directory when set
  int threads = 1;
  bool verbose = false;
  std::ostream* log = &std::cerr;
};

struct RomResult {
  std::string name;
  int order = 0, modes = 0;
  double expansion = 0.0;
  bool jordan = false;
  std::string jordanNote;
  std::optional<double> hopf;  // absolute predicted Hopf load
  std::string hopfNote;
  std::optional<BifurcationDiagram> diagram;
  std::string diagramNote;
  std::optional<ComparisonReport> comparison;
  ParametrisationROM rom;
};

struct RunSummary {
  std::optional<EigenTrajectory> trajectory;
  std::optional<double> Pc, PH, Pd, omegaC, omegaH;
  std::vector<RomResult> roms;
  std::optional<BifurcationDiagram> fom;
  std::vector<std::string> files;
};

namespace detail {

class Logger {
 public:
  Logger(std::ostream* out, bool verbose) : out_(out), verbose_(verbose) {}
  void info(const std::string& msg) { write(msg); }
  void debug(const std::string& msg) {
    if (verbose_) write(msg);
  }

 private:
  void write(const std::string& msg) {
    if (!out_) return;
    std::lock_guard<std::mutex> lock(mu_);
    *out_ << "[hopfrom] " << msg << "\n";
    out_->flush();
  }
  std::ostream* out_;
  bool verbose_;
  std::mutex mu_;
};

/// Runs task(i) for i in [0, n) on at most `threads` workers; the first failure by index is rethrown.
inline void parallel_for(int n, int threads, const std::function<void(int)>& task) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string g17(double v) { return fmt17(v); }

}  // namespace detail

/// Model assembly shared by the pipeline and the acceptance checks.
struct ScenarioModel {
  SecondOrderModel model;
  std::optional<BeckModel> beck;
  bool firstOrderEngine = true;  // lumped models carry a load-dependent cubic
};

inline ScenarioModel build_scenario_model(const Scenario& s) {
  ScenarioModel out;
  switch (s.model) {
    case ModelType::Ziegler2: out.model = build_ziegler2(s.ziegler); break;
    case ModelType::Ziegler3: out.model = build_ziegler3(s.ziegler); break;
    case ModelType::Beck:
      out.beck = assemble_beck(s.beck);
      out.model = out.beck->model;
      out.firstOrderEngine = false;
      break;
  }
  return out;
}

inline RunSummary run_scenario(const Scenario& s, const RunOptions& ro = {}) {
  namespace fs = std::filesystem;
  detail::Logger log(ro.log, ro.verbose);
  const fs::path out = ro.outDir.empty() ? fs::path(s.outputDirectory) : fs::path(ro.outDir);
  fs::create_directories(out);
  const bool csv = s.formats.count("csv") > 0, json = s.formats.count("json") > 0, romFiles = s.formats.count("rom") > 0;
  const std::vector<std::string> provenance{std::string("hopfrom ") + kVersion, "scenario " + s.name + " sha256 " + s.sha256,
                                            std::string("modules polytensor models spectral dpim romdyn continuation cli ") + kVersion};
  RunSummary sum;
  auto emitted = [&](const fs::path& p) {
    sum.files.push_back(p.string());
    log.debug("wrote " + p.string());
  };

  // model and equilibrium
  ScenarioModel sm = build_scenario_model(s);
  SecondOrderModel& model = sm.model;
  log.info("model " + model.name + " with " + std::to_string(model.nDof) + " dof");

  // sweep and events
  if (s.sweep) {
    const SweepSpec& sw = *s.sweep;
    if (sm.beck) {
      const HopfLocation h = damp_at_hopf(*sm.beck, s.beck, sw.pMin, sw.pMax);
      model = sm.beck->model;
      sum.PH = h.P;
      sum.omegaH = h.omega;
      log.info("hopf load " + detail::g17(h.P) + " (omega " + detail::g17(h.omega) + ")");
      sum.trajectory = eigen_sweep(pencil_factory(model, false), sw.pMin, sw.pMax, sw.points);
    } else {
      sum.trajectory = analyse_stability(pencil_factory(model, true), sw.pMin, sw.pMax, sw.points);
      sum.Pc = sum.trajectory->Pc;
      sum.PH = sum.trajectory->PH;
      sum.Pd = sum.trajectory->Pd;
      sum.omegaC = sum.trajectory->omegaC;
      if (sum.PH) {
        double best = -1;
        for (cplx l : pencil_eigenvalues(make_pencil(at_load(model, *sum.PH))))
          if (l.imag() > 0 && (best < 0 || std::abs(l.real()) < best)) {
            best = std::abs(l.real());
            sum.omegaH = l.imag();
          }
      }
      auto show = [](const std::optional<double>& v) { return v ? detail::g17(*v) : std::string("none"); };
      log.info("events P_c " + show(sum.Pc) + ", P_H " + show(sum.PH) + ", P_d " + show(sum.Pd));
    }
    for (const auto& w : sum.trajectory->warnings) log.info("sweep warning: " + w);
    if (csv) {
      const fs::path p = out / "eigen_trajectory.csv";
      write_trajectory_csv(p.string(), *sum.trajectory, provenance);
      emitted(p);
    }
  } else if (sm.beck) {
    apply_rayleigh(*sm.beck, s.beck, 0.0);
    model = sm.beck->model;
  }

  auto requireEvent = [](const std::optional<double>& v, const char* what) {
    if (!v) throw std::runtime_error(std::string("scenario: ") + what + " was not found by the sweep");
    return *v;
  };

  // comparison coordinate
  int coordinate = sm.beck ? sm.beck->mesh->tipVerticalDof() : model.nDof - 1;
  if (!s.compareCoordinate.empty()) {
    auto it = std::find(model.dofLabels.begin(), model.dofLabels.end(), s.compareCoordinate);
    if (it == model.dofLabels.end()) throw ConfigError(s.sourcePath + ": /analysis/compare/coordinate: unknown label '" + s.compareCoordinate + "'");
    coordinate = static_cast<int>(it - model.dofLabels.begin());
  }

  // full-order reference
  if (s.fom) {
    std::vector<double> loads = s.fom->loads;
    if (!s.fom->offsets.empty()) {
      const double PH = requireEvent(sum.PH, "P_H");
      for (double o : s.fom->offsets) loads.push_back(PH + o);
    }
    std::sort(loads.begin(), loads.end());
    FomOptions fo;
    fo.cycle.samplesPerPeriod = s.fom->samplesPerPeriod;
    fo.cycle.settleTol = s.fom->settleTol;
    fo.cycle.maxPeriods = s.fom->maxPeriods;
    if (sm.beck) {
      fo.phaseCoordinate = coordinate;
      fo.cycle.settleCoordinates = {coordinate};
    }
    std::vector<BifurcationDiagram> parts(loads.size());
    log.info("full-order reference at " + std::to_string(loads.size()) + " loads");
    detail::parallel_for(static_cast<int>(loads.size()), ro.threads, [&](int i) {
      parts[static_cast<std::size_t>(i)] = fom_diagram(model, {loads[static_cast<std::size_t>(i)]}, fo);
      log.debug("fom load " + detail::g17(loads[static_cast<std::size_t>(i)]) + " done");
    });
    BifurcationDiagram fom = parts.empty() ? BifurcationDiagram{} : parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) fom.points.push_back(parts[i].points.front());
    fom.model = model.name;
    fom.source = "fom";
    sum.fom = fom;
    if (csv) {
      const fs::path p = out / "fom_reference.csv";
      write_diagram_csv(p.string(), fom, provenance);
      emitted(p);
    }
  }

  // ROM builds, diagrams and comparisons
  struct Job {
    const RomSpec* spec;
    ExpansionSpec expansion;
    int order;
  };
  std::vector<Job> jobs;
  for (const auto& r : s.roms)
    for (const auto& e : r.expansions)
      for (int o : r.orders) jobs.push_back({&r, e, o});
  sum.roms.resize(jobs.size());
  detail::parallel_for(static_cast<int>(jobs.size()), ro.threads, [&](int i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    RomResult& res = sum.roms[static_cast<std::size_t>(i)];
    double Pe = job.expansion.value;
    if (job.expansion.kind == ExpansionKind::TimesHopf) Pe *= requireEvent(sum.PH, "P_H");
    if (job.expansion.kind == ExpansionKind::TimesCoalescence) Pe *= requireEvent(sum.Pc, "P_c");
    res.name = job.spec->group + "_m" + std::to_string(job.spec->modes) + "_o" + std::to_string(job.order) + "_" + job.expansion.tag();
    res.order = job.order;
    res.modes = job.spec->modes;
    res.expansion = Pe;
    const SecondOrderModel atPe = at_load(model, Pe);
    const FirstOrderDAE dae = sm.firstOrderEngine ? recast_to_dae(atPe) : FirstOrderDAE{};
    const LinearPencil pen = sm.firstOrderEngine ? make_pencil(dae) : make_pencil(atPe);
    Spectrum spec = solve_master_eigen(pen, job.spec->modes);
    const double gap = master_gap(spec);
    const bool enforce = job.spec->jordan == JordanMode::On || (job.spec->jordan == JordanMode::Auto && gap < job.spec->jordanGap);
    if (enforce) {
      spec = enforce_jordan(spec, pen, master_jordan_pairs(spec));
      res.jordan = true;
      res.jordanNote = (job.spec->jordan == JordanMode::Auto ? "auto: master gap " : "on: master gap ") + detail::g17(gap);
      log.info(res.name + ": Jordan enforcement engaged (" + res.jordanNote + ")");
    }
    BuildOptions bo;
    bo.order = job.order;
    bo.resonance.rTol = job.spec->rTol;
    res.rom = sm.firstOrderEngine ? build_rom_firstorder(dae, spec, bo) : build_rom_secondorder(atPe, spec, bo);
    log.info(res.name + ": built at P_e = " + detail::g17(Pe) + " with " + std::to_string(res.rom.table.size()) + " monomials");
    if (romFiles) export_rom(res.rom, (out / ("rom_" + res.name + ".json")).string());
    try {
      res.hopf = res.rom.mu0 + find_hopf(res.rom);
      log.info(res.name + ": predicted Hopf load " + detail::g17(*res.hopf));
    } catch (const std::runtime_error& e) {
      res.hopfNote = e.what();
      log.info(res.name + ": no Hopf point found (" + res.hopfNote + ")");
    }
    if (s.diagram && res.hopf) {
      ContinuationOptions co;
      const double top = (sum.PH ? *sum.PH : *res.hopf) + s.diagram->aboveHopf;
      co.muMax = top - res.rom.mu0;
      co.dsMax = s.diagram->dsMax;
      co.maxPoints = s.diagram->maxPoints;
      try {
        res.diagram = continue_periodic(res.rom, co);
        log.debug(res.name + ": branch with " + std::to_string(res.diagram->points.size()) + " points, " + res.diagram->termination);
      } catch (const std::runtime_error& e) {
        res.diagramNote = e.what();
        log.info(res.name + ": continuation failed (" + res.diagramNote + ")");
      }
    }
    if (res.diagram && sum.fom) {
      try {
        res.comparison = diagram_compare(*res.diagram, *sum.fom, {coordinate, s.compareThreshold});
      } catch (const std::invalid_argument& e) {
        log.info(res.name + ": no comparison (" + std::string(e.what()) + ")");
      }
    }
  });
  for (const auto& res : sum.roms) {
    if (romFiles) emitted(out / ("rom_" + res.name + ".json"));
    if (csv && res.diagram) {
      const fs::path p = out / ("diagram_" + res.name + ".csv");
      write_diagram_csv(p.string(), *res.diagram, provenance);
      emitted(p);
    }
    if (csv && res.comparison) {
      const fs::path p = out / ("comparison_" + res.name + ".csv");
      write_comparison_csv(p.string(), *res.comparison, provenance);
      emitted(p);
    }
    if (csv && s.manifold && res.hopf) {
      ManifoldGrid grid;
      grid.radii = s.manifold->radii;
      grid.angles = s.manifold->angles;
      grid.tEnd = s.manifold->tEnd;
      grid.sampleDt = s.manifold->sampleDt;
      const ManifoldSurface surf = trace_unstable_manifold(res.rom, *res.hopf + s.manifold->offset - res.rom.mu0, grid);
      const fs::path p = out / ("manifold_" + res.name + ".csv");
      write_manifold_csv(p.string(), surf, res.rom.stateLabels, provenance);
      emitted(p);
    }
  }

  if (json) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json report{{"scenario", s.name},
                {"scenario_sha256", s.sha256},
                {"version", kVersion},
                {"model", model.name},
                {"events", {{"P_c", opt(sum.Pc)}, {"P_H", opt(sum.PH)}, {"P_d", opt(sum.Pd)}, {"omega_c", opt(sum.omegaC)}, {"omega_H", opt(sum.omegaH)}}},
                {"compare_coordinate", model.dofLabels.empty() ? Json(coordinate) : Json(model.dofLabels[static_cast<std::size_t>(coordinate)])},
                {"threshold", s.compareThreshold}};
    Json roms = Json::array();
    for (const auto& r : sum.roms) {
      Json j{{"name", r.name},
             {"order", r.order},
             {"modes", r.modes},
             {"expansion", r.expansion},
             {"jordan", r.jordan},
             {"jordan_note", r.jordanNote},
             {"hopf", opt(r.hopf)},
             {"hopf_note", r.hopfNote}};
      if (r.hopf && sum.PH) j["hopf_relative_error"] = std::abs(*r.hopf - *sum.PH) / *sum.PH;
      if (r.diagram) {
        j["diagram_points"] = r.diagram->points.size();
        j["termination"] = r.diagram->termination;
        Json events = Json::array();
        for (const auto& p : r.diagram->points)
          if (p.event != BranchEvent::None) events.push_back({{"type", to_string(p.event)}, {"parameter", p.parameter}});
        j["events"] = events;
      } else if (!r.diagramNote.empty()) {
        j["diagram_error"] = r.diagramNote;
      }
      if (r.comparison) {
        j["validity"] = std::isinf(r.comparison->validity) ? Json(nullptr) : Json(r.comparison->validity);
        j["max_relative_error"] = r.comparison->maxError;
        if (sum.PH && !std::isinf(r.comparison->validity)) j["validity_above_hopf"] = r.comparison->validity - *sum.PH;
      }
      roms.push_back(j);
    }
    report["roms"] = roms;
    if (sum.fom) report["fom_loads"] = sum.fom->points.size();
    const fs::path p = out / "report.json";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << report.dump(2) << "\n";
    emitted(p);
  }
  log.info("done: " + std::to_string(sum.files.size()) + " files in " + out.string());
  return sum;
}

}  // namespace hopfrom
