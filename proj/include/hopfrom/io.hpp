#pragma once

#include <hopfrom/continuation.hpp>
#include <hopfrom/dpim.hpp>
#include <hopfrom/romdyn.hpp>
#include <hopfrom/spectral.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopfrom {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kRomFormatVersion = 1;

using Json = nlohmann::json;

namespace detail {

inline void requireFinite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("export_rom: non-finite value in ") + what);
}

inline Json complexArray(const VecC& v, const char* what) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    requireFinite(v(i).real(), what);
    requireFinite(v(i).imag(), what);
    a.push_back({v(i).real(), v(i).imag()});
  }
  return a;
}

inline Json complexMatrix(const MatC& m, const char* what) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(complexArray(m.row(r).transpose(), what));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw std::runtime_error(std::string("import_rom: missing field '") + key + "'");
  return j.at(key);
}

inline cplx readComplex(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::runtime_error("import_rom: complex entries must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline VecC readComplexArray(const Json& j, Eigen::Index expected = -1) {
  if (!j.is_array()) throw std::runtime_error("import_rom: expected an array of complex numbers");
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) throw std::runtime_error("import_rom: array length mismatch");
  VecC v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = readComplex(j[i]);
  return v;
}

inline MatC readComplexMatrix(const Json& j) {
  const auto rows = field(j, "rows").get<Eigen::Index>(), cols = field(j, "cols").get<Eigen::Index>();
  const Json& data = field(j, "data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows) throw std::runtime_error("import_rom: matrix row count mismatch");
  MatC m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = readComplexArray(data[static_cast<std::size_t>(r)], cols).transpose();
  return m;
}

}  // namespace detail

inline Json rom_to_json(const ParametrisationROM& rom) {
  const Spectrum& s = rom.spectrum;
  Json spec{{"d", s.d},
            {"lambda", detail::complexArray(Eigen::Map<const VecC>(s.lambda.data(), static_cast<Eigen::Index>(s.lambda.size())), "lambda")},
            {"Lambda", detail::complexMatrix(s.Lambda, "Lambda")},
            {"Y", detail::complexMatrix(s.Y, "Y")},
            {"X", detail::complexMatrix(s.X, "X")},
            {"paramVector", detail::complexArray(s.paramVector, "paramVector")},
            {"conjugate", s.conjugate},
            {"nDisplacement", s.nDisplacement},
            {"secondOrder", s.secondOrder}};
  Json pairs = Json::array();
  for (const auto& jp : s.jordanPairs) pairs.push_back({{"i", jp.i}, {"j", jp.j}, {"tau", jp.tau}});
  spec["jordanPairs"] = pairs;
  Json monomials = Json::array(), W = Json::array(), f = Json::array();
  for (int id = 0; id < rom.table.size(); ++id) {
    monomials.push_back(rom.table.exponents(id));
    W.push_back(detail::complexArray(rom.W[static_cast<std::size_t>(id)], "W"));
    f.push_back(detail::complexArray(rom.f[static_cast<std::size_t>(id)], "f"));
  }
  detail::requireFinite(rom.mu0, "mu0");
  return Json{{"format", "hopfrom-rom"},
              {"version", kRomFormatVersion},
              {"model", rom.modelName},
              {"d", rom.d},
              {"order", rom.order},
              {"mu0", rom.mu0},
              {"stateDim", rom.stateDim},
              {"nDisplacement", rom.nDisplacement},
              {"secondOrder", rom.secondOrder},
              {"stateLabels", rom.stateLabels},
              {"resonance", {{"rTol", rom.resonance.rTol}, {"oneToOne", rom.resonance.oneToOne}}},
              {"spectrum", spec},
              {"monomials", monomials},
              {"W", W},
              {"f", f}};
}

inline ParametrisationROM rom_from_json(const Json& j) {
  using detail::field;
  if (field(j, "format") != "hopfrom-rom") throw std::runtime_error("import_rom: not a ROM file");
  const int version = field(j, "version").get<int>();
  if (version != kRomFormatVersion)
    throw std::runtime_error("import_rom: version mismatch (file " + std::to_string(version) + ", expected " +
                             std::to_string(kRomFormatVersion) + ")");
  ParametrisationROM rom;
  rom.modelName = field(j, "model").get<std::string>();
  rom.d = field(j, "d").get<int>();
  rom.order = field(j, "order").get<int>();
  rom.mu0 = field(j, "mu0").get<double>();
  rom.stateDim = field(j, "stateDim").get<int>();
  rom.nDisplacement = field(j, "nDisplacement").get<int>();
  rom.secondOrder = field(j, "secondOrder").get<bool>();
  rom.stateLabels = field(j, "stateLabels").get<std::vector<std::string>>();
  const Json& res = field(j, "resonance");
  rom.resonance.rTol = field(res, "rTol").get<double>();
  rom.resonance.oneToOne = field(res, "oneToOne").get<bool>();

  const Json& sj = field(j, "spectrum");
  Spectrum& s = rom.spectrum;
  s.d = field(sj, "d").get<int>();
  const VecC lambda = detail::readComplexArray(field(sj, "lambda"));
  s.lambda.assign(lambda.data(), lambda.data() + lambda.size());
  s.Lambda = detail::readComplexMatrix(field(sj, "Lambda"));
  s.Y = detail::readComplexMatrix(field(sj, "Y"));
  s.X = detail::readComplexMatrix(field(sj, "X"));
  s.paramVector = detail::readComplexArray(field(sj, "paramVector"));
  s.conjugate = field(sj, "conjugate").get<std::vector<int>>();
  s.nDisplacement = field(sj, "nDisplacement").get<int>();
  s.secondOrder = field(sj, "secondOrder").get<bool>();
  for (const Json& p : field(sj, "jordanPairs")) s.jordanPairs.push_back({field(p, "i").get<int>(), field(p, "j").get<int>(), field(p, "tau").get<double>()});

  if (rom.d < 2 || rom.order < 1 || s.d != rom.d) throw std::runtime_error("import_rom: inconsistent dimensions");
  // hand-built ROMs may carry no spectral data
  auto shapeOk = [&](const MatC& m, Eigen::Index rows) { return m.size() == 0 || (m.rows() == rows && m.cols() == rom.d); };
  if ((!s.lambda.empty() && static_cast<int>(s.lambda.size()) != rom.d) || !shapeOk(s.Lambda, rom.d) || !shapeOk(s.Y, rom.stateDim) ||
      !shapeOk(s.X, rom.stateDim))
    throw std::runtime_error("import_rom: spectrum dimensions do not match the ROM");
  rom.table = MonomialTable(rom.d + 1, rom.order);
  const Json& mono = field(j, "monomials");
  const Json& W = field(j, "W");
  const Json& f = field(j, "f");
  if (static_cast<int>(mono.size()) != rom.table.size() || W.size() != mono.size() || f.size() != mono.size())
    throw std::runtime_error("import_rom: monomial count does not match the order");
  for (int id = 0; id < rom.table.size(); ++id) {
    const auto k = static_cast<std::size_t>(id);
    if (mono[k].get<std::vector<int>>() != rom.table.exponents(id)) throw std::runtime_error("import_rom: monomial ordering mismatch");
    rom.W.push_back(detail::readComplexArray(W[k], rom.stateDim));
    rom.f.push_back(detail::readComplexArray(f[k], rom.d + 1));
  }
  return rom;
}

inline std::string rom_to_string(const ParametrisationROM& rom) { return rom_to_json(rom).dump() + "\n"; }

inline void export_rom(const ParametrisationROM& rom, const std::string& path) {
  const std::string text = rom_to_string(rom);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_rom: cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("export_rom: write failed for " + path);
}

inline ParametrisationROM import_rom(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("import_rom: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("import_rom: " + path + ": " + e.what());
  }
  try {
    return rom_from_json(j);
  } catch (const Json::exception& e) {
    throw std::runtime_error("import_rom: " + path + ": malformed field: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated table with '#' provenance lines.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& provenance, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("csv: cannot open " + path);
    for (const auto& line : provenance) out_ << "# " << line << "\n";
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    if (!out_) throw std::runtime_error("csv: write failed");
  }

 private:
  std::ofstream out_;
};

inline std::vector<std::string> diagramColumns(const BifurcationDiagram& d) {
  std::vector<std::string> c{"parameter", "mu", "period", "stable", "event", "trivial_multiplier_error", "reduced_radius"};
  for (const auto& l : d.labels) c.push_back("amp_" + l);
  return c;
}

inline void write_diagram_csv(const std::string& path, const BifurcationDiagram& d, const std::vector<std::string>& provenance) {
  CsvWriter w(path, provenance, diagramColumns(d));
  for (const auto& p : d.points) {
    std::vector<std::string> r{fmt17(p.parameter), fmt17(p.mu), fmt17(p.period), p.stable ? "1" : "0", to_string(p.event),
                               fmt17(p.trivialMultiplierError), fmt17(p.reducedRadius)};
    for (Eigen::Index i = 0; i < p.amplitude.size(); ++i) r.push_back(fmt17(p.amplitude(i)));
    w.row(r);
  }
}

inline void write_trajectory_csv(const std::string& path, const EigenTrajectory& t, const std::vector<std::string>& provenance) {
  CsvWriter w(path, provenance, {"parameter", "mode", "re", "im"});
  for (std::size_t g = 0; g < t.grid.size(); ++g)
    for (const auto& m : t.modes) {
      const cplx v = m.values[g];
      if (std::isnan(v.real())) continue;
      w.row({fmt17(t.grid[g]), std::to_string(m.id), fmt17(v.real()), fmt17(v.imag())});
    }
}

inline void write_comparison_csv(const std::string& path, const ComparisonReport& rep, const std::vector<std::string>& provenance) {
  CsvWriter w(path, provenance, {"parameter", "rom_amplitude", "fom_amplitude", "relative_error"});
  for (const auto& r : rep.rows) w.row({fmt17(r.parameter), fmt17(r.candidate), fmt17(r.reference), fmt17(r.relError)});
}

inline void write_manifold_csv(const std::string& path, const ManifoldSurface& s, const std::vector<std::string>& labels,
                               const std::vector<std::string>& provenance) {
  std::vector<std::string> cols{"trajectory", "t"};
  cols.insert(cols.end(), labels.begin(), labels.end());
  CsvWriter w(path, provenance, cols);
  for (const auto& smp : s.samples) {
    std::vector<std::string> r{std::to_string(smp.trajectory), fmt17(smp.t)};
    for (Eigen::Index i = 0; i < smp.q.size(); ++i) r.push_back(fmt17(smp.q(i)));
    w.row(r);
  }
}

}  // namespace hopfrom
