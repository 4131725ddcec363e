#pragma once

// CSV / JSON export and the matching readers.
//
// Every CSV starts with one comment line "# config_digest=<hex>", then a
// header row. Numbers are printed with 12 significant digits and rows end
// in LF.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "nmode/continuation.hpp"
#include "nmode/dynamics.hpp"
#include "nmode/errors.hpp"
#include "nmode/lattice_model.hpp"
#include "nmode/solution_types.hpp"

namespace nmode {

using json = nlohmann::json;

/// 64-bit FNV-1a of the compact JSON dump (object keys are sorted).
inline std::string config_digest(const json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw IoError("trailing characters in number: '" + s + "'");
  return v;
}

struct CsvTable {
  std::string digest;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw IoError("row width does not match the header");
    rows.push_back(std::move(row));
  }
  Eigen::Index column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<Eigen::Index>(i);
    throw IoError("missing column '" + name + "'");
  }
  double number(std::size_t row, const std::string& name) const {
    return parse_number(rows.at(row).at(static_cast<std::size_t>(column(name))));
  }
  const std::string& text(std::size_t row, const std::string& name) const {
    return rows.at(row).at(static_cast<std::size_t>(column(name)));
  }
};

inline std::vector<std::string> numbers(std::initializer_list<double> vs) {
  std::vector<std::string> out;
  for (double v : vs) out.push_back(format_number(v));
  return out;
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << body;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string to_csv_text(const CsvTable& t) {
  std::ostringstream os;
  os << "# config_digest=" << t.digest << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
  return os.str();
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_text(path, to_csv_text(t)); }

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# config_digest=";
      if (line.rfind(key, 0) == 0) t.digest = line.substr(key.size());
      continue;
    }
    if (!header) {
      t.columns = split_csv_line(line);
      header = true;
    } else {
      t.add_row(split_csv_line(line));
    }
  }
  if (!header) throw IoError("no header row in " + path.string());
  return t;
}

// ---------------------------------------------------------------------------
// Typed tables

namespace detail {

inline void amplitude_columns(std::vector<std::string>& cols, Eigen::Index n) {
  for (Eigen::Index k = 1; k <= n; ++k) cols.push_back("q_" + std::to_string(k));
  for (Eigen::Index k = 1; k <= n; ++k) cols.push_back("sign_" + std::to_string(k));
}

inline void amplitude_cells(std::vector<std::string>& row, const Eigen::VectorXd& a) {
  for (Eigen::Index k = 0; k < a.size(); ++k) row.push_back(format_number(a(k) * a(k)));
  for (Eigen::Index k = 0; k < a.size(); ++k) row.push_back(a(k) < 0.0 ? "-1" : "1");
}

inline Eigen::VectorXd read_amplitudes(const CsvTable& t, std::size_t row) {
  Eigen::Index n = 0;
  while (true) {
    bool found = false;
    for (const auto& c : t.columns)
      if (c == "q_" + std::to_string(n + 1)) found = true;
    if (!found) break;
    ++n;
  }
  Eigen::VectorXd a(n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    const double q = t.number(row, "q_" + std::to_string(k));
    const double s = t.number(row, "sign_" + std::to_string(k));
    a(k - 1) = (s < 0.0 ? -1.0 : 1.0) * std::sqrt(std::max(q, 0.0));
  }
  return a;
}

}  // namespace detail

inline CsvTable solutions_table(const std::vector<AmplitudeSolution>& sols, Eigen::Index n, const std::string& digest) {
  CsvTable t;
  t.digest = digest;
  t.columns = {"eta", "sigma", "Omega"};
  detail::amplitude_columns(t.columns, n);
  t.columns.push_back("residual_norm");
  for (const auto& s : sols) {
    if (s.a.size() != n) throw ParameterError("solution size differs from the table width");
    auto row = numbers({s.eta, s.sigma, s.omega});
    detail::amplitude_cells(row, s.a);
    row.push_back(format_number(s.residual_norm));
    t.add_row(std::move(row));
  }
  return t;
}

inline std::vector<AmplitudeSolution> read_solutions(const CsvTable& t) {
  std::vector<AmplitudeSolution> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    AmplitudeSolution s;
    s.eta = t.number(i, "eta");
    s.sigma = t.number(i, "sigma");
    s.omega = t.number(i, "Omega");
    s.a = detail::read_amplitudes(t, i);
    s.residual_norm = t.number(i, "residual_norm");
    out.push_back(s);
  }
  return out;
}

inline CsvTable branch_table(const Branch& b, const std::string& digest) {
  CsvTable t;
  t.digest = digest;
  const Eigen::Index n = b.points.empty() ? 0 : b.points.front().a.size();
  t.columns = {"arclength", "eta", "Omega"};
  detail::amplitude_columns(t.columns, n);
  t.columns.push_back("min_singular_value");
  for (const auto& p : b.points) {
    auto row = numbers({p.arclength, p.eta, p.omega});
    detail::amplitude_cells(row, p.a);
    row.push_back(format_number(p.min_singular_value));
    t.add_row(std::move(row));
  }
  return t;
}

inline Branch read_branch(const CsvTable& t, double sigma, const std::string& label = "") {
  Branch b;
  b.sigma = sigma;
  b.family_label = label;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    BranchPoint p;
    p.arclength = t.number(i, "arclength");
    p.eta = t.number(i, "eta");
    p.omega = t.number(i, "Omega");
    p.a = detail::read_amplitudes(t, i);
    p.min_singular_value = t.number(i, "min_singular_value");
    b.points.push_back(p);
  }
  return b;
}

inline CsvTable spectrum_table(const ModelParams& p, const ModeBasis& closed, const ModeBasis& numeric,
                               const std::string& digest) {
  CsvTable t;
  t.digest = digest;
  t.columns = {"j", "mu_closed", "mu_numeric", "offset"};
  for (int k = 1; k <= p.n; ++k) t.columns.push_back("alpha_" + std::to_string(k));
  for (int j = 0; j < p.n; ++j) {
    auto row = numbers({static_cast<double>(j + 1), closed.mu(j), numeric.mu(j),
                        p.beta > 0.0 ? (closed.mu(j) - p.lambda_d) / p.beta : 0.0});
    for (int k = 0; k < p.n; ++k) row.push_back(format_number(closed.a(j, k)));
    t.add_row(std::move(row));
  }
  return t;
}

/// Closed-form basis back from a spectrum table.
inline ModeBasis read_spectrum(const CsvTable& t) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
  ModeBasis b{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto r = static_cast<std::size_t>(j);
    b.mu(j) = t.number(r, "mu_closed");
    for (Eigen::Index k = 0; k < n; ++k) b.a(j, k) = t.number(r, "alpha_" + std::to_string(k + 1));
  }
  return b;
}

inline CsvTable trajectory_table(const Trajectory& tr, const std::string& digest) {
  CsvTable t;
  t.digest = digest;
  const Eigen::Index n = tr.samples.empty() ? 0 : tr.samples.front().d.size();
  t.columns = {"t"};
  for (Eigen::Index k = 1; k <= n; ++k) {
    t.columns.push_back("re_" + std::to_string(k));
    t.columns.push_back("im_" + std::to_string(k));
  }
  t.columns.push_back("norm");
  t.columns.push_back("energy");
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    const auto& d = tr.samples[i].d;
    std::vector<std::string> row{format_number(tr.samples[i].t)};
    for (Eigen::Index k = 0; k < n; ++k) {
      row.push_back(format_number(d(k).real()));
      row.push_back(format_number(d(k).imag()));
    }
    row.push_back(format_number(tr.norm[i]));
    row.push_back(format_number(tr.energy[i]));
    t.add_row(std::move(row));
  }
  return t;
}

/// Samples, norm and energy columns (the drift report is not stored).
inline Trajectory read_trajectory(const CsvTable& t) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.columns.size() - 3) / 2;
  Trajectory tr;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ModeState s{Eigen::VectorXcd(n), t.number(i, "t")};
    for (Eigen::Index k = 1; k <= n; ++k)
      s.d(k - 1) = {t.number(i, "re_" + std::to_string(k)), t.number(i, "im_" + std::to_string(k))};
    tr.samples.push_back(s);
    tr.norm.push_back(t.number(i, "norm"));
    tr.energy.push_back(t.number(i, "energy"));
  }
  return tr;
}

inline Classification classification_from_string(const std::string& cls) {
  if (cls == "supercritical") return Classification::supercritical;
  if (cls == "subcritical") return Classification::subcritical;
  if (cls == "none") return Classification::none;
  throw IoError("unknown classification '" + cls + "'");
}

inline CsvTable bif_table(const std::vector<BifurcationTableRow>& rows, const std::string& digest) {
  CsvTable t;
  t.digest = digest;
  t.columns = {"N", "sigma", "eta_bif", "Omega_bif", "classification"};
  for (const auto& r : rows) {
    auto row = numbers({static_cast<double>(r.n), r.sigma, r.eta_bif, r.omega_bif});
    row.push_back(to_string(r.classification));
    t.add_row(std::move(row));
  }
  return t;
}

inline std::vector<BifurcationTableRow> read_bif_table(const CsvTable& t) {
  std::vector<BifurcationTableRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out.push_back(BifurcationTableRow{static_cast<int>(t.number(i, "N")), t.number(i, "sigma"),
                                      t.number(i, "eta_bif"), t.number(i, "Omega_bif"),
                                      classification_from_string(t.text(i, "classification"))});
  return out;
}

inline json event_to_json(const BifurcationEvent& e) {
  return json{{"kind", to_string(e.kind)},
              {"eta_c", e.eta_c},
              {"omega_c", e.omega_c},
              {"classification", to_string(e.classification)},
              {"family_label", e.family_label},
              {"min_singular_value", e.min_singular_value}};
}

inline BifurcationEvent event_from_json(const json& j) {
  BifurcationEvent e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fold") {
    e.kind = EventKind::fold;
  } else if (kind == "pitchfork") {
    e.kind = EventKind::pitchfork;
  } else {
    throw IoError("unknown event kind '" + kind + "'");
  }
  e.eta_c = j.at("eta_c").get<double>();
  e.omega_c = j.value("omega_c", 0.0);
  e.classification = classification_from_string(j.at("classification").get<std::string>());
  e.family_label = j.value("family_label", "");
  e.min_singular_value = j.value("min_singular_value", 0.0);
  return e;
}

/// {"config_digest": ..., "events": [ ... ]}
inline void write_events(const std::filesystem::path& path, const std::vector<BifurcationEvent>& events,
                         const std::string& digest) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  write_text(path, json{{"config_digest", digest}, {"events", arr}}.dump(2) + "\n");
}

inline std::vector<BifurcationEvent> read_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError("malformed events file " + path.string() + ": " + e.what());
  }
  std::vector<BifurcationEvent> out;
  for (const auto& j : doc.at("events")) out.push_back(event_from_json(j));
  return out;
}

}  // namespace nmode
