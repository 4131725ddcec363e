#pragma once

// Subcommand implementations. Each writes its files under `out` and returns
// a short summary for stdout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmode/census.hpp"
#include "nmode/config.hpp"
#include "nmode/continuation.hpp"
#include "nmode/dynamics.hpp"
#include "nmode/errors.hpp"
#include "nmode/io.hpp"
#include "nmode/lattice_model.hpp"
#include "nmode/linear1d.hpp"
#include "nmode/parallel.hpp"
#include "nmode/stationary.hpp"

namespace nmode {

namespace fs = std::filesystem;

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_parameter = 2, exit_numeric = 3, exit_io = 4 };

namespace detail {

inline std::vector<double> number_list(const json& j, const char* key) {
  std::vector<double> out;
  for (const auto& v : j.at(key)) out.push_back(v.get<double>());
  return out;
}

inline std::vector<int> integer_list(const json& j, const char* key) {
  std::vector<int> out;
  for (const auto& v : j.at(key)) {
    const double d = v.get<double>();
    if (d != std::floor(d)) throw ParameterError(std::string("config: ") + key + " must hold integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

}  // namespace detail

inline std::string cmd_spectrum(const RunConfig& cfg, const fs::path& out) {
  const ModelParams p = cfg.model();
  const ModeBasis closed = closed_form_spectrum(p);
  const ModeBasis numeric = diagonalize_symmetric(build_line_coupling(p));
  const double dev = (closed.mu - numeric.mu).cwiseAbs().maxCoeff();
  const CsvTable t = spectrum_table(p, closed, numeric, cfg.digest());
  ensure_directory(out);
  write_csv(out / "spectrum.csv", t);
  std::ostringstream msg;
  msg << "spectrum: N=" << p.n << ", max |closed - numeric| = " << dev;
  return msg.str();
}

inline std::string cmd_stationary_sweep(const RunConfig& cfg, const fs::path& out) {
  const ModelParams p = cfg.model();
  const json& b = cfg.block("sweep");
  const int points = b.at("q_points").get<int>();
  const double margin = b.at("q_margin").get<double>();
  if (points < 3) throw ParameterError("sweep.q_points must be >= 3");
  if (!(margin >= 1e-6 && margin < 0.1)) throw ParameterError("sweep.q_margin must lie in [1e-6, 0.1)");

  CsvTable t;
  t.digest = cfg.digest();
  t.columns = {"family", "q", "eta", "Omega"};
  std::vector<BifurcationEvent> events;
  const std::pair<double, double> pieces[2] = {{margin, 0.25 - margin}, {0.25 + margin, 0.5 - margin}};
  for (const SignPattern fam : {SignPattern{2, 2, 2}, SignPattern{2, 1, 2}, SignPattern{1, 2, 2}, SignPattern{1, 1, 2}}) {
    for (const auto& [lo, hi] : pieces) {
      std::vector<double> grid(static_cast<std::size_t>(points));
      for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
      const Branch br = sweep_symmetric(grid, p.sigma, fam);
      for (std::size_t i = 0; i < br.points.size(); ++i)
        t.add_row({family_label(fam), format_number(grid[i]), format_number(br.points[i].eta),
                   format_number(br.points[i].omega)});
      for (auto& e : detect_folds(br)) events.push_back(e);
    }
  }
  ensure_directory(out);
  write_csv(out / "sweep.csv", t);
  write_events(out / "events.json", events, cfg.digest());
  std::ostringstream msg;
  msg << "stationary-sweep: " << t.rows.size() << " points, " << events.size() << " folds";
  for (const auto& e : events) msg << "\n  fold " << e.family_label << " at eta=" << format_number(e.eta_c);
  return msg.str();
}

inline std::string cmd_branches(const RunConfig& cfg, const fs::path& out) {
  const ModelParams p = cfg.model();
  const json& b = cfg.block("branches");
  const EtaRange range{b.at("eta_min").get<double>(), b.at("eta_max").get<double>()};
  if (!(range.min < 0.0 && 0.0 < range.max)) throw ParameterError("branches: eta range must contain 0");
  StepControl sc;
  sc.max_eta_step = b.at("max_eta_step").get<double>();
  sc.max_points = b.at("max_points").get<int>();
  if (!(sc.max_eta_step > 0.0) || sc.max_points < 3) throw ParameterError("branches: bad step settings");
  const bool asymmetric = b.at("asymmetric").get<bool>();

  std::vector<Branch> branches(static_cast<std::size_t>(p.n));
  parallel_for(branches.size(), cfg.threads(), [&](std::size_t i) {
    const int j = static_cast<int>(i) + 1;
    StepControl c = sc;
    c.enforce_mirror_symmetry = true;
    Branch br = continue_both_ways(linear_mode(p.n, j, p.sigma), range, c, "sym_j" + std::to_string(j));
    br.events = detect_folds(br);
    for (auto& e : detect_pitchfork_and_classify(br, p.sigma)) br.events.push_back(e);
    branches[i] = std::move(br);
  });

  std::vector<std::pair<std::string, AmplitudeSolution>> seeds;
  if (asymmetric) {
    for (const auto& br : branches)
      for (std::size_t k = 0; k < br.events.size(); ++k) {
        const auto& e = br.events[k];
        if (e.kind == EventKind::pitchfork && e.classification != Classification::none)
          seeds.emplace_back(br.family_label + "_asym" + std::to_string(k + 1), e.emanating_branch_seed);
      }
  }
  std::vector<Branch> asym(seeds.size());
  parallel_for(seeds.size(), cfg.threads(), [&](std::size_t i) {
    Branch br = continue_both_ways(seeds[i].second, range, sc, seeds[i].first);
    if (br.points.size() >= 3) br.events = detect_folds(br);
    asym[i] = std::move(br);
  });
  branches.insert(branches.end(), asym.begin(), asym.end());

  ensure_directory(out);
  std::vector<BifurcationEvent> events;
  std::ostringstream msg;
  msg << "branches: " << branches.size() << " branches";
  for (const auto& br : branches) {
    write_csv(out / ("branch_" + br.family_label + ".csv"), branch_table(br, cfg.digest()));
    events.insert(events.end(), br.events.begin(), br.events.end());
    if (!br.truncation_reason.empty()) msg << "\n  " << br.family_label << " truncated: " << br.truncation_reason;
  }
  write_events(out / "events.json", events, cfg.digest());
  for (const auto& e : events)
    msg << "\n  " << to_string(e.kind) << " on " << e.family_label << " at eta=" << format_number(e.eta_c)
        << " (" << to_string(e.classification) << ")";
  return msg.str();
}

inline std::string cmd_census(const RunConfig& cfg, const fs::path& out) {
  const ModelParams p = cfg.model();
  const json& b = cfg.block("census");
  SeedStrategy st;
  st.filter = sign_filter_from_string(b.at("sign_filter").get<std::string>());
  st.random_starts = b.at("random_starts").get<int>();
  st.dedup_tolerance = b.at("dedup_tolerance").get<double>();
  st.seed = cfg.seed();
  st.threads = cfg.threads();
  const Census c = enumerate_solutions(p.eta, p.sigma, p.n, st);
  ensure_directory(out);
  write_csv(out / "census.csv", solutions_table(c.solutions, p.n, cfg.digest()));
  std::ostringstream msg;
  msg << "census: " << c.solutions.size() << " solutions at eta=" << format_number(p.eta);
  for (const auto& w : c.warnings) msg << "\n  warning: " << w;
  return msg.str();
}

inline std::string cmd_bif_table(const RunConfig& cfg, const fs::path& out) {
  const json& b = cfg.block("bif_table");
  const std::vector<int> ns = detail::integer_list(b, "N_list");
  const std::vector<double> sigmas = detail::number_list(b, "sigma_list");
  if (ns.empty() || sigmas.empty()) throw ParameterError("bif_table: N_list and sigma_list must be non-empty");
  for (int n : ns)
    if (n < 2) throw ParameterError("bif_table: every N must be >= 2");
  std::vector<BifurcationTableRow> rows(ns.size() * sigmas.size());
  parallel_for(rows.size(), cfg.threads(), [&](std::size_t i) {
    rows[i] = ground_state_bifurcation(ns[i % ns.size()], sigmas[i / ns.size()]);
  });
  std::ostringstream msg;
  msg << "bif-table:";
  for (const auto& r : rows)
    msg << "\n  N=" << r.n << " sigma=" << format_number(r.sigma) << " eta_bif=" << format_number(r.eta_bif)
        << " " << to_string(r.classification);
  ensure_directory(out);
  write_csv(out / "bif_table.csv", bif_table(rows, cfg.digest()));
  return msg.str();
}

inline ModeState evolve_initial_state(const RunConfig& cfg, const ModelParams& p) {
  const json& b = cfg.block("evolve");
  const std::string kind = b.at("initial").get<std::string>();
  const int index = b.at("index").get<int>();
  ModeState s;
  s.d = Eigen::VectorXcd::Zero(p.n);
  if (kind == "mode") {
    if (index < 1 || index > p.n) throw ParameterError("evolve.index must lie in 1..N");
    s.d = closed_form_spectrum(p).a.row(index - 1).transpose().cast<std::complex<double>>();
  } else if (kind == "site") {
    if (index < 1 || index > p.n) throw ParameterError("evolve.index must lie in 1..N");
    s.d(index - 1) = 1.0;
  } else if (kind == "random") {
    std::mt19937_64 rng(cfg.seed());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < p.n; ++k) s.d(k) = {gauss(rng), gauss(rng)};
    s.d.normalize();
  } else if (kind == "explicit") {
    const std::vector<double> re = detail::number_list(b, "re");
    const std::vector<double> im = detail::number_list(b, "im");
    if (static_cast<int>(re.size()) != p.n || (!im.empty() && static_cast<int>(im.size()) != p.n))
      throw ParameterError("evolve.re/im must have N entries");
    for (int k = 0; k < p.n; ++k) s.d(k) = {re[static_cast<std::size_t>(k)], im.empty() ? 0.0 : im[static_cast<std::size_t>(k)]};
    if (std::abs(s.d.squaredNorm() - 1.0) > 1e-6) throw ParameterError("evolve: explicit state must be normalized");
  } else {
    throw ParameterError("evolve.initial must be mode, site, random or explicit");
  }
  return s;
}

inline std::string cmd_evolve(const RunConfig& cfg, const fs::path& out) {
  const ModelParams p = cfg.model();
  const json& b = cfg.block("evolve");
  IntegratorOptions opt;
  opt.order = b.at("order").get<int>();
  opt.sample_every = b.at("sample_every").get<int>();
  const double dt_cfg = b.at("dt").get<double>();
  const double dt = dt_cfg > 0.0 ? dt_cfg : default_time_step(p);
  const double t_end = b.at("t_end").get<double>();
  const ModeState init = evolve_initial_state(cfg, p);
  const Trajectory tr = integrate(init, t_end, dt, p, uniform_nonlinearity(p), opt);

  ensure_directory(out);
  write_csv(out / "trajectory.csv", trajectory_table(tr, cfg.digest()));
  std::ostringstream msg;
  msg << "evolve: " << tr.samples.size() << " samples, norm drift " << tr.report.max_norm_drift
      << ", energy drift " << tr.report.max_energy_drift;
  return msg.str();
}

inline std::string cmd_linear1d(const RunConfig& cfg, const fs::path& out) {
  const json& b = cfg.block("linear1d");
  Well1D w{b.at("V0").get<double>(), b.at("r").get<double>(), b.at("ell").get<double>()};
  w.validate();
  const double hbar = b.at("hbar").get<double>();
  const int n_points = b.at("n_points").get<int>();
  const std::vector<int> ns = detail::integer_list(b, "N_list");
  std::vector<double> ells = detail::number_list(b, "ell_list");
  for (int n : ns)
    if (n < 2) throw ParameterError("linear1d: every N must be >= 2");
  const double base_ell = w.spacing;

  CsvTable summary;
  summary.digest = cfg.digest();
  summary.columns = {"N", "ell", "hbar", "lambda_D", "lambda_D_richardson", "lambda_D_fit", "beta_fit",
                     "beta_formula_raw", "beta_formula", "fit_residual", "cluster_width", "gap"};
  std::ostringstream msg;
  msg << "linear1d:";
  ensure_directory(out);
  if (std::find(ells.begin(), ells.end(), base_ell) == ells.end()) ells.insert(ells.begin(), base_ell);
  for (double ell : ells) {
    w.spacing = ell;
    w.validate();
    const GroundState1D gs = dirichlet_ground_state(w, hbar, ell + 3.0 * w.radius, n_points);
    const HoppingEstimate hop = hopping_beta_formula(gs, ell, hbar);
    for (const auto& warn : gs.warnings) msg << "\n  warning (ell=" << format_number(ell) << "): " << warn;
    for (int n : ns) {
      const NWellSpectrum sp = nwell_spectrum_direct(w, n, hbar, n_points);
      const CosineFit fit = compare_lemma2(sp.eigenvalues, n);
      for (const auto& warn : fit.warnings) msg << "\n  warning (N=" << n << "): " << warn;
      summary.add_row(numbers({static_cast<double>(n), ell, hbar, gs.lambda_d, gs.richardson, fit.lambda_d_fit,
                               fit.beta_fit, hop.raw, hop.beta, fit.residual, fit.cluster_width, fit.gap}));
      msg << "\n  N=" << n << " ell=" << format_number(ell) << " residual=" << format_number(fit.residual)
          << " beta_fit=" << format_number(fit.beta_fit) << " beta_formula=" << format_number(hop.beta);
      if (ell != base_ell) continue;
      CsvTable ef;
      ef.digest = cfg.digest();
      ef.columns = {"x", "v"};
      for (int j = 1; j <= n; ++j) ef.columns.push_back("psi_" + std::to_string(j));
      for (Eigen::Index i = 0; i < sp.x.size(); ++i) {
        auto row = numbers({sp.x(i), nwell_potential(w, n, sp.x(i))});
        for (int j = 0; j < n; ++j) row.push_back(format_number(sp.eigenvectors(i, j)));
        ef.add_row(std::move(row));
      }
      write_csv(out / ("eigenfunctions_N" + std::to_string(n) + ".csv"), ef);
      const Eigen::MatrixXd proj = well_projection_matrix(sp, gs, w);
      CsvTable pt;
      pt.digest = cfg.digest();
      pt.columns = {"j"};
      for (int k = 1; k <= n; ++k) pt.columns.push_back("c_" + std::to_string(k));
      for (int j = 0; j < n; ++j) {
        std::vector<std::string> row{std::to_string(j + 1)};
        for (int k = 0; k < n; ++k) row.push_back(format_number(proj(j, k)));
        pt.add_row(std::move(row));
      }
      write_csv(out / ("projection_N" + std::to_string(n) + ".csv"), pt);
    }
  }
  write_csv(out / "linear1d_summary.csv", summary);
  return msg.str();
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"spectrum", "stationary-sweep", "branches", "census",
                                              "bif-table", "evolve", "linear1d"};
  return names;
}

/// Runs one subcommand and maps failures to exit codes.
inline int run_command(const std::string& name, const RunConfig& cfg, const fs::path& out,
                       std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    std::string summary;
    if (name == "spectrum") {
      summary = cmd_spectrum(cfg, out);
    } else if (name == "stationary-sweep") {
      summary = cmd_stationary_sweep(cfg, out);
    } else if (name == "branches") {
      summary = cmd_branches(cfg, out);
    } else if (name == "census") {
      summary = cmd_census(cfg, out);
    } else if (name == "bif-table") {
      summary = cmd_bif_table(cfg, out);
    } else if (name == "evolve") {
      summary = cmd_evolve(cfg, out);
    } else if (name == "linear1d") {
      summary = cmd_linear1d(cfg, out);
    } else {
      err << "unknown command '" << name << "'\n";
      return exit_usage;
    }
    log << summary << '\n';
    return exit_ok;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return exit_parameter;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return exit_numeric;
  } catch (const json::exception& e) {
    err << "parameter error: " << e.what() << '\n';
    return exit_parameter;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
}

}  // namespace nmode
