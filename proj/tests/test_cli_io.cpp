#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nmode/cli.hpp"

using namespace nmode;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nmode_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run(const std::string& cmd, const RunConfig& cfg, const fs::path& out, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  const int rc = run_command(cmd, cfg, out, log, err);
  if (err_text) *err_text = err.str();
  return rc;
}

RunConfig config(std::initializer_list<const char*> sets) {
  RunConfig c;
  for (const char* s : sets) c.set(s);
  return c;
}

void expect_well_formed_csv(const fs::path& p, const std::string& digest) {
  const std::string body = slurp(p);
  ASSERT_FALSE(body.empty()) << p;
  EXPECT_EQ(body.find('\r'), std::string::npos) << p;
  EXPECT_EQ(body.back(), '\n') << p;
  EXPECT_EQ(body.rfind("# config_digest=" + digest + "\n", 0), 0u) << p;
}

}  // namespace

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(-12.0), "-12");
  EXPECT_EQ(format_number(1.23456789012345e-20), "1.23456789012e-20");
  EXPECT_EQ(parse_number("0.333333333333"), 0.333333333333);
  EXPECT_TRUE(std::isnan(parse_number(format_number(std::nan("")))));
  EXPECT_THROW(parse_number("1.5x"), IoError);
  EXPECT_THROW(parse_number("abc"), IoError);
}

TEST(Config, DefaultsAndOverrides) {
  RunConfig c;
  EXPECT_EQ(c.model().n, 4);
  EXPECT_EQ(c.seed(), default_census_seed);
  c.set("model.N=8");
  c.set("census.sign_filter=all");
  c.set("model.sigma=2");
  EXPECT_EQ(c.model().n, 8);
  EXPECT_EQ(c.model().sigma, 2.0);
  EXPECT_EQ(c.block("census").at("sign_filter"), "all");
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  RunConfig c;
  EXPECT_THROW(c.set("model.bogus=1"), ParameterError);
  EXPECT_THROW(c.set("nosuch=1"), ParameterError);
  EXPECT_THROW(c.set("model.N=2.5"), ParameterError);
  EXPECT_THROW(c.set("model.sigma=\"x\""), ParameterError);
  EXPECT_THROW(c.set("branches.asymmetric=1"), ParameterError);
  EXPECT_THROW(c.set("model"), ParameterError);
  EXPECT_THROW(RunConfig::from_json(json{{"model", {{"lamda_D", 0.0}}}}), ParameterError);
}

TEST(Config, FileRoundTrip) {
  const fs::path dir = scratch("cfg");
  write_text(dir / "run.json", R"({"model": {"N": 6, "eta": -3}, "seed": 7})");
  const RunConfig c = RunConfig::from_file(dir / "run.json");
  EXPECT_EQ(c.model().n, 6);
  EXPECT_EQ(c.model().eta, -3.0);
  EXPECT_EQ(c.seed(), 7u);
  write_text(dir / "bad.json", "{ not json");
  EXPECT_THROW(RunConfig::from_file(dir / "bad.json"), ParameterError);
  EXPECT_THROW(RunConfig::from_file(dir / "missing.json"), IoError);
}

TEST(Config, DigestTracksContentOnly) {
  RunConfig a, b;
  EXPECT_EQ(a.digest(), b.digest());
  b.set("threads=4");
  b.doc["output_path"] = "elsewhere";
  EXPECT_EQ(a.digest(), b.digest());
  b.set("model.eta=-11");
  EXPECT_NE(a.digest(), b.digest());
  // Integer and float spellings of the same value agree.
  RunConfig c = RunConfig::from_json(json{{"model", {{"eta", -12}}}});
  EXPECT_EQ(a.digest(), c.digest());
}

TEST(RoundTrip, Solutions) {
  const fs::path dir = scratch("sol");
  SeedStrategy st;
  const Census c = enumerate_solutions(-12.0, 1.0, 4, st);
  write_csv(dir / "s.csv", solutions_table(c.solutions, 4, "abc"));
  const CsvTable t = read_csv(dir / "s.csv");
  EXPECT_EQ(t.digest, "abc");
  const auto back = read_solutions(t);
  ASSERT_EQ(back.size(), c.solutions.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_NEAR(back[i].omega, c.solutions[i].omega, 1e-11 * std::abs(c.solutions[i].omega));
    EXPECT_LE((back[i].a - c.solutions[i].a).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(back[i].eta, -12.0);
  }
}

TEST(RoundTrip, Branch) {
  const fs::path dir = scratch("branch");
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  const Branch b = continue_branch(linear_mode(4, 1), EtaRange{-3.0, 0.0}, sc, "g");
  write_csv(dir / "b.csv", branch_table(b, "d"));
  const Branch back = read_branch(read_csv(dir / "b.csv"), 1.0, "g");
  ASSERT_EQ(back.points.size(), b.points.size());
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    EXPECT_NEAR(back.points[i].eta, b.points[i].eta, 1e-11);
    EXPECT_NEAR(back.points[i].arclength, b.points[i].arclength, 1e-11 * (1.0 + b.points[i].arclength));
    EXPECT_LE((back.points[i].a - b.points[i].a).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(RoundTrip, SpectrumTrajectoryTableEvents) {
  const fs::path dir = scratch("misc");
  ModelParams p;
  p.n = 3;
  const ModeBasis closed = closed_form_spectrum(p);
  write_csv(dir / "sp.csv", spectrum_table(p, closed, closed, "x"));
  const ModeBasis sb = read_spectrum(read_csv(dir / "sp.csv"));
  EXPECT_LE((sb.a - closed.a).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LE((sb.mu - closed.mu).cwiseAbs().maxCoeff(), 1e-11 * closed.mu.cwiseAbs().maxCoeff());

  ModeState init{Eigen::Vector3cd(std::complex<double>(0.6, 0.0), std::complex<double>(0.0, 0.8), 0.0), 0.0};
  const Trajectory tr = integrate(init, 1.0, 0.01, p, Eigen::Vector3d::Constant(-2.0), {6, 10});
  write_csv(dir / "tr.csv", trajectory_table(tr, "x"));
  const Trajectory tb = read_trajectory(read_csv(dir / "tr.csv"));
  ASSERT_EQ(tb.samples.size(), tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    EXPECT_NEAR(tb.samples[i].t, tr.samples[i].t, 1e-12);
    EXPECT_LE((tb.samples[i].d - tr.samples[i].d).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_NEAR(tb.energy[i], tr.energy[i], 1e-11);
  }

  const std::vector<BifurcationTableRow> rows{{2, 1.0, -2.0, -2.0, Classification::supercritical},
                                              {4, 4.0, -11.674, -9.1, Classification::subcritical}};
  write_csv(dir / "bt.csv", bif_table(rows, "x"));
  const auto rb = read_bif_table(read_csv(dir / "bt.csv"));
  ASSERT_EQ(rb.size(), 2u);
  EXPECT_EQ(rb[1].n, 4);
  EXPECT_EQ(rb[1].eta_bif, -11.674);
  EXPECT_EQ(rb[1].classification, Classification::subcritical);

  BifurcationEvent e;
  e.kind = EventKind::pitchfork;
  e.eta_c = -2.2929;
  e.classification = Classification::supercritical;
  e.family_label = "sym_j1";
  write_events(dir / "ev.json", {e}, "x");
  const auto eb = read_events(dir / "ev.json");
  ASSERT_EQ(eb.size(), 1u);
  EXPECT_EQ(eb[0].kind, EventKind::pitchfork);
  EXPECT_EQ(eb[0].eta_c, -2.2929);
  EXPECT_EQ(eb[0].classification, Classification::supercritical);
  EXPECT_EQ(eb[0].family_label, "sym_j1");
  const json doc = json::parse(slurp(dir / "ev.json"));
  EXPECT_EQ(doc.at("config_digest"), "x");
  EXPECT_TRUE(doc.at("events").is_array());
}

TEST(Csv, ReaderRejectsMalformedInput) {
  const fs::path dir = scratch("bad");
  write_text(dir / "a.csv", "# config_digest=0\n");
  EXPECT_THROW(read_csv(dir / "a.csv"), IoError);
  write_text(dir / "b.csv", "x,y\n1\n");
  EXPECT_THROW(read_csv(dir / "b.csv"), IoError);
  EXPECT_THROW(read_csv(dir / "none.csv"), IoError);
}

TEST(Commands, EveryCommandWritesDigestedFiles) {
  const RunConfig cfg = config({"evolve.t_end=5", "linear1d.N_list=[2]", "linear1d.ell_list=[2.5, 3.0]",
                                "bif_table.N_list=[2, 4]", "branches.eta_min=-4", "branches.eta_max=4"});
  const std::string digest = cfg.digest();
  for (const std::string& cmd : command_names()) {
    const fs::path dir = scratch("cmd_" + cmd);
    std::string err;
    ASSERT_EQ(run(cmd, cfg, dir, &err), exit_ok) << cmd << ": " << err;
    int csvs = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv") {
        expect_well_formed_csv(entry.path(), digest);
        ++csvs;
      } else if (entry.path().extension() == ".json") {
        EXPECT_EQ(json::parse(slurp(entry.path())).at("config_digest"), digest);
      }
    }
    EXPECT_GT(csvs, 0) << cmd;
  }
}

TEST(Commands, OutputIsDeterministic) {
  RunConfig cfg = config({"census.random_starts=40", "evolve.initial=\"random\"", "evolve.t_end=5",
                          "branches.eta_min=-4", "branches.eta_max=4"});
  for (const std::string cmd : {"census", "evolve", "branches"}) {
    const fs::path a = scratch("det_a_" + cmd), b = scratch("det_b_" + cmd);
    RunConfig one = cfg;
    one.set("threads=1");
    RunConfig two = cfg;
    two.set("threads=3");
    ASSERT_EQ(run(cmd, one, a), exit_ok);
    ASSERT_EQ(run(cmd, two, b), exit_ok);
    for (const auto& entry : fs::directory_iterator(a))
      EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
}

TEST(Commands, CensusMatchesTableSize) {
  const fs::path dir = scratch("census15");
  ASSERT_EQ(run("census", RunConfig{}, dir), exit_ok);
  EXPECT_EQ(read_solutions(read_csv(dir / "census.csv")).size(), 15u);
}

TEST(Commands, SpectrumOfTwoWells) {
  const fs::path dir = scratch("spec2");
  ASSERT_EQ(run("spectrum", config({"model.N=2"}), dir), exit_ok);
  const ModeBasis b = read_spectrum(read_csv(dir / "spectrum.csv"));
  const double r = std::sqrt(0.5);
  EXPECT_NEAR(b.a(0, 0), r, 1e-12);
  EXPECT_NEAR(b.a(1, 1), -r, 1e-12);
}

TEST(Commands, LinearEvolutionKeepsModulus) {
  const fs::path dir = scratch("evolve_lin");
  ASSERT_EQ(run("evolve", config({"model.eta=0", "evolve.index=2", "evolve.t_end=20"}), dir), exit_ok);
  const Trajectory tr = read_trajectory(read_csv(dir / "trajectory.csv"));
  ASSERT_GT(tr.samples.size(), 2u);
  for (const auto& s : tr.samples)
    EXPECT_LE((s.d.cwiseAbs() - tr.samples.front().d.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Commands, ExitCodes) {
  std::string err;
  EXPECT_EQ(run("spectrum", config({"model.N=1"}), scratch("x1"), &err), exit_parameter);
  EXPECT_NE(err.find("parameter error"), std::string::npos);
  EXPECT_EQ(run("evolve", config({"model.beta=0"}), scratch("x2")), exit_parameter);
  EXPECT_EQ(run("evolve", config({"evolve.order=3"}), scratch("x3")), exit_parameter);
  EXPECT_EQ(run("bif-table", config({"bif_table.N_list=[3]"}), scratch("x4"), &err), exit_numeric);
  EXPECT_NE(err.find("numeric error"), std::string::npos);
  EXPECT_EQ(run("spectrum", RunConfig{}, "/proc/nmode_cannot_write"), exit_io);
  EXPECT_EQ(run("plot", RunConfig{}, scratch("x5")), exit_usage);
}
