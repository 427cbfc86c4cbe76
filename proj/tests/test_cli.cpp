#include <hbcheb/cli.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

using namespace hbcheb;
namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in.good()) << p;
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

fs::path spit(const std::string& name, const std::string& content) {
  const fs::path p = fs::path(::testing::TempDir()) / name;
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t c = 0;
    while (true) {
      const std::size_t comma = line.find(',', c);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(c));
        break;
      }
      cells.push_back(line.substr(c, comma - c));
      c = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

nlohmann::json jload(const fs::path& p) {
  return nlohmann::json::parse(slurp(p));
}

constexpr const char* kLinearCfg = R"({
  "kind": "frf",
  "model": {"name": "linear",
            "D": [[0.1, 0.02], [0.02, 0.3]],
            "K": [[2.0, -1.0], [-1.0, 3.0]],
            "f_ex": [0.5, 0.25]},
  "window": {"lo": 0.5, "hi": 1.6, "direction": 1},
  "H": 3,
  "continuation": {"ds0": 0.05, "ds_max": 0.1},
  "stability": {"backend": "cheby"}
})";

TEST(Config, MalformedInputsAreConfigErrors) {
  EXPECT_THROW((void)parse_config("{ nope"), ConfigError);
  EXPECT_THROW((void)parse_config("[1,2]"), ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"frf"})"), ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"dance",
      "model":{"name":"duffing"}})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"frf",
      "model":{"name":"duffing"},
      "window":{"lo":1.0,"hi":1.0}})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"frf",
      "model":{"name":"duffing"},
      "window":{"lo":0.5,"hi":1.0,"direction":0}})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"frf",
      "model":{"name":"duffing"},
      "window":{"lo":0.5,"hi":1.0},"H":0})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"frf",
      "model":{"name":"duffing"},
      "window":{"lo":0.5,"hi":1.0},
      "stability":{"backend":"euler"}})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"urabe-branch",
      "model":{"name":"duffing"},
      "window":{"lo":0.5,"hi":1.0},
      "adaptive":{"criterion":"amplitude"}})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"urabe-point",
      "model":{"name":"duffing"}})"),
               ConfigError);
  EXPECT_THROW((void)parse_config(R"({"kind":"stab-convergence",
      "model":{"name":"duffing"},"point":{"Omega":1.0},
      "sweeps":[{"method":"cheby","resolutions":[0]}]})"),
               ConfigError);
  EXPECT_THROW((void)load_config("/no/such/file.json"), ConfigError);

  RunConfig bad = parse_config(R"({"kind":"frf",
      "model":{"name":"pendulum"},
      "window":{"lo":0.5,"hi":1.0}})");
  EXPECT_THROW((void)make_model(bad), ConfigError);
}

TEST(Config, KindMustFitTheSubcommand) {
  const fs::path cfg = spit("kindfit.json", kLinearCfg);
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "kindfit_out").string();
  EXPECT_EQ(run_cli("urabe", cfg.string(), opts), 2);
  EXPECT_EQ(run_cli("stab-convergence", cfg.string(), opts), 2);
  EXPECT_EQ(run_cli("bench", cfg.string(), opts), 2);
}

TEST(Frf, LinearBranchMatchesTheClosedForm) {
  const fs::path cfg = spit("linear_frf.json", kLinearCfg);
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "linear_out").string();
  ASSERT_EQ(run_cli("frf", cfg.string(), opts), 0);

  Eigen::Matrix2d D;
  D << 0.1, 0.02, 0.02, 0.3;
  Eigen::Matrix2d K;
  K << 2.0, -1.0, -1.0, 3.0;
  const Eigen::Vector2cd f(0.25, 0.125);  // half cosine amplitude

  const std::string text = slurp(fs::path(opts.out_dir) / "branch.csv");
  EXPECT_NE(text.find("# tool: hbcheb 0.1.0"), std::string::npos);
  EXPECT_NE(text.find("# config: "), std::string::npos);

  const auto rows = csv_rows(text);
  ASSERT_GE(rows.size(), 10u);
  EXPECT_EQ(rows[0][0], "Omega");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double Om = std::stod(rows[i][0]);
    const double amp = std::stod(rows[i][2]);
    const Eigen::Matrix2cd S =
        (K - Om * Om * Eigen::Matrix2d::Identity())
            .cast<std::complex<double>>() +
        std::complex<double>(0, Om) * D.cast<std::complex<double>>();
    const Eigen::Vector2cd c1 = S.lu().solve(f);
    EXPECT_NEAR(amp, 2.0 * std::abs(c1(0)), 2e-5 * 2.0 * std::abs(c1(0)));
    EXPECT_EQ(rows[i][4], "1");  // damped linear orbits are stable
    EXPECT_EQ(rows[i][5], "3");
    EXPECT_TRUE(rows[i][6].empty());
    EXPECT_TRUE(rows[i][7].empty());
    EXPECT_TRUE(rows[i][8].empty());
  }

  const nlohmann::json s = jload(fs::path(opts.out_dir) / "summary.json");
  EXPECT_TRUE(s["complete"].get<bool>());
  EXPECT_EQ(s["turning_points"].get<int>(), 0);
  EXPECT_EQ(s["version"].get<std::string>(), kVersion);
}

TEST(Urabe, RerunsAreByteIdentical) {
  const fs::path cfg = spit("rerun.json", R"({
    "kind": "urabe-branch",
    "model": {"name": "duffing"},
    "window": {"lo": 1.2, "hi": 1.4, "direction": -1},
    "H": 9,
    "seed": {"Omega": 1.4},
    "continuation": {"ds0": 0.02, "ds_max": 0.05},
    "adaptive": {"H_max": 21},
    "stability": {"backend": "cheby"}
  })");
  RunOptions a, b;
  a.out_dir = (fs::path(::testing::TempDir()) / "rerun_a").string();
  b.out_dir = (fs::path(::testing::TempDir()) / "rerun_b").string();
  ASSERT_EQ(run_cli("urabe", cfg.string(), a), 0);
  ASSERT_EQ(run_cli("urabe", cfg.string(), b), 0);

  for (const char* name : {"branch.csv", "summary.json", "cert_00000.json"}) {
    const std::string fa = slurp(fs::path(a.out_dir) / name);
    EXPECT_EQ(fa, slurp(fs::path(b.out_dir) / name)) << name;
    EXPECT_FALSE(fa.empty());
  }
  const auto rows = csv_rows(slurp(fs::path(a.out_dir) / "branch.csv"));
  ASSERT_GE(rows.size(), 3u);
  // certified columns are filled on an adaptive run
  EXPECT_FALSE(rows[1][6].empty());
  EXPECT_FALSE(rows[1][7].empty());
  EXPECT_FALSE(rows[1][8].empty());
}

TEST(Urabe, PointRunEmitsCertificateAndOrbit) {
  const fs::path cfg = spit("upoint.json", R"({
    "kind": "urabe-point",
    "model": {"name": "duffing"},
    "point": {"Omega": 1.3},
    "H": 9,
    "adaptive": {"H_max": 21, "criterion": "delta"}
  })");
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "upoint_out").string();
  ASSERT_EQ(run_cli("urabe", cfg.string(), opts), 0);

  const nlohmann::json cert = jload(fs::path(opts.out_dir) / "cert.json");
  EXPECT_TRUE(cert["conclusive"].get<bool>());
  EXPECT_FALSE(cert["flagged"].get<bool>());
  EXPECT_EQ(cert["criterion"].get<std::string>(), "delta");
  EXPECT_EQ(cert["H"].get<int>(), 3);
  EXPECT_GT(cert["delta"].get<double>(), 0.0);
  EXPECT_LE(cert["delta"].get<double>(), 1e-3);
  EXPECT_GT(cert["M"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(cert["Omega"].get<double>(), 1.3);

  const FourierSeries q =
      fourier_from_json(jload(fs::path(opts.out_dir) / "orbit.json"));
  EXPECT_EQ(q.harmonics(), 3);
  EXPECT_EQ(q.dof(), 1);
  EXPECT_DOUBLE_EQ(q.Omega, 1.3);
  const ModelSpec m = duffing();
  EXPECT_NEAR(max_abs_output(q, m.output), 0.28040, 1e-3);
}

TEST(Frf, SeedFailureYieldsPartialOutputAndExitThree) {
  const fs::path cfg = spit("partial.json", R"({
    "kind": "frf",
    "model": {"name": "duffing"},
    "window": {"lo": 1.0, "hi": 1.4, "direction": -1},
    "H": 3,
    "continuation": {"max_iter": 0},
    "stability": {"backend": "none"}
  })");
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "partial_out").string();
  EXPECT_EQ(run_cli("frf", cfg.string(), opts), 3);

  const nlohmann::json s = jload(fs::path(opts.out_dir) / "summary.json");
  EXPECT_FALSE(s["complete"].get<bool>());
  EXPECT_FALSE(s["warning"].get<std::string>().empty());
  EXPECT_EQ(csv_rows(slurp(fs::path(opts.out_dir) / "branch.csv")).size(),
            1u);  // header only
}

TEST(Convergence, BackendsAgainstTheShootingOracle) {
  const fs::path cfg = spit("conv.json", R"({
    "kind": "stab-convergence",
    "model": {"name": "linear",
              "D": [[0.1, 0.02], [0.02, 0.3]],
              "K": [[2.0, -1.0], [-1.0, 3.0]],
              "f_ex": [0.5, 0.25]},
    "point": {"Omega": 0.8},
    "H": 3,
    "sweeps": [{"method": "cheby", "resolutions": [8, 12]},
               {"method": "mexp", "resolutions": [16]},
               {"method": "ntp", "resolutions": [32]}],
    "oracle": {"method": "shooting", "resolution": 16384}
  })");
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "conv_out").string();
  opts.repeat = 1;
  ASSERT_EQ(run_cli("stab-convergence", cfg.string(), opts), 0);

  const auto rows =
      csv_rows(slurp(fs::path(opts.out_dir) / "convergence.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "method");
  // constant-coefficient system: mexp is exact and lands on the oracle's own
  // discretisation error, cheby decays spectrally, ntp carries its O(N^-2)
  EXPECT_LT(std::stod(rows[2][2]), 1e-3);                      // cheby C=12
  EXPECT_LT(std::stod(rows[2][2]), 0.1 * std::stod(rows[1][2]));
  EXPECT_LT(std::stod(rows[3][2]), 1e-5);                      // mexp
  EXPECT_LT(std::stod(rows[4][2]), 5e-2);                      // ntp N=32
  EXPECT_GT(std::stod(rows[4][2]), std::stod(rows[3][2]));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(std::stod(rows[i][3]), 0.0);  // timing column filled
  }
}

TEST(Convergence, OracleContractViolationsMapToExitCodes) {
  // oracle finer than 4x the finest tested resolution: config error
  const fs::path shallow = spit("conv_shallow.json", R"({
    "kind": "stab-convergence",
    "model": {"name": "duffing"},
    "point": {"Omega": 1.3},
    "H": 5,
    "sweeps": [{"method": "cheby", "resolutions": [32]}],
    "oracle": {"method": "shooting", "resolution": 100}
  })");
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "conv_err").string();
  opts.repeat = 1;
  EXPECT_EQ(run_cli("stab-convergence", shallow.string(), opts), 2);

  // near-homoclinic orbit: the time stepper inside shooting stalls
  const fs::path stalling = spit("conv_stall.json", R"({
    "kind": "stab-convergence",
    "model": {"name": "duffing"},
    "seed": {"Omega": 0.35, "H": 31,
             "coef": [{"k": 1, "dof": 0, "re": -0.25435, "im": -1.81330}]},
    "sweeps": [{"method": "cheby", "resolutions": [8]}],
    "oracle": {"method": "shooting", "resolution": 256}
  })");
  EXPECT_EQ(run_cli("stab-convergence", stalling.string(), opts), 4);
}

TEST(Bench, EmitsInformationalTimings) {
  const fs::path cfg = spit("bench.json", R"({
    "kind": "bench",
    "model": {"name": "duffing"},
    "point": {"Omega": 1.3},
    "H": 5,
    "sweeps": [{"method": "cheby", "resolutions": [16]},
               {"method": "ntp", "resolutions": [64]}]
  })");
  RunOptions opts;
  opts.out_dir = (fs::path(::testing::TempDir()) / "bench_out").string();
  opts.repeat = 2;
  ASSERT_EQ(run_cli("bench", cfg.string(), opts), 0);
  const auto rows = csv_rows(slurp(fs::path(opts.out_dir) / "bench.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "section");
}

TEST(Io, FourierSeriesRoundTripsThroughJson) {
  FourierSeries q(2, 4, 0.93);
  q.coef(0, 0) = 0.25;
  q.coef(1, 0) = -0.125;
  q.coef(0, 1) = std::complex<double>(1.0 / 3.0, -0.7);
  q.coef(1, 3) = std::complex<double>(-2.5e-13, 3.25);
  q.coef(0, 4) = std::complex<double>(0.0, 1e-300);

  const nlohmann::json j = fourier_to_json(q);
  const FourierSeries back = fourier_from_json(j);
  EXPECT_EQ(back.harmonics(), 4);
  EXPECT_EQ(back.dof(), 2);
  EXPECT_EQ(back.Omega, q.Omega);
  EXPECT_EQ((back.coef - q.coef).cwiseAbs().maxCoeff(), 0.0);

  nlohmann::json bad = j;
  bad["re"].erase(4);
  EXPECT_THROW((void)fourier_from_json(bad), std::invalid_argument);
  bad = j;
  bad["d"] = 0;
  EXPECT_THROW((void)fourier_from_json(bad), std::invalid_argument);
}

TEST(Io, CsvTableFormatsHeaderRowsAndGaps) {
  CsvTable t({"a", "b", "c"});
  t.begin_row();
  t.push(1.5);
  t.push_empty();
  t.push(7);
  t.begin_row();
  t.push(std::optional<double>{});
  t.push(std::optional<double>{0.25});
  t.push(std::string("x"));
  EXPECT_EQ(t.render("cafe"),
            "# tool: hbcheb 0.1.0\n# config: cafe\na,b,c\n1.5,,7\n,0.25,x\n");

  CsvTable ragged({"a", "b"});
  ragged.begin_row();
  ragged.push(1);
  EXPECT_THROW((void)ragged.render(""), std::logic_error);
}

TEST(Io, NumberFormattingRoundTrips) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(42.0), "42");
  EXPECT_EQ(format_number(-1.0), "-1");
  for (double v : {1.0 / 3.0, 3.14159265358979323846, 6.02214076e23, 1e-300,
                   -2.5e-13, 0.28040}) {
    double back = 0.0;
    std::sscanf(format_number(v).c_str(), "%lf", &back);
    EXPECT_EQ(back, v);
  }
}

TEST(Io, AtomicWriteCreatesParentsAndLeavesNoTemp) {
  const fs::path dir = fs::path(::testing::TempDir()) / "aw" / "nested";
  const fs::path p = dir / "file.txt";
  atomic_write_file(p, "payload");
  EXPECT_EQ(slurp(p), "payload");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
  atomic_write_file(p, "rewritten");
  EXPECT_EQ(slurp(p), "rewritten");
}

TEST(Selftest, AllChecksPass) { EXPECT_EQ(run_selftest(), 0); }

}  // namespace
