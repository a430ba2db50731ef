// Configuration parsing, exit codes and the command outputs.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <sys/wait.h>

#include "test_support.hpp"
#include "windcast/cli.hpp"
#include "windcast/config.hpp"
#include "windcast/error.hpp"

#include <spdlog/fmt/fmt.h>

using namespace windcast;
using windcast::testing::read_file;
using windcast::testing::TempDir;

namespace {

std::string small_simulate_section(int days, int seed) {
  return "[simulate]\ndays = " + std::to_string(days) + "\nseed = " + std::to_string(seed) + "\n";
}

std::string backtest_section() {
  return "[backtest]\ntraining_steps = 288\nhorizon = 36\nmle_steps = 72\nmax_evaluations = 40\n"
         "max_rolls = 2\nchain_length = 2\n";
}

int run(const std::vector<std::string>& args) { return cli::run(args); }

int run_binary(const std::string& args) {
  const std::string cmd = std::string(WINDCAST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// =============================================================================
// Configuration
// =============================================================================

TEST(Config, ParsesSectionsAndResolvesPaths) {
  const auto c = config::parse(
      "[data]\nobservations = obs.csv\nnwp = /abs/nwp.csv\nsites = s.csv\n"
      "[backtest]\ntraining_steps = 300\nhorizon = 24\nstride = 12\nmodels = stgp, nwp\n"
      "[run]\nseed = 9\njobs = 2\n[map]\nn_lat = 3\nn_lon = 4\n",
      "/base");
  EXPECT_EQ(c.data.observations, "/base/obs.csv");
  EXPECT_EQ(c.data.nwp, "/abs/nwp.csv");
  EXPECT_EQ(c.backtest.model.training_steps, 300u);
  EXPECT_EQ(c.backtest.model.horizon, 24u);
  EXPECT_EQ(c.backtest.stride, 12u);
  EXPECT_EQ(c.backtest.models, (std::vector<std::string>{"stgp", "nwp"}));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.jobs, std::optional<std::size_t>(2));
  EXPECT_TRUE(c.has_mesh);
  EXPECT_EQ(c.mesh.n_lat, 3u);
  EXPECT_EQ(c.mesh.n_lon, 4u);
}

TEST(Config, UnknownKeysAndSectionsRejected) {
  for (const std::string text : {"[backtest]\nstrde = 3\n", "[extras]\na = 1\n", "[backtest]\nhorizon = -4\n",
                                 "[backtest]\nthreshold = abc\n"}) {
    try {
      config::parse(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config) << text;
    }
  }
}

TEST(Config, SimulateSeedDerivedFromRunSeed) {
  const auto a = config::parse("[run]\nseed = 1\n");
  const auto b = config::parse("[run]\nseed = 2\n");
  const auto c = config::parse("[run]\nseed = 2\n[simulate]\nseed = 77\n");
  EXPECT_NE(a.simulate.seed, b.simulate.seed);
  EXPECT_EQ(c.simulate.seed, 77u);
  EXPECT_TRUE(c.simulate_seed_pinned);
}

// =============================================================================
// Exit codes
// =============================================================================

TEST(Cli, StrideBeyondHorizonIsConfigError) {
  TempDir dir("cli");
  const auto cfg = dir.write("run.ini", "[data]\nobservations = o.csv\nnwp = n.csv\nsites = s.csv\n"
                                        "[backtest]\nhorizon = 36\nstride = 40\n");
  ::testing::internal::CaptureStderr();
  ::testing::internal::CaptureStdout();
  const int code = run({"--config", cfg, "backtest"});
  const std::string log = ::testing::internal::GetCapturedStdout() + ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, cli::kExitConfig);
  EXPECT_NE(log.find("stride"), std::string::npos);
  EXPECT_NE(log.find("H_T"), std::string::npos);
}

TEST(Cli, MissingNwpFileIsDataError) {
  TempDir dir("cli");
  ASSERT_EQ(run({"--config", dir.write("sim.ini", small_simulate_section(3, 5)), "--out", dir.path().string(), "-q",
                 "simulate"}),
            0);
  std::filesystem::remove(dir.file("nwp.csv"));
  const auto cfg = dir.write("run.ini", "[data]\nobservations = observations.csv\nnwp = nwp.csv\nsites = sites.csv\n" +
                                            backtest_section());
  EXPECT_EQ(run({"--config", cfg, "-q", "backtest"}), cli::kExitData);
  EXPECT_EQ(run_binary("--config " + cfg + " -q backtest"), cli::kExitData);
}

TEST(Cli, OversizedSimulationIsNumericalError) {
  TempDir dir("cli");
  const auto cfg = dir.write("sim.ini", small_simulate_section(3, 5) + "dense_limit = 100\n");
  EXPECT_EQ(run({"--config", cfg, "--out", dir.path().string(), "-q", "simulate"}), cli::kExitNumerical);
  EXPECT_EQ(run_binary("--config " + cfg + " --out " + dir.path().string() + " -q simulate"), cli::kExitNumerical);
}

TEST(Cli, MissingConfigFlagIsConfigError) {
  EXPECT_EQ(run_binary("simulate"), cli::kExitConfig);
  EXPECT_EQ(run({"backtest"}), cli::kExitConfig);
}

// =============================================================================
// simulate
// =============================================================================

TEST(Simulate, FixedSeedIsByteIdentical) {
  TempDir a("sim"), b("sim");
  const auto cfg = a.write("sim.ini", small_simulate_section(2, 12));
  ASSERT_EQ(run({"--config", cfg, "--out", a.file("o"), "-q", "simulate"}), 0);
  ASSERT_EQ(run({"--config", cfg, "--out", b.file("o"), "-q", "simulate"}), 0);
  for (const char* f : {"observations.csv", "nwp.csv", "sites.csv"}) {
    const auto x = read_file(a.file(std::string("o/") + f));
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, read_file(b.file(std::string("o/") + f))) << f;
  }
  const auto other = a.write("sim2.ini", small_simulate_section(2, 13));
  ASSERT_EQ(run({"--config", other, "--out", b.file("p"), "-q", "simulate"}), 0);
  EXPECT_NE(read_file(a.file("o/observations.csv")), read_file(b.file("p/observations.csv")));
}

TEST(Simulate, ZeroBiasReproducesSmoothedTruth) {
  auto cfg = windcast::testing::short_simulation(2, 3);
  cfg.bias = synthetic::NwpBias{};
  const auto data = synthetic::simulate_dataset(cfg);
  for (std::size_t s = 0; s < data.truth.size(); ++s) {
    EXPECT_EQ(data.nwp_fine[s], data.smoothed_truth[s]);
    const auto& speed = data.nwp[s].variables.at("WIND_SPEED").values;
    for (std::size_t k = 0; k < speed.size(); ++k) EXPECT_EQ(speed[k], data.smoothed_truth[s][6 * k]);
  }
  // The written file carries the same values.
  TempDir dir("sim");
  synthetic::write_dataset(data, dir.path().string());
  const auto nwp = load_nwp(dir.file("nwp.csv"));
  for (const auto& n : nwp) {
    if (n.site.id != "S1") continue;
    const auto& v = n.variables.at("WIND_SPEED").values;
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_EQ(v[k], data.smoothed_truth[0][6 * k]);
  }
}

TEST(Simulate, ShiftMovesCrossCorrelationPeak) {
  auto cfg = windcast::testing::short_simulation(4, 8);
  cfg.bias = synthetic::NwpBias{};
  cfg.bias.shift_steps = 3;
  const auto data = synthetic::simulate_dataset(cfg);
  const auto& nwp = data.nwp_fine[0];
  const auto& truth = data.smoothed_truth[0];
  auto corr = [&](int lag) {
    std::vector<double> a, b;
    for (std::size_t t = 50; t + 50 < nwp.size(); ++t) {
      a.push_back(nwp[t]);
      b.push_back(truth[static_cast<std::size_t>(static_cast<long>(t) - lag)]);
    }
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  int best = -10;
  for (int k = -10; k <= 10; ++k) {
    if (corr(k) > corr(best)) best = k;
  }
  EXPECT_EQ(best, 3);
}

// =============================================================================
// backtest, map, power
// =============================================================================

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("clipipe");
    ASSERT_EQ(run({"--config", dir_->write("sim.ini", small_simulate_section(3, 19)), "--out", dir_->file("data"),
                   "-q", "simulate"}),
              0);
  }
  static void TearDownTestSuite() { delete dir_; }

  static std::string data_section() {
    return "[data]\nobservations = data/observations.csv\nnwp = data/nwp.csv\nsites = data/sites.csv\n";
  }
  static inline TempDir* dir_ = nullptr;
};

TEST_F(CliPipeline, BacktestWritesAllArtifacts) {
  const auto cfg = dir_->write("bt.ini", data_section() + backtest_section());
  ASSERT_EQ(run({"--config", cfg, "--out", dir_->file("bt"), "--jobs", "1", "-q", "backtest"}), 0);
  for (const char* f : {"records.csv", "metrics_mae.csv", "metrics_crps.csv", "summary.json", "audit/roll_0000.json",
                        "audit/roll_0001.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_->file(std::string("bt/") + f))) << f;
  }
  const auto records = read_file(dir_->file("bt/records.csv"));
  EXPECT_EQ(records.rfind("model,site,issue_time,horizon_min,forecast,sd,observed\n", 0), 0u);
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 1 + 4 * 2 * 36 * 2);
  const auto mae = read_file(dir_->file("bt/metrics_mae.csv"));
  EXPECT_NE(mae.find("Average"), std::string::npos);
}

TEST_F(CliPipeline, OutputDirectoryFromEnvironment) {
  const auto cfg = dir_->write("bt_env.ini", data_section() + backtest_section() + "models = nwp, persistence\n");
  ::setenv("WINDCAST_OUT", dir_->file("from_env").c_str(), 1);
  const int code = run({"--config", cfg, "-q", "backtest"});
  ::unsetenv("WINDCAST_OUT");
  ASSERT_EQ(code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir_->file("from_env/records.csv")));
}

TEST_F(CliPipeline, MapWritesOneFilePerHorizon) {
  const auto cfg = dir_->write("map.ini", data_section() + backtest_section() +
                                              "[map]\nlat_min = 39.4\nlat_max = 39.8\nlon_min = -74.0\n"
                                              "lon_max = -73.4\nn_lat = 10\nn_lon = 10\n");
  ASSERT_EQ(run({"--config", cfg, "--out", dir_->file("map"), "-q", "map", "--issue", "2020-01-03T00:00:00Z",
                 "--horizon", "6", "--horizon", "30"}),
            0);
  const auto a = read_file(dir_->file("map/map_20200103T000000Z_h006.csv"));
  const auto b = read_file(dir_->file("map/map_20200103T000000Z_h030.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 101);
  EXPECT_EQ(std::count(b.begin(), b.end(), '\n'), 101);
  EXPECT_NE(a, b);

  EXPECT_EQ(run({"--config", cfg, "--out", dir_->file("map"), "-q", "map", "--issue", "2020-01-01T03:00:00Z"}),
            cli::kExitConfig);
  EXPECT_EQ(run({"--config", cfg, "--out", dir_->file("map"), "-q", "map", "--issue", "2020-02-01T00:00:00Z"}),
            cli::kExitConfig);
}

TEST_F(CliPipeline, PowerCurveAndPce) {
  std::string curve = "speed,power\n";
  for (int i = 0; i <= 250; ++i) {
    const double s = 0.1 * i;
    curve += fmt::format("{},{}\n", s, 1.0 / (1.0 + std::exp(-(s - 8.0))));
  }
  dir_->write("curve.csv", curve);
  const auto bt = dir_->write("bt_p.ini", data_section() + backtest_section() + "models = nwp, persistence\n");
  ASSERT_EQ(run({"--config", bt, "--out", dir_->file("pw"), "-q", "backtest"}), 0);
  const auto cfg = dir_->write("power.ini", "[power]\ncurve = curve.csv\nrecords = pw/records.csv\n");
  ASSERT_EQ(run({"--config", cfg, "--out", dir_->file("pw"), "-q", "power"}), 0);
  EXPECT_FALSE(read_file(dir_->file("pw/power_curve.csv")).empty());
  const auto pce = read_file(dir_->file("pw/power_pce.csv"));
  EXPECT_NE(pce.find("nwp"), std::string::npos);
  EXPECT_NE(pce.find("persistence"), std::string::npos);

  dir_->write("bad.csv", "wind,p\n1,0\n");
  const auto bad = dir_->write("bad.ini", "[power]\ncurve = bad.csv\n");
  EXPECT_EQ(run({"--config", bad, "--out", dir_->file("pw"), "-q", "power"}), cli::kExitData);
}
