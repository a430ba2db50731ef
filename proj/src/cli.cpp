#include "windcast/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "csv.hpp"
#include "windcast/config.hpp"
#include "windcast/seed.hpp"
#include "windcast/serialize.hpp"

namespace windcast::cli {
namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  bool continue_on_error = false;
  bool quiet = false;
  std::string issue;
  std::vector<std::size_t> horizons;
};

config::RunConfig load_config(const Flags& f) {
  auto c = config::load(f.config);
  if (f.seed) {
    c.seed = *f.seed;
    if (!c.simulate_seed_pinned) c.simulate.seed = derive_seed(c.seed, "simulate");
  }
  if (const char* env = std::getenv("WINDCAST_OUT"); env != nullptr && *env != '\0') c.out = env;
  if (!f.out.empty()) c.out = f.out;
  if (f.jobs) c.jobs = *f.jobs;
  c.backtest.jobs = c.jobs.value_or(std::max(1u, std::thread::hardware_concurrency()));
  if (f.continue_on_error) c.continue_on_error = true;
  c.backtest.continue_on_error = c.continue_on_error;
  return c;
}

AlignedDataset load_dataset(const config::RunConfig& c) {
  if (c.data.observations.empty() || c.data.nwp.empty() || c.data.sites.empty()) {
    throw Error(ErrorKind::Config, "[data] needs observations, nwp and sites");
  }
  const auto catalog = load_site_catalog(c.data.sites);
  const auto obs = load_observations(c.data.observations);
  const auto nwp = load_nwp(c.data.nwp);
  if (c.data.start || c.data.end) {
    const Timestamp start = c.data.start.value_or(obs.front().grid.at(0));
    const Timestamp end = c.data.end.value_or(obs.front().grid.last());
    return align(obs, nwp, catalog, start, end);
  }
  return align_full(obs, nwp, catalog);
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int cmd_backtest(const Flags& f) {
  const auto c = load_config(f);
  const auto ds = load_dataset(c);
  const auto result = evaluation::run_backtest(ds, c.backtest);

  serialize::write_text(path_in(c.out, "records.csv"), serialize::records_csv(result.records));
  const auto mae = evaluation::mae_table(result.records, c.backtest.models);
  const auto crps = evaluation::crps_table(result.records, c.backtest.models);
  const std::string ref = c.backtest.models.front();
  serialize::write_text(path_in(c.out, "metrics_mae.csv"), serialize::metric_csv(mae, ref));
  serialize::write_text(path_in(c.out, "metrics_crps.csv"), serialize::metric_csv(crps, ref));
  for (const auto& note : mae.notes) spdlog::warn("MAE table: {}", note);

  serialize::json summary;
  summary["rolls"] = result.rolls;
  summary["failed_rolls"] = result.failed_rolls;
  summary["records"] = result.records.size();
  summary["mean_signed_error"] = evaluation::mean_signed_error(result.records);
  double slowest = 0.0;
  for (const auto& a : result.audits) {
    slowest = std::max(slowest, a.seconds);
    serialize::write_text(path_in(c.out, fmt::format("audit/roll_{:04d}.json", a.roll)),
                          serialize::to_json(a).dump(2) + "\n");
  }
  summary["slowest_roll_seconds"] = slowest;
  serialize::write_text(path_in(c.out, "summary.json"), summary.dump(2) + "\n");
  if (result.failed_rolls > 0) spdlog::warn("{} roll(s) failed and were skipped", result.failed_rolls);
  spdlog::info("wrote {} records for {} rolls to {}", result.records.size(), result.rolls, c.out);
  return kExitOk;
}

int cmd_simulate(const Flags& f) {
  const auto c = load_config(f);
  const auto data = synthetic::simulate_dataset(c.simulate);
  synthetic::write_dataset(data, c.out);
  spdlog::info("wrote synthetic dataset ({} days, {} sites) to {}", c.simulate.days, c.simulate.sites.size(), c.out);
  return kExitOk;
}

int cmd_map(const Flags& f) {
  const auto c = load_config(f);
  if (!c.has_mesh) throw Error(ErrorKind::Config, "map needs a [map] section");
  const auto issue_time = parse_iso8601(f.issue);
  if (!issue_time) throw Error(ErrorKind::Config, "--issue: expected an ISO-8601 UTC time, got '" + f.issue + "'");
  const std::vector<std::size_t> horizons = f.horizons.empty() ? std::vector<std::size_t>{6} : f.horizons;
  const std::size_t max_h = *std::max_element(horizons.begin(), horizons.end());
  if (max_h > c.backtest.model.horizon) {
    throw Error(ErrorKind::Config, "--horizon exceeds the configured horizon H_T");
  }

  const auto ds = load_dataset(c);
  const auto step = ds.grid.index_of(*issue_time);
  const std::size_t T = c.backtest.model.training_steps;
  if (!step || *step + 1 < T || *step + c.backtest.model.horizon >= ds.length()) {
    throw Error(ErrorKind::Config, "issue " + f.issue + " is outside the backtest range");
  }
  const features::FeatureContext ctx(ds);
  const auto state = pipeline::fit_roll(ctx, *step, c.backtest.model);
  for (std::size_t h : horizons) {
    const auto cells = evaluation::forecast_map(state, ctx, c.mesh, h);
    std::string stamp = format_iso8601(*issue_time);
    std::erase(stamp, ':');
    std::erase(stamp, '-');
    const auto name = fmt::format("map_{}_h{:03d}.csv", stamp, h);
    serialize::write_text(path_in(c.out, name), serialize::map_csv(cells));
    spdlog::info("wrote {}", name);
  }
  return kExitOk;
}

int cmd_power(const Flags& f) {
  const auto c = load_config(f);
  if (c.power.curve.empty()) throw Error(ErrorKind::Config, "[power] needs a curve file");
  const auto table = detail::read_csv(c.power.curve);
  const int sc = table.column(c.power.speed_column);
  const int pc = table.column(c.power.power_column);
  if (sc < 0 || pc < 0) {
    throw Error(ErrorKind::Schema, c.power.curve + ": needs columns '" + c.power.speed_column + "' and '" +
                                       c.power.power_column + "'");
  }
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      pairs.emplace_back(std::stod(row[static_cast<std::size_t>(sc)]), std::stod(row[static_cast<std::size_t>(pc)]));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, c.power.curve + ":" + std::to_string(table.line_numbers[i]) + ": not a number");
    }
  }
  const auto curve = evaluation::power_curve_from_bins(pairs);
  serialize::write_text(path_in(c.out, "power_curve.csv"), serialize::power_curve_csv(curve));
  if (!c.power.records.empty()) {
    const auto records = serialize::read_records_csv(c.power.records);
    std::vector<std::string> models;
    for (const auto& r : records) {
      if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    }
    const auto pce = evaluation::pce_table(records, curve, models);
    serialize::write_text(path_in(c.out, "power_pce.csv"), serialize::pce_csv(pce, models));
  }
  return kExitOk;
}

}  // namespace

int exit_code(ErrorClass c) noexcept {
  switch (c) {
    case ErrorClass::Config:
      return kExitConfig;
    case ErrorClass::Data:
      return kExitData;
    case ErrorClass::Numerical:
      return kExitNumerical;
  }
  return kExitData;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Spatio-temporal wind speed forecasting"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "INI configuration file")->required();
  app.add_option("--seed", f.seed, "root random seed");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--continue-on-error", f.continue_on_error, "skip failed rolls");
  app.add_flag("-q,--quiet", f.quiet, "log warnings and errors only");
  app.fallthrough();
  auto* backtest = app.add_subcommand("backtest", "rolling-origin backtest");
  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset");
  auto* map = app.add_subcommand("map", "gridded forecast maps");
  map->add_option("--issue", f.issue, "forecast origin, ISO-8601 UTC")->required();
  map->add_option("--horizon", f.horizons, "horizons in 10-minute steps");
  auto* power = app.add_subcommand("power", "power curve and power curve error");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  spdlog::set_level(f.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (backtest->parsed()) return cmd_backtest(f);
    if (simulate->parsed()) return cmd_simulate(f);
    if (map->parsed()) return cmd_map(f);
    if (power->parsed()) return cmd_power(f);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.error_class());
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace windcast::cli
