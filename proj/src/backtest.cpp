#include "windcast/backtest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "windcast/error.hpp"

namespace windcast::evaluation {
namespace {

bool wants(const BacktestConfig& cfg, const char* model) {
  return std::find(cfg.models.begin(), cfg.models.end(), model) != cfg.models.end();
}

void emit(std::vector<ForecastRecord>& out, const AlignedDataset& ds, const char* model, std::size_t issue,
          const std::vector<pipeline::Target>& targets, const gp::ForecastDistribution& d) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto site = static_cast<std::size_t>(targets[i].gp_site);
    const auto k = static_cast<Eigen::Index>(i);
    ForecastRecord r;
    r.model = model;
    r.site = ds.sites[site].id;
    r.issue = ds.grid.at(issue);
    r.horizon = static_cast<int>(targets[i].horizon);
    r.mean = d.mean(k);
    r.forecast = std::max(0.0, d.mean(k));
    r.sd = std::sqrt(d.variance(k));
    r.observed = ds.observation(site, issue + targets[i].horizon);
    out.push_back(std::move(r));
  }
}

struct ChainState {
  pipeline::PreviousOptimum main;
  std::optional<kernels::KernelParams> gop;
};

void run_roll(const features::FeatureContext& ctx, const BacktestConfig& cfg, std::size_t roll, ChainState& chain,
              std::vector<ForecastRecord>& records, RollAudit& audit) {
  const AlignedDataset& ds = ctx.dataset();
  const std::size_t issue = issue_step(cfg, roll);
  const std::size_t H = cfg.model.horizon;
  audit.roll = roll;
  audit.issue = ds.grid.at(issue);
  const auto start = std::chrono::steady_clock::now();
  const auto targets = pipeline::site_targets(ctx, H);

  if (wants(cfg, kModelMain)) {
    const auto state = pipeline::fit_roll(ctx, issue, cfg.model, chain.main);
    emit(records, ds, kModelMain, issue, targets, pipeline::predict_targets(state, ctx, targets));
    chain.main.main = state.main.params;
    audit.main_params = state.main.params;
    if (state.subhourly) {
      chain.main.subhourly = state.subhourly->params;
      audit.subhourly_params = state.subhourly->params;
    }
    audit.specs = state.calibration.specs;
    audit.families = state.selection.families;
    audit.lag_order = state.lag_order.lag;
    audit.calibration = state.calibration;
    audit.advection = state.advection;
    audit.warnings = state.warnings;
  }
  if (wants(cfg, kModelGop)) {
    const auto state = pipeline::fit_gop(ctx, issue, cfg.model, chain.gop);
    emit(records, ds, kModelGop, issue, targets, pipeline::predict_gop(state, ctx, targets));
    chain.gop = state.gp.params;
    audit.gop_params = state.gp.params;
  }
  if (wants(cfg, kModelNwp)) {
    for (const auto& t : targets) {
      const auto site = static_cast<std::size_t>(t.gp_site);
      ForecastRecord r;
      r.model = kModelNwp;
      r.site = ds.sites[site].id;
      r.issue = ds.grid.at(issue);
      r.horizon = static_cast<int>(t.horizon);
      r.mean = pipeline::nwp_forecast(ds, site, issue, t.horizon);
      r.forecast = std::max(0.0, *r.mean);
      r.observed = ds.observation(site, issue + t.horizon);
      records.push_back(std::move(r));
    }
  }
  if (wants(cfg, kModelPersistence)) {
    const std::size_t earliest = issue + 1 - cfg.model.training_steps;
    for (std::size_t s = 0; s < ds.site_count(); ++s) {
      const auto p = pipeline::persistence_forecast(ds, s, issue, earliest);
      if (p.stale) audit.warnings.push_back("persistence at " + ds.sites[s].id + " uses a stale observation");
      for (std::size_t h = 1; h <= H; ++h) {
        ForecastRecord r;
        r.model = kModelPersistence;
        r.site = ds.sites[s].id;
        r.issue = ds.grid.at(issue);
        r.horizon = static_cast<int>(h);
        r.forecast = p.value;
        r.stale = p.stale;
        r.observed = ds.observation(s, issue + h);
        records.push_back(std::move(r));
      }
    }
  }
  audit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void BacktestConfig::validate() const {
  const auto& m = model;
  if (m.horizon == 0) throw Error(ErrorKind::Config, "horizon must be positive");
  if (stride == 0) throw Error(ErrorKind::Config, "stride must be positive");
  if (stride > m.horizon) {
    throw Error(ErrorKind::Config, "stride (" + std::to_string(stride) + ") must not exceed the horizon H_T (" +
                                       std::to_string(m.horizon) + ")");
  }
  if (m.training_steps < 288) {
    throw Error(ErrorKind::Config, "training length T must be at least 288 steps, got " +
                                       std::to_string(m.training_steps));
  }
  if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) throw Error(ErrorKind::Config, "threshold must lie in [0, 1]");
  if (m.subhourly_cutoff < 0 || static_cast<std::size_t>(m.subhourly_cutoff) > m.horizon) {
    throw Error(ErrorKind::Config, "subhourly cutoff must lie in [0, H_T]");
  }
  if (m.max_evaluations < 10) throw Error(ErrorKind::Config, "max_evaluations must be at least 10");
  if (chain_length == 0) throw Error(ErrorKind::Config, "chain length must be positive");
  if (models.empty()) throw Error(ErrorKind::Config, "model list is empty");
  for (const auto& name : models) {
    if (name != kModelMain && name != kModelGop && name != kModelNwp && name != kModelPersistence) {
      throw Error(ErrorKind::Config, "unknown model '" + name + "'");
    }
  }
}

std::size_t issue_step(const BacktestConfig& cfg, std::size_t roll) {
  return cfg.model.training_steps - 1 + roll * cfg.stride;
}

BacktestResult run_backtest(const AlignedDataset& ds, const BacktestConfig& cfg) {
  cfg.validate();
  std::size_t rolls = roll_count(ds.length(), cfg.model.training_steps, cfg.model.horizon, cfg.stride);
  if (rolls == 0) {
    throw Error(ErrorKind::Coverage, "roll 0 needs " + std::to_string(cfg.model.training_steps + cfg.model.horizon) +
                                         " steps of data, dataset has " + std::to_string(ds.length()));
  }
  if (cfg.max_rolls) rolls = std::min(rolls, *cfg.max_rolls);

  const features::FeatureContext ctx(ds);
  BacktestResult result;
  result.rolls = rolls;
  result.audits.resize(rolls);
  std::vector<std::vector<ForecastRecord>> per_roll(rolls);

  const std::size_t chains = (rolls + cfg.chain_length - 1) / cfg.chain_length;
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::vector<std::exception_ptr> failures(rolls);

  auto worker = [&] {
    for (std::size_t c = next++; c < chains; c = next++) {
      ChainState chain;
      const std::size_t end = std::min(rolls, (c + 1) * cfg.chain_length);
      for (std::size_t r = c * cfg.chain_length; r < end; ++r) {
        try {
          run_roll(ctx, cfg, r, chain, per_roll[r], result.audits[r]);
          spdlog::info("roll {}/{} issued {} done in {:.1f} s", r + 1, rolls, format_iso8601(result.audits[r].issue),
                       result.audits[r].seconds);
        } catch (const std::exception& e) {
          per_roll[r].clear();
          result.audits[r].error = e.what();
          failures[r] = std::current_exception();
          std::lock_guard lock(mutex);
          spdlog::error("roll {} failed: {}", r, e.what());
          if (!cfg.continue_on_error) return;
        }
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, chains));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t r = 0; r < rolls; ++r) {
    if (!failures[r]) continue;
    ++result.failed_rolls;
    if (!cfg.continue_on_error) std::rethrow_exception(failures[r]);
  }
  for (auto& v : per_roll) {
    result.records.insert(result.records.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  std::sort(result.records.begin(), result.records.end(), record_less);
  return result;
}

}  // namespace windcast::evaluation
