#include "windcast/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "windcast/error.hpp"
#include "windcast/seed.hpp"

namespace windcast::config {
namespace {

using Setter = std::function<void(const std::string&)>;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::Config, key + ": " + what);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) fail(key, "expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    fail(key, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) fail(key, "expected an integer, got '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 0) fail(key, "must be non-negative");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "expected a boolean, got '" + v + "'");
}

Timestamp to_time(const std::string& key, const std::string& v) {
  const auto t = parse_iso8601(v);
  if (!t) fail(key, "expected an ISO-8601 UTC time, got '" + v + "'");
  return *t;
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// "ID lat lon; ID lat lon"
std::vector<synthetic::SiteSpec> to_sites(const std::string& key, const std::string& v) {
  std::vector<synthetic::SiteSpec> out;
  for (const auto& entry : split(v, ';')) {
    std::stringstream ss(entry);
    synthetic::SiteSpec s;
    std::string lat, lon, extra;
    if (!(ss >> s.id >> lat >> lon) || (ss >> extra)) fail(key, "expected 'ID lat lon' entries, got '" + entry + "'");
    s.position = {to_double(key, lat), to_double(key, lon)};
    out.push_back(s);
  }
  return out;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

RunConfig parse(const std::string& text, const std::string& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::Config, "line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig c;
  auto& bt = c.backtest;
  auto& m = bt.model;
  auto& sim = c.simulate;
  std::optional<std::uint64_t> simulate_seed;

  const std::map<std::string, std::map<std::string, Setter>> handlers{
      {"data",
       {{"observations", [&](const std::string& v) { c.data.observations = resolve(base_dir, v); }},
        {"nwp", [&](const std::string& v) { c.data.nwp = resolve(base_dir, v); }},
        {"sites", [&](const std::string& v) { c.data.sites = resolve(base_dir, v); }},
        {"start", [&](const std::string& v) { c.data.start = to_time("data.start", v); }},
        {"end", [&](const std::string& v) { c.data.end = to_time("data.end", v); }}}},
      {"backtest",
       {{"training_steps", [&](const std::string& v) { m.training_steps = to_count("backtest.training_steps", v); }},
        {"horizon", [&](const std::string& v) { m.horizon = to_count("backtest.horizon", v); }},
        {"stride", [&](const std::string& v) { bt.stride = to_count("backtest.stride", v); }},
        {"threshold", [&](const std::string& v) { m.threshold = to_double("backtest.threshold", v); }},
        {"models", [&](const std::string& v) { bt.models = split(v, ','); }},
        {"mle_steps", [&](const std::string& v) { m.mle_steps = to_count("backtest.mle_steps", v); }},
        {"subhourly_cutoff",
         [&](const std::string& v) { m.subhourly_cutoff = static_cast<int>(to_int("backtest.subhourly_cutoff", v)); }},
        {"max_evaluations",
         [&](const std::string& v) { m.max_evaluations = static_cast<int>(to_int("backtest.max_evaluations", v)); }},
        {"max_rolls", [&](const std::string& v) { bt.max_rolls = to_count("backtest.max_rolls", v); }},
        {"chain_length", [&](const std::string& v) { bt.chain_length = to_count("backtest.chain_length", v); }},
        {"intercept", [&](const std::string& v) { m.intercept = to_bool("backtest.intercept", v); }}}},
      {"run",
       {{"seed", [&](const std::string& v) { c.seed = static_cast<std::uint64_t>(to_int("run.seed", v)); }},
        {"jobs", [&](const std::string& v) { c.jobs = to_count("run.jobs", v); }},
        {"out", [&](const std::string& v) { c.out = resolve(base_dir, v); }},
        {"continue_on_error", [&](const std::string& v) { c.continue_on_error = to_bool("run.continue_on_error", v); }}}},
      {"simulate",
       {{"start", [&](const std::string& v) { sim.start = to_time("simulate.start", v); }},
        {"days", [&](const std::string& v) { sim.days = to_count("simulate.days", v); }},
        {"sites", [&](const std::string& v) { sim.sites = to_sites("simulate.sites", v); }},
        {"extra_grid", [&](const std::string& v) { sim.extra_grid = to_sites("simulate.extra_grid", v); }},
        {"base_speed", [&](const std::string& v) { sim.base_speed = to_double("simulate.base_speed", v); }},
        {"synoptic_amplitude",
         [&](const std::string& v) { sim.synoptic_amplitude = to_double("simulate.synoptic_amplitude", v); }},
        {"diurnal_amplitude",
         [&](const std::string& v) { sim.diurnal_amplitude = to_double("simulate.diurnal_amplitude", v); }},
        {"flow_speed", [&](const std::string& v) { sim.flow_speed = to_double("simulate.flow_speed", v); }},
        {"flow_direction_deg",
         [&](const std::string& v) { sim.flow_direction_deg = to_double("simulate.flow_direction_deg", v); }},
        {"direction_swing_deg",
         [&](const std::string& v) { sim.direction_swing_deg = to_double("simulate.direction_swing_deg", v); }},
        {"alpha", [&](const std::string& v) { sim.residual.alpha = to_double("simulate.alpha", v); }},
        {"lambda", [&](const std::string& v) { sim.residual.lambda = to_double("simulate.lambda", v); }},
        {"r_s", [&](const std::string& v) { sim.residual.r_s = to_double("simulate.r_s", v); }},
        {"r_t", [&](const std::string& v) { sim.residual.r_t = to_double("simulate.r_t", v); }},
        {"delta", [&](const std::string& v) { sim.residual.delta = to_double("simulate.delta", v); }},
        {"advection_spread",
         [&](const std::string& v) { sim.advection_spread = to_double("simulate.advection_spread", v); }},
        {"smoothing_steps", [&](const std::string& v) { sim.smoothing_steps = to_count("simulate.smoothing_steps", v); }},
        {"bias_additive", [&](const std::string& v) { sim.bias.additive = to_double("simulate.bias_additive", v); }},
        {"bias_multiplicative",
         [&](const std::string& v) { sim.bias.multiplicative = to_double("simulate.bias_multiplicative", v); }},
        {"bias_shift_steps",
         [&](const std::string& v) { sim.bias.shift_steps = static_cast<int>(to_int("simulate.bias_shift_steps", v)); }},
        {"bias_drift_amplitude",
         [&](const std::string& v) { sim.bias.drift_amplitude = to_double("simulate.bias_drift_amplitude", v); }},
        {"bias_drift_period_hours",
         [&](const std::string& v) { sim.bias.drift_period_hours = to_double("simulate.bias_drift_period_hours", v); }},
        {"bias_stability_coupling",
         [&](const std::string& v) { sim.bias.stability_coupling = to_double("simulate.bias_stability_coupling", v); }},
        {"block_steps", [&](const std::string& v) { sim.block_steps = to_count("simulate.block_steps", v); }},
        {"overlap_steps", [&](const std::string& v) { sim.overlap_steps = to_count("simulate.overlap_steps", v); }},
        {"dense_limit", [&](const std::string& v) { sim.dense_limit = to_count("simulate.dense_limit", v); }},
        {"seed", [&](const std::string& v) { simulate_seed = static_cast<std::uint64_t>(to_int("simulate.seed", v)); }}}},
      {"map",
       {{"lat_min", [&](const std::string& v) { c.mesh.lat_min = to_double("map.lat_min", v); }},
        {"lat_max", [&](const std::string& v) { c.mesh.lat_max = to_double("map.lat_max", v); }},
        {"lon_min", [&](const std::string& v) { c.mesh.lon_min = to_double("map.lon_min", v); }},
        {"lon_max", [&](const std::string& v) { c.mesh.lon_max = to_double("map.lon_max", v); }},
        {"n_lat", [&](const std::string& v) { c.mesh.n_lat = to_count("map.n_lat", v); }},
        {"n_lon", [&](const std::string& v) { c.mesh.n_lon = to_count("map.n_lon", v); }}}},
      {"power",
       {{"curve", [&](const std::string& v) { c.power.curve = resolve(base_dir, v); }},
        {"records", [&](const std::string& v) { c.power.records = resolve(base_dir, v); }},
        {"speed_column", [&](const std::string& v) { c.power.speed_column = v; }},
        {"power_column", [&](const std::string& v) { c.power.power_column = v; }}}},
  };

  for (const auto& [section, body] : tree) {
    auto sec = handlers.find(section);
    if (sec == handlers.end()) {
      if (body.empty()) throw Error(ErrorKind::Config, "key '" + section + "' outside of a section");
      throw Error(ErrorKind::Config, "unknown section [" + section + "]");
    }
    if (section == "map") c.has_mesh = true;
    for (const auto& [key, value] : body) {
      auto h = sec->second.find(key);
      if (h == sec->second.end()) throw Error(ErrorKind::Config, "unknown key '" + key + "' in [" + section + "]");
      h->second(value.get_value<std::string>());
    }
  }

  // Module seeds fan out from the run seed unless pinned.
  sim.seed = simulate_seed.value_or(derive_seed(c.seed, "simulate"));
  c.simulate_seed_pinned = simulate_seed.has_value();
  if (c.jobs) bt.jobs = *c.jobs;
  bt.continue_on_error = c.continue_on_error;
  bt.validate();
  if (c.data.start && c.data.end && *c.data.end <= *c.data.start) {
    throw Error(ErrorKind::Config, "data.end must be after data.start");
  }
  if (c.has_mesh) c.mesh.nodes();
  return c;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace windcast::config
