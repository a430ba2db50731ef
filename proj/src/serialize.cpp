#include "windcast/serialize.hpp"

#include <spdlog/fmt/fmt.h>

#include <filesystem>
#include <fstream>

#include "csv.hpp"
#include "windcast/error.hpp"

namespace windcast::serialize {
namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

json to_json(const features::FeatureSpec& spec) {
  return json{{"variable", spec.variable}, {"lag", spec.lag}, {"correlation", spec.correlation}};
}

json to_json(const std::vector<features::FeatureSpec>& specs) {
  json a = json::array();
  for (const auto& s : specs) a.push_back(to_json(s));
  return a;
}

json to_json(const calibration::CalibrationModel& m) {
  return json{{"intercept", m.has_intercept ? json(m.intercept) : json(nullptr)},
              {"a", m.a},
              {"b", m.b},
              {"c", m.c},
              {"lag_order", m.lag_order},
              {"specs", to_json(m.specs)},
              {"columns", m.column_names},
              {"rank_deficient", m.rank_deficient},
              {"condition_number", m.condition_number},
              {"rows_used", m.rows_used}};
}

json to_json(const kernels::AdvectionParams& adv) {
  return json{{"mean_km_per_step", {adv.mean(0), adv.mean(1)}}, {"cov", matrix(adv.cov)}};
}

json to_json(const kernels::KernelParams& p) {
  return json{{"alpha", p.alpha},   {"lambda", p.lambda}, {"r_s_km", p.r_s},      {"r_t_steps", p.r_t},
              {"delta", p.delta},   {"beta0", p.beta0},   {"temporal", p.temporal}, {"advection", to_json(p.advection)}};
}

json to_json(const evaluation::RollAudit& a) {
  json j{{"roll", a.roll},
         {"issue_time", format_iso8601(a.issue)},
         {"seconds", a.seconds},
         {"selected", to_json(a.specs)},
         {"lag_order", a.lag_order},
         {"warnings", a.warnings}};
  json fam = json::array();
  for (const auto& f : a.families) {
    fam.push_back({{"family", f.name},
                   {"best_lag", f.best_lag},
                   {"best_correlation", f.best_correlation},
                   {"admitted", f.admitted},
                   {"excluded", f.excluded}});
  }
  j["families"] = fam;
  if (a.main_params) {
    j["calibration"] = to_json(a.calibration);
    j["advection"] = to_json(a.advection);
    j["kernel"] = to_json(*a.main_params);
  }
  if (a.subhourly_params) j["kernel_subhourly"] = to_json(*a.subhourly_params);
  if (a.gop_params) j["kernel_gop"] = to_json(*a.gop_params);
  if (a.error) j["error"] = *a.error;
  return j;
}

json to_json(const AlignedDataset& ds) {
  json j;
  j["grid"] = {{"start", format_iso8601(ds.grid.at(0))}, {"step_s", ds.grid.step()}, {"length", ds.length()}};
  j["projection"] = {{"origin", {ds.projection.origin().lat, ds.projection.origin().lon}},
                     {"bounds",
                      {ds.projection.bounds().lat_min, ds.projection.bounds().lat_max, ds.projection.bounds().lon_min,
                       ds.projection.bounds().lon_max}}};
  json sites = json::array();
  for (std::size_t s = 0; s < ds.site_count(); ++s) {
    json obs = json::array();
    for (const auto& v : ds.observations[s].values) obs.push_back(v ? json(*v) : json(nullptr));
    sites.push_back({{"id", ds.sites[s].id},
                     {"lat", ds.sites[s].position.lat},
                     {"lon", ds.sites[s].position.lon},
                     {"x_km", ds.sites[s].xy.x},
                     {"y_km", ds.sites[s].xy.y},
                     {"nwp_source", ds.nwp_source.at(ds.sites[s].id)},
                     {"observations", obs}});
  }
  j["sites"] = sites;
  json nwp = json::object();
  for (const auto& [id, vars] : ds.nwp_interp) {
    json v = json::object();
    for (const auto& [name, series] : vars) v[name] = series;
    nwp[id] = v;
  }
  j["nwp"] = nwp;
  j["units"] = ds.units;
  return j;
}

json to_json(const gp::ForecastDistribution& d, const std::vector<DistributionLabel>& labels) {
  json pts = json::array();
  for (Eigen::Index i = 0; i < d.mean.size(); ++i) {
    json p{{"mean", d.mean(i)}, {"sd", std::sqrt(d.variance(i))}};
    if (static_cast<std::size_t>(i) < labels.size()) {
      const auto& l = labels[static_cast<std::size_t>(i)];
      p["site"] = l.site;
      p["issue_time"] = format_iso8601(l.issue);
      p["horizon_min"] = l.horizon * 10;
    }
    pts.push_back(p);
  }
  json j{{"points", pts}};
  if (d.covariance) j["covariance"] = matrix(*d.covariance);
  return j;
}

std::string distribution_csv(const gp::ForecastDistribution& d, const std::vector<DistributionLabel>& labels) {
  std::string out = "site,issue_time,horizon_min,mean,sd\n";
  for (Eigen::Index i = 0; i < d.mean.size(); ++i) {
    const auto& l = labels.at(static_cast<std::size_t>(i));
    out += fmt::format("{},{},{},{},{}\n", l.site, format_iso8601(l.issue), l.horizon * 10, num(d.mean(i)),
                       num(std::sqrt(d.variance(i))));
  }
  return out;
}

std::string records_csv(const std::vector<evaluation::ForecastRecord>& records) {
  std::string out = "model,site,issue_time,horizon_min,forecast,sd,observed\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.model, r.site, format_iso8601(r.issue), r.horizon * 10,
                       num(r.forecast), opt(r.sd), opt(r.observed));
  }
  return out;
}

std::vector<evaluation::ForecastRecord> read_records_csv(const std::string& path) {
  const auto table = detail::read_csv(path);
  for (const char* c : {"model", "site", "issue_time", "horizon_min", "forecast", "sd", "observed"}) {
    if (table.column(c) < 0) throw Error(ErrorKind::Schema, path + ": missing column '" + c + "'");
  }
  const auto col = [&](const char* c) { return static_cast<std::size_t>(table.column(c)); };
  std::vector<evaluation::ForecastRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto line = std::to_string(table.line_numbers[i]);
    try {
      evaluation::ForecastRecord r;
      r.model = row[col("model")];
      r.site = row[col("site")];
      const auto issue = parse_iso8601(row[col("issue_time")]);
      if (!issue) throw Error(ErrorKind::Parse, path + ":" + line + ": bad issue_time");
      r.issue = *issue;
      const int minutes = std::stoi(row[col("horizon_min")]);
      if (minutes <= 0 || minutes % 10 != 0) throw Error(ErrorKind::Parse, path + ":" + line + ": bad horizon_min");
      r.horizon = minutes / 10;
      r.forecast = std::stod(row[col("forecast")]);
      if (!row[col("sd")].empty()) r.sd = std::stod(row[col("sd")]);
      if (!row[col("observed")].empty()) r.observed = std::stod(row[col("observed")]);
      out.push_back(std::move(r));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::Parse, path + ":" + line + ": not a number");
    } catch (const std::out_of_range&) {
      throw Error(ErrorKind::Parse, path + ":" + line + ": number out of range");
    }
  }
  return out;
}

std::string metric_csv(const evaluation::MetricTable& t, const std::string& reference) {
  std::string out = "bucket";
  for (const auto& m : t.models) out += "," + m;
  out += "\n";
  for (int b : t.buckets) {
    out += std::to_string(b);
    for (const auto& m : t.models) {
      const auto v = t.get(m, b);
      out += "," + (v ? num(*v) : std::string());
    }
    out += "\n";
  }
  out += "Average";
  for (const auto& m : t.models) {
    auto it = t.average.find(m);
    out += "," + (it != t.average.end() ? num(it->second) : std::string());
  }
  out += "\n";
  const auto imp = evaluation::improvements(t, reference);
  out += "%Improvement";
  for (const auto& m : t.models) {
    auto it = imp.find(m);
    out += "," + (it != imp.end() ? fmt::format("{:.1f}", it->second) : std::string());
  }
  out += "\n";
  return out;
}

std::string pce_csv(const std::map<double, std::map<std::string, double>>& table,
                    const std::vector<std::string>& models) {
  std::string out = "g";
  for (const auto& m : models) out += "," + m;
  out += "\n";
  for (const auto& [g, row] : table) {
    out += fmt::format("{:g}", g);
    for (const auto& m : models) {
      auto it = row.find(m);
      out += "," + (it != row.end() ? num(it->second) : std::string());
    }
    out += "\n";
  }
  return out;
}

std::string power_curve_csv(const evaluation::PowerCurve& c) {
  std::string out = "bin_lower,bin_center,count,bin_mean,curve\n";
  for (std::size_t i = 0; i < c.lower_edges.size(); ++i) {
    out += fmt::format("{},{},{},{},{}\n", num(c.lower_edges[i]), num(c.center(i)), c.counts[i], num(c.bin_means[i]),
                       num(c.smoothed[i]));
  }
  return out;
}

std::string map_csv(const std::vector<evaluation::MapCell>& cells) {
  std::string out = "lat,lon,mean,sd\n";
  for (const auto& c : cells) {
    out += fmt::format("{:.6f},{:.6f},{},{}\n", c.position.lat, c.position.lon, num(c.mean), num(c.sd));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace windcast::serialize
