#include "windcast/core_data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "csv.hpp"
#include "windcast/error.hpp"
#include "windcast/spline.hpp"

namespace windcast {
namespace {

const std::map<std::string, std::string>& unit_table() {
  static const std::map<std::string, std::string> table = {
      {"WIND_SPEED", "m/s"}, {"SWDOWN", "W/m2"},   {"LWUPB", "W/m2"},   {"GLW", "W/m2"},
      {"SNOWNC", "mm"},      {"TEMP", "K"},        {"DIF_FRAC", "-"},   {"LANDMASK", "-"},
      {"LAKEMASK", "-"},     {"PBLH", "m"},        {"HUMIDITY", "%"},   {"PRESSURE", "hPa"},
      {"MDBZ", "dBZ"},       {"U", "m/s"},         {"V", "m/s"},        {"WINDGUST", "m/s"},
  };
  return table;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw Error(ErrorKind::Parse, where + ": not a number: '" + text + "'");
  return value;
}

std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line); }

// Converts a declared unit onto the canonical one, or throws.
double convert_unit(const std::string& variable, const std::string& declared, double value) {
  const auto canonical = canonical_unit(variable);
  if (!canonical || declared == *canonical) return value;
  if (variable == var::kPressure) {
    if (declared == "Pa") return value / 100.0;
    if (declared == "kPa") return value * 10.0;
    if (declared == "mb" || declared == "mbar") return value;
  }
  if (variable == var::kTemperature && (declared == "C" || declared == "degC")) return value + 273.15;
  throw Error(ErrorKind::Schema, "variable " + variable + " declared in '" + declared +
                                     "', expected '" + *canonical + "'");
}

bool is_speed_variable(const std::string& name) {
  return name == var::kWindSpeed || name == var::kGust;
}

}  // namespace

std::optional<std::string> canonical_unit(const std::string& variable) {
  const auto& table = unit_table();
  if (auto it = table.find(variable); it != table.end()) return it->second;
  return std::nullopt;
}

std::string canonical_variable_name(const std::string& header) {
  std::string name = header;
  std::replace(name.begin(), name.end(), ' ', '_');
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
  return canonical_unit(name) ? name : header;
}

const std::vector<std::string>& mandatory_nwp_variables() {
  static const std::vector<std::string> names = {var::kWindSpeed, var::kU, var::kV, var::kPressure,
                                                 var::kTemperature};
  return names;
}

std::size_t ObservationSeries::missing_count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::nullopt));
}

SiteCatalog load_site_catalog(const std::string& path) {
  const auto table = detail::read_csv(path);
  const int id_col = table.column("site_id");
  const int lat_col = table.column("lat");
  const int lon_col = table.column("lon");
  if (id_col < 0 || lat_col < 0 || lon_col < 0) {
    throw Error(ErrorKind::Schema, path + ": site catalog needs columns site_id,lat,lon");
  }
  SiteCatalog catalog;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(path, table.line_numbers[r]);
    const LatLon pos{parse_double(row[lat_col], loc), parse_double(row[lon_col], loc)};
    if (std::abs(pos.lat) > 90.0 || std::abs(pos.lon) > 180.0) {
      throw Error(ErrorKind::Validation, loc + ": coordinates out of range");
    }
    if (!catalog.emplace(row[id_col], pos).second) {
      throw Error(ErrorKind::Conflict, loc + ": duplicate site '" + row[id_col] + "'");
    }
  }
  return catalog;
}

std::vector<ObservationSeries> load_observations(const std::string& path, const ObservationSchema& schema) {
  const auto table = detail::read_csv(path);
  const int ts_col = table.column(schema.timestamp_column);
  const int site_col = table.column(schema.site_column);
  const int speed_col = table.column(schema.speed_column);
  if (ts_col < 0 || site_col < 0 || speed_col < 0) {
    throw Error(ErrorKind::Schema, path + ": observation file needs columns " + schema.timestamp_column +
                                       "," + schema.site_column + "," + schema.speed_column);
  }

  // site -> snapped time -> value (nullopt for an explicitly empty cell)
  std::map<std::string, std::map<Timestamp, std::optional<double>>> by_site;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(path, table.line_numbers[r]);
    const auto ts = parse_iso8601(row[ts_col]);
    if (!ts) throw Error(ErrorKind::Parse, loc + ": malformed timestamp '" + row[ts_col] + "'");
    // Snap to the nearest 10-minute mark.
    const Timestamp snapped =
        static_cast<Timestamp>(std::llround(static_cast<double>(*ts) / kTenMinutes)) * kTenMinutes;
    std::optional<double> value;
    if (!row[speed_col].empty() && row[speed_col] != "NA" && row[speed_col] != "nan") {
      const double v = parse_double(row[speed_col], loc);
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorKind::Validation, loc + ": wind speed must be finite and >= 0, got " + row[speed_col]);
      }
      value = v;
    }
    auto& series = by_site[row[site_col]];
    if (!series.emplace(snapped, value).second) {
      throw Error(ErrorKind::Conflict, loc + ": duplicate row for site '" + row[site_col] + "' at " +
                                           format_iso8601(snapped));
    }
  }

  std::vector<ObservationSeries> out;
  for (auto& [id, samples] : by_site) {
    const Timestamp first = samples.begin()->first;
    const Timestamp last = samples.rbegin()->first;
    const auto length = static_cast<std::size_t>((last - first) / kTenMinutes) + 1;
    ObservationSeries s;
    s.site.id = id;
    s.grid = TimeGrid(first, kTenMinutes, length);
    s.values.assign(length, std::nullopt);
    for (const auto& [t, v] : samples) s.values[*s.grid.index_of(t)] = v;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<NwpSeries> load_nwp(const std::string& path, const NwpSchema& schema) {
  const auto table = detail::read_csv(path);
  const int ts_col = table.column(schema.timestamp_column);
  const int site_col = table.column(schema.site_column);
  if (ts_col < 0 || site_col < 0) {
    throw Error(ErrorKind::Schema, path + ": NWP file needs columns " + schema.timestamp_column + "," +
                                       schema.site_column);
  }

  struct Column {
    int index;
    std::string name;
    std::string unit;
    bool recognized;
  };
  std::vector<Column> columns;
  std::set<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<int>(c) == ts_col || static_cast<int>(c) == site_col) continue;
    const std::string& header = table.header[c];
    const std::string name = canonical_variable_name(header);
    const auto canonical = canonical_unit(name);
    std::string unit = canonical.value_or("unknown");
    if (auto it = schema.units.find(header); it != schema.units.end()) unit = it->second;
    if (auto it = schema.units.find(name); it != schema.units.end()) unit = it->second;
    if (canonical) {
      convert_unit(name, unit, 0.0);  // validates the declaration
    } else {
      spdlog::warn("{}: unrecognised NWP variable '{}' kept as-is", path, header);
    }
    if (!names.insert(name).second) throw Error(ErrorKind::Schema, path + ": duplicate column " + name);
    columns.push_back({static_cast<int>(c), name, unit, canonical.has_value()});
  }
  for (const auto& required : mandatory_nwp_variables()) {
    if (!names.count(required)) {
      throw Error(ErrorKind::Schema, path + ": missing mandatory NWP variable \"" + required + "\"");
    }
  }

  std::map<std::string, std::map<Timestamp, std::size_t>> rows_by_site;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(path, table.line_numbers[r]);
    const auto ts = parse_iso8601(row[ts_col]);
    if (!ts) throw Error(ErrorKind::Parse, loc + ": malformed timestamp '" + row[ts_col] + "'");
    if (!rows_by_site[row[site_col]].emplace(*ts, r).second) {
      throw Error(ErrorKind::Conflict, loc + ": duplicate row for site '" + row[site_col] + "'");
    }
  }

  std::vector<NwpSeries> out;
  for (const auto& [id, rows] : rows_by_site) {
    Timestamp prev = rows.begin()->first;
    for (auto it = std::next(rows.begin()); it != rows.end(); ++it) {
      if (it->first - prev != kOneHour) {
        throw Error(ErrorKind::Grid, where(path, table.line_numbers[it->second]) +
                                         ": NWP rows for site '" + id + "' are not hourly (" +
                                         std::to_string(it->first - prev) + " s spacing)");
      }
      prev = it->first;
    }
    NwpSeries s;
    s.site.id = id;
    s.grid = TimeGrid(rows.begin()->first, kOneHour, rows.size());
    for (const auto& col : columns) {
      NwpVariable v{col.unit, {}, col.recognized};
      v.values.reserve(rows.size());
      for (const auto& [t, r] : rows) {
        const std::string& cell = table.rows[r][col.index];
        if (cell.empty() || cell == "NA" || cell == "nan") {
          v.values.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          const double raw = parse_double(cell, where(path, table.line_numbers[r]));
          v.values.push_back(col.recognized ? convert_unit(col.name, col.unit, raw) : raw);
        }
      }
      if (col.recognized) v.unit = *canonical_unit(col.name);
      s.variables.emplace(col.name, std::move(v));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t AlignedDataset::site_index(const std::string& id) const {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].id == id) return i;
  }
  throw Error(ErrorKind::Validation, "unknown site '" + id + "'");
}

bool AlignedDataset::has_variable(const std::string& variable) const {
  if (nwp_interp.empty()) return false;
  for (const auto& [id, vars] : nwp_interp) {
    if (!vars.count(variable)) return false;
  }
  return true;
}

const std::vector<double>& AlignedDataset::nwp(std::size_t site, const std::string& variable) const {
  return nwp_at(nwp_source.at(sites.at(site).id), variable);
}

const std::vector<double>& AlignedDataset::nwp_at(const std::string& nwp_site_id,
                                                  const std::string& variable) const {
  const auto& vars = nwp_interp.at(nwp_site_id);
  auto it = vars.find(variable);
  if (it == vars.end()) {
    throw Error(ErrorKind::FeatureInput, "NWP variable " + variable + " absent at " + nwp_site_id);
  }
  return it->second;
}

AlignedDataset align(const std::vector<ObservationSeries>& observations, const std::vector<NwpSeries>& nwp,
                     const SiteCatalog& catalog, Timestamp window_start, Timestamp window_end,
                     double bbox_margin_deg) {
  if (observations.empty()) throw Error(ErrorKind::InsufficientData, "no observation series");
  if (nwp.empty()) throw Error(ErrorKind::InsufficientData, "no NWP series");
  if (window_end < window_start || window_start % kTenMinutes != 0 || window_end % kTenMinutes != 0) {
    throw Error(ErrorKind::Grid, "alignment window must be ordered and on 10-minute marks");
  }

  auto lookup = [&](const std::string& id) {
    auto it = catalog.find(id);
    if (it == catalog.end()) throw Error(ErrorKind::Validation, "site '" + id + "' missing from site catalog");
    return it->second;
  };

  std::vector<LatLon> all_points;
  for (const auto& o : observations) all_points.push_back(lookup(o.site.id));
  for (const auto& n : nwp) all_points.push_back(lookup(n.site.id));

  AlignedDataset ds;
  ds.projection = Projection::about_centroid(all_points, bbox_margin_deg);
  const auto length = static_cast<std::size_t>((window_end - window_start) / kTenMinutes) + 1;
  ds.grid = TimeGrid(window_start, kTenMinutes, length);

  auto make_site = [&](const std::string& id) {
    Site s{id, lookup(id), {}};
    s.xy = ds.projection.forward(s.position);
    return s;
  };

  for (const auto& n : nwp) ds.nwp_sites.push_back(make_site(n.site.id));

  for (const auto& o : observations) {
    Site site = make_site(o.site.id);
    ObservationSeries clipped{site, ds.grid, std::vector<std::optional<double>>(length)};
    for (std::size_t i = 0; i < length; ++i) {
      if (auto j = o.grid.index_of(ds.grid.at(i))) clipped.values[i] = o.values[*j];
    }
    // Nearest NWP grid point; ties broken by id order for determinism.
    const Site* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& g : ds.nwp_sites) {
      const double d = distance_km(site, g);
      if (d < best_d) {
        best_d = d;
        best = &g;
      }
    }
    ds.nwp_source[site.id] = best->id;
    ds.sites.push_back(site);
    ds.observations.push_back(std::move(clipped));
  }

  for (const auto& n : nwp) {
    const TimeGrid& hourly = n.grid;
    if (hourly.origin() > window_start || hourly.last() < window_end) {
      const Timestamp gap_start = hourly.origin() > window_start ? window_start : hourly.last();
      const Timestamp gap_end = hourly.origin() > window_start ? hourly.origin() : window_end;
      throw Error(ErrorKind::Coverage, "NWP at '" + n.site.id + "' does not cover " +
                                           format_iso8601(gap_start) + " .. " + format_iso8601(gap_end));
    }
    // Knots bracketing the window plus up to two extra on each side.
    const auto first_knot = static_cast<std::size_t>((window_start - hourly.origin()) / kOneHour);
    const auto last_knot = static_cast<std::size_t>((window_end - hourly.origin() + kOneHour - 1) / kOneHour);
    std::size_t k0 = first_knot >= 2 ? first_knot - 2 : 0;
    std::size_t k1 = std::min(hourly.length() - 1, last_knot + 2);
    while (k1 - k0 + 1 < 4 && (k0 > 0 || k1 + 1 < hourly.length())) {
      if (k0 > 0) --k0;
      if (k1 - k0 + 1 < 4 && k1 + 1 < hourly.length()) ++k1;
    }

    auto& out_vars = ds.nwp_interp[n.site.id];
    for (const auto& [name, variable] : n.variables) {
      std::vector<double> knots(variable.values.begin() + static_cast<std::ptrdiff_t>(k0),
                                variable.values.begin() + static_cast<std::ptrdiff_t>(k1) + 1);
      if (std::any_of(knots.begin(), knots.end(), [](double v) { return !std::isfinite(v); })) {
        if (!variable.recognized) continue;
        throw Error(ErrorKind::InsufficientData,
                    "missing hourly " + name + " at '" + n.site.id + "' inside the alignment window");
      }
      const std::vector<double> fine = spline_downscale(knots, 6);
      const Timestamp fine_origin = hourly.at(k0);
      std::vector<double> series(length);
      std::size_t clamped = 0;
      for (std::size_t i = 0; i < length; ++i) {
        const auto j = static_cast<std::size_t>((ds.grid.at(i) - fine_origin) / kTenMinutes);
        double v = fine[j];
        if (is_speed_variable(name) && v < 0.0) {
          v = 0.0;
          ++clamped;
        }
        series[i] = v;
      }
      if (clamped > 0) {
        spdlog::warn("{} at '{}': clamped {} negative spline values to 0", name, n.site.id, clamped);
      }
      out_vars.emplace(name, std::move(series));
      ds.units[name] = variable.unit;
    }
  }
  return ds;
}

AlignedDataset align_full(const std::vector<ObservationSeries>& observations, const std::vector<NwpSeries>& nwp,
                          const SiteCatalog& catalog, double bbox_margin_deg) {
  if (observations.empty() || nwp.empty()) throw Error(ErrorKind::InsufficientData, "no input series");
  Timestamp start = std::numeric_limits<Timestamp>::max();
  Timestamp end = std::numeric_limits<Timestamp>::min();
  for (const auto& o : observations) {
    start = std::min(start, o.grid.origin());
    end = std::max(end, o.grid.last());
  }
  for (const auto& n : nwp) {
    start = std::max(start, n.grid.origin());
    end = std::min(end, n.grid.last());
  }
  start = (start + kTenMinutes - 1) / kTenMinutes * kTenMinutes;
  end = end / kTenMinutes * kTenMinutes;
  if (end <= start) throw Error(ErrorKind::Coverage, "observations and NWP do not overlap");
  return align(observations, nwp, catalog, start, end, bbox_margin_deg);
}

}  // namespace windcast
