#pragma once

// Observation / NWP ingestion and alignment onto the common 10-minute grid.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "windcast/projection.hpp"
#include "windcast/timeutil.hpp"

namespace windcast {

// Canonical NWP variable names.
namespace var {
inline constexpr const char* kWindSpeed = "WIND_SPEED";
inline constexpr const char* kU = "U";
inline constexpr const char* kV = "V";
inline constexpr const char* kPressure = "PRESSURE";
inline constexpr const char* kTemperature = "TEMP";
inline constexpr const char* kGust = "WINDGUST";
inline constexpr const char* kHumidity = "HUMIDITY";
}  // namespace var

// Unit of a recognised NWP variable, or nullopt for unknown names.
std::optional<std::string> canonical_unit(const std::string& variable);
// Maps header spellings ("WIND SPEED") onto canonical names.
std::string canonical_variable_name(const std::string& header);
const std::vector<std::string>& mandatory_nwp_variables();

struct ObservationSeries {
  Site site;
  TimeGrid grid;
  std::vector<std::optional<double>> values;  // m/s; nullopt = missing

  std::size_t missing_count() const;
};

struct NwpVariable {
  std::string unit;
  std::vector<double> values;
  bool recognized = true;
};

struct NwpSeries {
  Site site;
  TimeGrid grid;  // hourly
  std::map<std::string, NwpVariable> variables;
};

struct ObservationSchema {
  std::string timestamp_column = "timestamp";
  std::string site_column = "site_id";
  std::string speed_column = "wind_speed_ms";
};

struct NwpSchema {
  std::string timestamp_column = "timestamp";
  std::string site_column = "site_id";
  // Declared units per column; columns not listed get the canonical unit.
  std::map<std::string, std::string> units;
};

// Site id -> position, read from a `site_id,lat,lon` CSV.
using SiteCatalog = std::map<std::string, LatLon>;
SiteCatalog load_site_catalog(const std::string& path);

std::vector<ObservationSeries> load_observations(const std::string& path,
                                                 const ObservationSchema& schema = {});
std::vector<NwpSeries> load_nwp(const std::string& path, const NwpSchema& schema = {});

struct AlignedDataset {
  Projection projection;
  TimeGrid grid;                                // 10-minute target grid
  std::vector<Site> sites;                      // observation sites
  std::vector<ObservationSeries> observations;  // parallel to `sites`, on `grid`
  std::vector<Site> nwp_sites;                  // all NWP grid points
  // NWP grid point id -> variable -> 10-minute interpolant on `grid`.
  std::map<std::string, std::map<std::string, std::vector<double>>> nwp_interp;
  std::map<std::string, std::string> nwp_source;  // observation site id -> NWP grid point id
  std::map<std::string, std::string> units;       // variable -> unit

  std::size_t site_count() const { return sites.size(); }
  std::size_t length() const { return grid.length(); }
  std::size_t site_index(const std::string& id) const;

  bool has_variable(const std::string& variable) const;
  // Interpolated NWP series at the grid point assigned to observation site i.
  const std::vector<double>& nwp(std::size_t site, const std::string& variable) const;
  const std::vector<double>& nwp_at(const std::string& nwp_site_id, const std::string& variable) const;
  std::optional<double> observation(std::size_t site, std::size_t step) const {
    return observations[site].values[step];
  }
};

// Clips everything to [window_start, window_end] on a 10-minute grid and
// downscales hourly NWP with natural cubic splines. Each observation site
// takes its NWP from the nearest grid point in `catalog`.
AlignedDataset align(const std::vector<ObservationSeries>& observations,
                     const std::vector<NwpSeries>& nwp, const SiteCatalog& catalog,
                     Timestamp window_start, Timestamp window_end, double bbox_margin_deg = 0.5);

// Same, spanning the full overlap of the inputs.
AlignedDataset align_full(const std::vector<ObservationSeries>& observations,
                          const std::vector<NwpSeries>& nwp, const SiteCatalog& catalog,
                          double bbox_margin_deg = 0.5);

}  // namespace windcast
