#include "windcast/forecast_map.hpp"

#include <cmath>

#include "windcast/error.hpp"

namespace windcast::evaluation {

std::vector<LatLon> Mesh::nodes() const {
  if (n_lat == 0 || n_lon == 0) throw Error(ErrorKind::Config, "mesh needs at least one node per axis");
  if (lat_max < lat_min || lon_max < lon_min) throw Error(ErrorKind::Config, "mesh bounds are reversed");
  std::vector<LatLon> out;
  out.reserve(n_lat * n_lon);
  for (std::size_t i = 0; i < n_lat; ++i) {
    const double lat = n_lat == 1 ? lat_min : lat_min + (lat_max - lat_min) * static_cast<double>(i) /
                                                            static_cast<double>(n_lat - 1);
    for (std::size_t j = 0; j < n_lon; ++j) {
      const double lon = n_lon == 1 ? lon_min : lon_min + (lon_max - lon_min) * static_cast<double>(j) /
                                                              static_cast<double>(n_lon - 1);
      out.push_back({lat, lon});
    }
  }
  return out;
}

std::vector<MapCell> forecast_map(const pipeline::RollState& state, const features::FeatureContext& ctx,
                                  const Mesh& mesh, std::size_t horizon) {
  const AlignedDataset& ds = ctx.dataset();
  const auto& box = ds.projection.bounds();
  const auto nodes = mesh.nodes();
  for (const auto& p : nodes) {
    if (!box.contains(p)) {
      throw Error(ErrorKind::Bounds, "mesh node (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                                         ") lies outside the dataset bounding box");
    }
  }
  if (state.issue + horizon >= ds.length()) {
    throw Error(ErrorKind::Bounds, "map horizon runs past the data");
  }

  std::vector<pipeline::Target> targets;
  targets.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    pipeline::Target t;
    t.horizon = horizon;
    t.gp_site = -1 - static_cast<int>(i);
    std::optional<std::size_t> site;
    for (std::size_t s = 0; s < ds.site_count(); ++s) {
      if (ds.sites[s].position.lat == nodes[i].lat && ds.sites[s].position.lon == nodes[i].lon) site = s;
    }
    if (site) {
      t.location = features::site_location(ds, *site);
      t.gp_site = static_cast<int>(*site);
    } else {
      t.location = features::location_at(ds, nodes[i]);
    }
    targets.push_back(std::move(t));
  }
  const auto d = pipeline::predict_targets(state, ctx, targets);
  std::vector<MapCell> out;
  out.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.push_back({nodes[i], d.mean(k), std::sqrt(d.variance(k))});
  }
  return out;
}

}  // namespace windcast::evaluation
