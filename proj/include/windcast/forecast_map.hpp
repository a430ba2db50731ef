#pragma once

// Gridded forecast fields from a fitted roll.

#include <vector>

#include "windcast/pipeline.hpp"

namespace windcast::evaluation {

struct Mesh {
  double lat_min = 0.0, lat_max = 0.0;
  double lon_min = 0.0, lon_max = 0.0;
  std::size_t n_lat = 1, n_lon = 1;

  // Row-major nodes, latitude outer. A single node along an axis sits at the
  // axis minimum.
  std::vector<LatLon> nodes() const;
};

struct MapCell {
  LatLon position;
  double mean = 0.0;
  double sd = 0.0;
};

// Predicts every mesh node at `horizon` steps after the roll's issue. Nodes
// that coincide with an observation site share its nugget. Throws Bounds when
// the mesh leaves the dataset's bounding box.
std::vector<MapCell> forecast_map(const pipeline::RollState& state, const features::FeatureContext& ctx,
                                  const Mesh& mesh, std::size_t horizon);

}  // namespace windcast::evaluation
