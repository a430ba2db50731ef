#pragma once

#include <span>
#include <string>
#include <vector>

namespace windcast {

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

struct PlanarKm {
  double x = 0.0;  // eastward, km
  double y = 0.0;  // northward, km
};

struct BoundingBox {
  double lat_min = -90.0;
  double lat_max = 90.0;
  double lon_min = -180.0;
  double lon_max = 180.0;

  bool contains(const LatLon& p) const noexcept {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
};

// Equirectangular tangent plane about a reference point. Adequate for
// domains of a few hundred km; distances come out in km.
class Projection {
 public:
  static constexpr double kEarthRadiusKm = 6371.0088;

  Projection() = default;
  Projection(LatLon origin, BoundingBox bounds);

  // Origin at the centroid of the given points; bounds = their extent padded
  // by `margin_deg` on each side.
  static Projection about_centroid(std::span<const LatLon> points, double margin_deg = 0.5);

  PlanarKm forward(const LatLon& p) const noexcept;
  LatLon inverse(const PlanarKm& p) const noexcept;

  const LatLon& origin() const noexcept { return origin_; }
  const BoundingBox& bounds() const noexcept { return bounds_; }

 private:
  LatLon origin_{};
  BoundingBox bounds_{};
  double cos_lat0_ = 1.0;
};

struct Site {
  std::string id;
  LatLon position;
  PlanarKm xy;
};

double distance_km(const Site& a, const Site& b) noexcept;

}  // namespace windcast
