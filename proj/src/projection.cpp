#include "windcast/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "windcast/error.hpp"

namespace windcast {
namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

Projection::Projection(LatLon origin, BoundingBox bounds)
    : origin_(origin), bounds_(bounds), cos_lat0_(std::cos(origin.lat * kDegToRad)) {
  if (std::abs(origin.lat) >= 89.0) {
    throw Error(ErrorKind::Validation, "projection origin too close to a pole");
  }
}

Projection Projection::about_centroid(std::span<const LatLon> points, double margin_deg) {
  if (points.empty()) throw Error(ErrorKind::Validation, "projection needs at least one point");
  double lat = 0.0, lon = 0.0;
  BoundingBox box{90.0, -90.0, 180.0, -180.0};
  for (const auto& p : points) {
    lat += p.lat;
    lon += p.lon;
    box.lat_min = std::min(box.lat_min, p.lat);
    box.lat_max = std::max(box.lat_max, p.lat);
    box.lon_min = std::min(box.lon_min, p.lon);
    box.lon_max = std::max(box.lon_max, p.lon);
  }
  const auto n = static_cast<double>(points.size());
  box.lat_min -= margin_deg;
  box.lat_max += margin_deg;
  box.lon_min -= margin_deg;
  box.lon_max += margin_deg;
  return Projection(LatLon{lat / n, lon / n}, box);
}

PlanarKm Projection::forward(const LatLon& p) const noexcept {
  return PlanarKm{kEarthRadiusKm * (p.lon - origin_.lon) * kDegToRad * cos_lat0_,
                  kEarthRadiusKm * (p.lat - origin_.lat) * kDegToRad};
}

LatLon Projection::inverse(const PlanarKm& p) const noexcept {
  return LatLon{origin_.lat + p.y / (kEarthRadiusKm * kDegToRad),
                origin_.lon + p.x / (kEarthRadiusKm * kDegToRad * cos_lat0_)};
}

double distance_km(const Site& a, const Site& b) noexcept {
  return std::hypot(a.xy.x - b.xy.x, a.xy.y - b.xy.y);
}

}  // namespace windcast
