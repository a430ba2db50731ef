// Ingestion, time grids, projection, spline downscaling and alignment.
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "windcast/core_data.hpp"
#include "windcast/error.hpp"
#include "windcast/serialize.hpp"
#include "windcast/spline.hpp"

using namespace windcast;
using windcast::testing::TempDir;

namespace {

const Timestamp kT0 = *parse_iso8601("2020-01-01T00:00:00Z");

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no windcast::Error thrown";
  return ErrorKind::Io;
}

std::string sites_csv() { return "site_id,lat,lon\nA,39.5,-74.0\nB,39.8,-73.4\n"; }

}  // namespace

// =============================================================================
// Time
// =============================================================================

TEST(Time, ParsesUtcForms) {
  EXPECT_EQ(*parse_iso8601("2020-01-01T00:10:00Z"), kT0 + 600);
  EXPECT_EQ(*parse_iso8601("2020-01-01 00:10"), kT0 + 600);
  EXPECT_EQ(*parse_iso8601("2020-01-01T00:10:00+00:00"), kT0 + 600);
  EXPECT_FALSE(parse_iso8601("2020-01-01T00:10:00+01:00"));
  EXPECT_FALSE(parse_iso8601("yesterday"));
  EXPECT_EQ(format_iso8601(kT0 + 3600), "2020-01-01T01:00:00Z");
}

TEST(Time, GridIndexIsBijective) {
  const TimeGrid g(kT0, kTenMinutes, 50);
  for (std::size_t i = 0; i < g.length(); ++i) EXPECT_EQ(*g.index_of(g.at(i)), i);
  EXPECT_FALSE(g.index_of(kT0 + 300));
  EXPECT_FALSE(g.index_of(kT0 - 600));
  EXPECT_FALSE(g.index_of(g.last() + 600));
  EXPECT_THROW(g.at(50), Error);
}

// =============================================================================
// Projection
// =============================================================================

TEST(Projection, RoundTripInsideBoundingBox) {
  const std::vector<LatLon> pts{{39.5, -74.0}, {39.8, -73.4}, {40.1, -74.2}};
  const auto proj = Projection::about_centroid(pts);
  std::mt19937_64 rng(3);
  const auto& b = proj.bounds();
  std::uniform_real_distribution<double> lat(b.lat_min, b.lat_max), lon(b.lon_min, b.lon_max);
  for (int i = 0; i < 1000; ++i) {
    const LatLon p{lat(rng), lon(rng)};
    const LatLon q = proj.inverse(proj.forward(p));
    EXPECT_NEAR(q.lat, p.lat, 1e-9);
    EXPECT_NEAR(q.lon, p.lon, 1e-9);
  }
}

TEST(Projection, DistancesPositiveForDistinctSites) {
  const std::vector<LatLon> pts{{39.5, -74.0}, {39.8, -73.4}};
  const auto proj = Projection::about_centroid(pts);
  const Site a{"A", pts[0], proj.forward(pts[0])};
  const Site b{"B", pts[1], proj.forward(pts[1])};
  EXPECT_GT(distance_km(a, b), 50.0);
  EXPECT_LT(distance_km(a, b), 70.0);
  EXPECT_EQ(distance_km(a, a), 0.0);
}

// =============================================================================
// Spline downscaling
// =============================================================================

TEST(Spline, ConstantSeriesStaysConstant) {
  const std::vector<double> c(8, 4.25);
  for (double v : spline_downscale(c)) EXPECT_NEAR(v, 4.25, 1e-12);
}

TEST(Spline, LinearRampReproducedOffKnot) {
  const std::vector<double> ramp{0, 1, 2, 3};
  const auto fine = spline_downscale(ramp);
  ASSERT_EQ(fine.size(), 19u);
  for (std::size_t i = 0; i < fine.size(); ++i) EXPECT_NEAR(fine[i], static_cast<double>(i) / 6.0, 1e-12);
}

TEST(Spline, ExactAtKnots) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(8.0, 3.0);
  std::vector<double> hourly(30);
  for (auto& v : hourly) v = n(rng);
  const auto fine = spline_downscale(hourly);
  for (std::size_t k = 0; k < hourly.size(); ++k) EXPECT_NEAR(fine[6 * k], hourly[k], 1e-12);
}

TEST(Spline, NaturalBoundary) {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 2, 5, 4};
  const NaturalCubicSpline s(x, y);
  EXPECT_EQ(s.second_derivative_at_knot(0), 0.0);
  EXPECT_EQ(s.second_derivative_at_knot(4), 0.0);
}

TEST(Spline, TooFewKnots) {
  const std::vector<double> three{1, 2, 3};
  EXPECT_EQ(kind_of([&] { spline_downscale(three); }), ErrorKind::InsufficientData);
}

// =============================================================================
// Observation loading
// =============================================================================

TEST(LoadObservations, ContiguousRows) {
  TempDir d("obs");
  const auto p = d.write("o.csv",
                         "timestamp,site_id,wind_speed_ms\n"
                         "2020-01-01T00:00:00Z,A,5\n2020-01-01T00:10:00Z,A,6\n2020-01-01T00:20:00Z,A,7\n");
  const auto obs = load_observations(p);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].values.size(), 3u);
  EXPECT_EQ(obs[0].missing_count(), 0u);
  EXPECT_EQ(*obs[0].values[2], 7.0);
}

TEST(LoadObservations, GapsBecomeMissing) {
  TempDir d("obs");
  const auto p = d.write("o.csv", "timestamp,site_id,wind_speed_ms\n2020-01-01T00:00:00Z,A,5\n2020-01-01T00:30:00Z,A,6\n");
  const auto obs = load_observations(p);
  ASSERT_EQ(obs[0].values.size(), 4u);
  EXPECT_EQ(obs[0].missing_count(), 2u);
  EXPECT_FALSE(obs[0].values[1]);
}

TEST(LoadObservations, RejectsNegativeSpeed) {
  TempDir d("obs");
  const auto p = d.write("o.csv", "timestamp,site_id,wind_speed_ms\n2020-01-01T00:00:00Z,A,-1.0\n");
  EXPECT_EQ(kind_of([&] { load_observations(p); }), ErrorKind::Validation);
}

TEST(LoadObservations, RejectsDuplicateKey) {
  TempDir d("obs");
  const auto p =
      d.write("o.csv", "timestamp,site_id,wind_speed_ms\n2020-01-01T00:00:00Z,A,1\n2020-01-01T00:00:00Z,A,2\n");
  EXPECT_EQ(kind_of([&] { load_observations(p); }), ErrorKind::Conflict);
}

TEST(LoadObservations, MalformedTimestampNamesLine) {
  TempDir d("obs");
  const auto p = d.write("o.csv", "timestamp,site_id,wind_speed_ms\n2020-01-01T00:00:00Z,A,1\nnot-a-time,A,2\n");
  try {
    load_observations(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

// =============================================================================
// NWP loading
// =============================================================================

TEST(LoadNwp, FullDay) {
  TempDir d("nwp");
  const auto p = d.write("n.csv", windcast::testing::nwp_rows("A", kT0, 24, [](int h) { return 5.0 + h; }));
  const auto nwp = load_nwp(p);
  ASSERT_EQ(nwp.size(), 1u);
  EXPECT_EQ(nwp[0].grid.length(), 24u);
  EXPECT_EQ(nwp[0].variables.at("WIND_SPEED").unit, "m/s");
}

TEST(LoadNwp, RejectsHalfHourSpacing) {
  TempDir d("nwp");
  const auto p = d.write("n.csv",
                         "timestamp,site_id,WIND_SPEED,U,V,PRESSURE,TEMP\n"
                         "2020-01-01T00:00:00Z,A,5,1,1,1000,280\n2020-01-01T00:30:00Z,A,5,1,1,1000,280\n");
  EXPECT_EQ(kind_of([&] { load_nwp(p); }), ErrorKind::Grid);
}

TEST(LoadNwp, MissingUNamed) {
  TempDir d("nwp");
  const auto p = d.write("n.csv", "timestamp,site_id,WIND_SPEED,V,PRESSURE,TEMP\n2020-01-01T00:00:00Z,A,5,1,1000,280\n");
  try {
    load_nwp(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
    EXPECT_NE(std::string(e.what()).find("\"U\""), std::string::npos) << e.what();
  }
}

TEST(LoadNwp, UnknownVariableKeptAndFlagged) {
  TempDir d("nwp");
  const auto p = d.write("n.csv",
                         "timestamp,site_id,WIND_SPEED,U,V,PRESSURE,TEMP,CAPE\n"
                         "2020-01-01T00:00:00Z,A,5,1,1,1000,280,12\n2020-01-01T01:00:00Z,A,5,1,1,1000,280,13\n");
  const auto nwp = load_nwp(p);
  ASSERT_TRUE(nwp[0].variables.count("CAPE"));
  EXPECT_FALSE(nwp[0].variables.at("CAPE").recognized);
  EXPECT_TRUE(nwp[0].variables.at("U").recognized);
}

// =============================================================================
// Alignment
// =============================================================================

namespace {

struct Inputs {
  std::vector<ObservationSeries> obs;
  std::vector<NwpSeries> nwp;
  SiteCatalog catalog;
};

Inputs two_site_inputs(const TempDir& d, int nwp_hours) {
  std::string obs = "timestamp,site_id,wind_speed_ms\n";
  for (const char* s : {"A", "B"}) {
    for (int i = 0; i <= 6 * 12; ++i) obs += format_iso8601(kT0 + i * 600) + "," + s + ",7\n";
  }
  const auto speed = [](int h) { return 6.0 + 0.5 * h; };
  const auto nwp = windcast::testing::nwp_rows("A", kT0, nwp_hours, speed) +
                   windcast::testing::nwp_rows("B", kT0, nwp_hours, speed, false);
  return {load_observations(d.write("o.csv", obs)), load_nwp(d.write("n.csv", nwp)),
          load_site_catalog(d.write("s.csv", sites_csv()))};
}

}  // namespace

TEST(Align, FullCoverage) {
  TempDir d("align");
  const auto in = two_site_inputs(d, 13);
  const auto ds = align(in.obs, in.nwp, in.catalog, kT0, kT0 + 12 * kOneHour);
  EXPECT_EQ(ds.length(), 73u);
  for (const auto& o : ds.observations) EXPECT_EQ(o.missing_count(), 0u);
  EXPECT_EQ(ds.nwp_source.at("A"), "A");
  EXPECT_EQ(ds.nwp_source.at("B"), "B");
  EXPECT_EQ(ds.nwp(0, "WIND_SPEED").size(), ds.length());
  EXPECT_EQ(ds.nwp(1, "WIND_SPEED").size(), ds.length());
}

TEST(Align, InterpolantExactAtHourlyKnots) {
  TempDir d("align");
  const auto in = two_site_inputs(d, 13);
  const auto ds = align(in.obs, in.nwp, in.catalog, kT0, kT0 + 12 * kOneHour);
  const auto& s = ds.nwp(0, "WIND_SPEED");
  for (int h = 0; h <= 12; ++h) EXPECT_NEAR(s[static_cast<std::size_t>(6 * h)], 6.0 + 0.5 * h, 1e-10);
}

TEST(Align, ShortNwpIsCoverageError) {
  TempDir d("align");
  const auto in = two_site_inputs(d, 12);  // ends at 11:00
  EXPECT_EQ(kind_of([&] { align(in.obs, in.nwp, in.catalog, kT0, kT0 + 12 * kOneHour); }), ErrorKind::Coverage);
}

TEST(Align, SerializationIsDeterministic) {
  TempDir d("align");
  const auto in = two_site_inputs(d, 13);
  const auto a = align(in.obs, in.nwp, in.catalog, kT0, kT0 + 12 * kOneHour);
  const auto b = align(in.obs, in.nwp, in.catalog, kT0, kT0 + 12 * kOneHour);
  EXPECT_EQ(serialize::to_json(a).dump(), serialize::to_json(b).dump());
}
