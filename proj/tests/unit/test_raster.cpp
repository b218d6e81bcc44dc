#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "reactsim/raster.hpp"
#include "reactsim/scenarios.hpp"
#include "scenes.hpp"

using namespace reactsim;
using doctest::Approx;

namespace {

SimState ego_only() {
  SimState s;
  s.agents.push_back({0, {20.0, 30.0, 0.0}, {}, 0.0, AgentKind::vehicle, true});
  return s;
}

SemanticMap lit_lane(LightColor color) {
  Lane l;
  l.id = 1;
  l.centerline = Polyline({{-50, 0}, {50, 0}});
  l.light_id = 1;
  return SemanticMap("m", {l}, {}, {{1, {{0.0, 10.0, color}}}});
}

int count(std::span<const std::uint8_t> p) { return static_cast<int>(std::count(p.begin(), p.end(), 1)); }

}  // namespace

TEST_CASE("lanes render unless their light is red") {
  SimState s;
  s.agents.push_back({0, {0, 0, 0}, {}, 0.0, AgentKind::vehicle, true});
  const Grid green = render(s, lit_lane(LightColor::green), {0, 0, 0}, 0.5, 64, 1.0);
  CHECK(count(green.plane(Channel::lanes)) > 0);
  CHECK(count(green.plane(Channel::agents)) == 0);
  // Pixel centers at |y| <= 1.75 m: 8 rows of 64 pixels.
  CHECK(count(green.plane(Channel::lanes)) == 8 * 64);
  const Grid red = render(s, lit_lane(LightColor::red), {0, 0, 0}, 0.5, 64, 1.0);
  CHECK(count(red.plane(Channel::lanes)) == 0);
  const Grid later = render(s, lit_lane(LightColor::red), {0, 0, 0}, 0.5, 64, 20.0);
  CHECK(count(later.plane(Channel::lanes)) == 8 * 64);
}

TEST_CASE("agent footprint rasterizes to the expected block") {
  SimState s = ego_only();
  s.agents.push_back({1, {0, 0, 0}, {4.0, 2.0}, 0.0, AgentKind::vehicle, true});
  const Grid g = render(s, SemanticMap(), {0, 0, 0}, 0.5, 64, 0.0);
  const auto plane = g.plane(Channel::agents);
  CHECK(count(plane) == 32);
  int rmin = 99, rmax = -1, cmin = 99, cmax = -1;
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      if (g.at(Channel::agents, r, c)) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
    }
  }
  CHECK(cmax - cmin + 1 == 8);
  CHECK(rmax - rmin + 1 == 4);
  CHECK(std::abs((cmin + cmax) / 2.0 + 0.5 - 32) <= 1.0);
  CHECK(std::abs((rmin + rmax) / 2.0 + 0.5 - 32) <= 1.0);
  CHECK(count(g.plane(Channel::ego)) == 0);  // ego is outside this grid
}

TEST_CASE("pixel geometry round trips") {
  Grid g;
  g.width_px = 40;
  g.height_px = 30;
  g.resolution = 0.25;
  g.center = {5, -3, 0.6};
  const Vec2 w = g.pixel_center(7, 11);
  const Vec2 px = g.world_to_pixel(w);
  CHECK(px.x == Approx(11.5));
  CHECK(px.y == Approx(7.5));
}

TEST_CASE("connected components fixed cases") {
  std::vector<std::uint8_t> zero(100, 0);
  CHECK(connected_components(zero, 10, 10).empty());
  std::vector<std::uint8_t> blocks(100, 0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      blocks[static_cast<std::size_t>(r * 10 + c)] = 1;
      blocks[static_cast<std::size_t>((r + 6) * 10 + c + 6)] = 1;
    }
  }
  const auto comps = connected_components(blocks, 10, 10);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].size() == 9);
  CHECK(comps[1].size() == 9);
  CHECK(comps[0].front() == 0);
  std::vector<std::uint8_t> diag(9, 0);
  diag[0] = diag[4] = diag[8] = 1;
  CHECK(connected_components(diag, 3, 3).size() == 1);  // 8-connectivity
  CHECK_THROWS(connected_components(diag, 4, 3));
}

TEST_CASE("connected components match union-find on random planes") {
  std::mt19937_64 gen(99);
  for (double density : {0.1, 0.3, 0.45, 0.6}) {
    std::bernoulli_distribution bit(density);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<std::uint8_t> plane(32 * 32);
      for (auto& v : plane) v = bit(gen) ? 1 : 0;
      const auto got = connected_components(plane, 32, 32);
      CHECK(got == oracle::components(plane, 32, 32));
      std::size_t total = 0;
      for (const auto& c : got) total += c.size();
      CHECK(total == static_cast<std::size_t>(std::count(plane.begin(), plane.end(), 1)));
    }
  }
}

TEST_CASE("min_area_rect recovers rotated rectangles") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const double yaw = 1.5 * u(gen);
    const double hx = 3 + u(gen), hy = 1 + 0.5 * u(gen);
    const Obb truth{{10 * u(gen), 10 * u(gen)}, {hx, hy}, yaw};
    std::vector<Vec2> pts = truth.corners();
    for (int i = 0; i < 30; ++i) pts.push_back(truth.center + rotate({hx * u(gen), hy * u(gen)}, yaw));
    const Obb r = min_area_rect(pts);
    CHECK(r.half_extents.x * r.half_extents.y == Approx(hx * hy).epsilon(1e-9));
    CHECK(std::abs(std::remainder(r.yaw - yaw, std::numbers::pi)) < 1e-9);
    CHECK(r.yaw > -std::numbers::pi / 2);
    CHECK(r.yaw <= std::numbers::pi / 2);

    // Brute-force sweep over orientations never beats it.
    std::vector<Vec2> cloud;
    for (int i = 0; i < 40; ++i) cloud.push_back({5 * u(gen), 2 * u(gen) + u(gen) * u(gen)});
    const Obb best = min_area_rect(cloud);
    double sweep = 1e300;
    for (int k = 0; k < 9000; ++k) {
      const double a = std::numbers::pi / 2 * k / 9000;
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (const Vec2& p : cloud) {
        const Vec2 l = rotate(p, -a);
        x0 = std::min(x0, l.x);
        x1 = std::max(x1, l.x);
        y0 = std::min(y0, l.y);
        y1 = std::max(y1, l.y);
      }
      sweep = std::min(sweep, (x1 - x0) * (y1 - y0));
    }
    CHECK(4 * best.half_extents.x * best.half_extents.y <= sweep + 1e-9);
    CHECK(4 * best.half_extents.x * best.half_extents.y >= sweep * (1 - 1e-3));
  }
}

TEST_CASE("extract_agents on a block and an empty grid") {
  SimState s = ego_only();
  s.agents.push_back({1, {0, 0, 0}, {4.0, 2.0}, 0.0, AgentKind::vehicle, true});
  const Grid g = render(s, SemanticMap(), {0, 0, 0}, 0.5, 64, 0.0);
  const auto found = extract_agents(g);
  REQUIRE(found.size() == 1);
  CHECK(norm(found[0].centroid) <= 0.25);
  CHECK(2 * found[0].bbox.half_extents.x == Approx(4.0).epsilon(0.125));
  CHECK(2 * found[0].bbox.half_extents.y == Approx(2.0).epsilon(0.25));
  CHECK(found[0].pixel_count == 32);
  CHECK(extract_agents(render(ego_only(), SemanticMap(), {0, 0, 0}, 0.5, 64, 0.0)).empty());
}

TEST_CASE("extracted yaw and area follow a rotated agent") {
  const double yaw = std::numbers::pi / 6;
  SimState s = ego_only();
  s.agents.push_back({1, {1.0, -2.0, yaw}, {4.5, 2.0}, 0.0, AgentKind::vehicle, true});
  const auto found = extract_agents(render(s, SemanticMap(), {0, 0, 0}, 0.5, 64, 0.0));
  REQUIRE(found.size() == 1);
  CHECK(std::abs(std::remainder(found[0].bbox.yaw - yaw, std::numbers::pi)) < 5 * std::numbers::pi / 180);
  const double area = 4 * found[0].bbox.half_extents.x * found[0].bbox.half_extents.y;
  CHECK(std::abs(area - 9.0) / 9.0 < 0.15);
}

TEST_CASE("render then extract round trip on separated scenes") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SimState s = scenes::separated_scene(seed, 6, 15.0, 0.5);
    const Grid g = render(s, SemanticMap(), {0, 0, 0}, 0.5, 64, 0.0);
    CHECK(g == render(s, SemanticMap(), {0, 0, 0}, 0.5, 64, 0.0));
    const auto found = extract_agents(g);
    REQUIRE(found.size() == s.agents.size() - 1);
    for (const AgentState& a : s.agents) {
      if (a.id == s.ego_id) continue;
      double best = 1e300;
      for (const auto& f : found) best = std::min(best, distance(f.centroid, a.pose.position()));
      CHECK(best <= 0.5);
    }
  }
}

TEST_CASE("min_pixels filters specks") {
  Grid g;
  g.width_px = g.height_px = 8;
  for (auto& p : g.planes) p.assign(64, 0);
  g.plane(Channel::agents)[0] = 1;
  g.plane(Channel::agents)[1] = 1;
  CHECK(extract_agents(g).empty());
  CHECK(extract_agents(g, 1).size() == 1);
}

TEST_CASE("pgm export") {
  const auto dir = std::filesystem::temp_directory_path() / "reactsim_pgm_test";
  std::filesystem::create_directories(dir);
  SimState s = ego_only();
  const Grid g = render(s, ring_map(), s.ego().pose, 0.5, 16, 0.0);
  write_pgm(g, dir / "scene");
  for (Channel c : kAllChannels) {
    const auto path = dir / ("scene_" + std::string(to_string(c)) + ".pgm");
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    in.get();
    CHECK(magic == "P5");
    CHECK(w == 16);
    CHECK(h == 16);
    CHECK(maxval == 255);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.size() == 256);
  }
  std::filesystem::remove_all(dir);
}
