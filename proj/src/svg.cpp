#include "reactsim/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>

#include "reactsim/errors.hpp"

namespace reactsim {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf) == "-0.00" ? "0.00" : buf;
}

struct Bounds {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void add(const Vec2& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

// Scene bounds from the agents; the map only contributes near them so long roads do not shrink
// the view to nothing.
Bounds scene_bounds(const Episode& e) {
  Bounds b;
  for (const SimState& s : e.states) {
    for (const AgentState& a : s.agents) {
      for (const Vec2& c : a.footprint().corners()) b.add(c);
    }
  }
  constexpr double margin = 20.0;
  b.min_x -= margin;
  b.min_y -= margin;
  b.max_x += margin;
  b.max_y += margin;
  return b;
}

// World y points up; the group transform flips it for SVG.
std::string header(const Bounds& b) {
  const double w = b.max_x - b.min_x;
  const double h = b.max_y - b.min_y;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + num(w) + " " + num(h) +
                    "\" width=\"" + num(w * 4) + "\" height=\"" + num(h * 4) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"#f4f4f4\"/>\n";
  out += "<g transform=\"matrix(1 0 0 -1 " + num(-b.min_x) + " " + num(b.max_y) + ")\">\n";
  return out;
}

std::string points_attr(std::span<const Vec2> pts) {
  std::string out;
  for (const Vec2& p : pts) {
    if (!out.empty()) out += ' ';
    out += num(p.x) + "," + num(p.y);
  }
  return out;
}

std::string map_layer(const SemanticMap* map, double time) {
  if (map == nullptr) return {};
  std::string out;
  for (const Crosswalk& c : map->crosswalks()) {
    out += "<polygon points=\"" + points_attr(c.polygon) + "\" fill=\"#dddddd\" stroke=\"none\"/>\n";
  }
  for (const Lane& lane : map->lanes()) {
    const auto& pts = lane.centerline.points();
    out += "<polyline points=\"" + points_attr(pts) + "\" fill=\"none\" stroke=\"#c8c8c8\" stroke-width=\"" +
           num(lane.width) + "\" stroke-linejoin=\"round\"/>\n";
    const char* color = map->lane_open(lane, time) ? "#888888" : "#d03030";
    out += "<polyline points=\"" + points_attr(pts) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"0.2\" stroke-dasharray=\"1 1\"/>\n";
  }
  return out;
}

std::string agent_rect(const AgentState& a, bool ego) {
  const auto corners = a.footprint().corners();
  std::string out = "<polygon points=\"" + points_attr(corners) + "\" fill=\"" + (ego ? "#2060d0" : "#e08020") +
                    "\" stroke=\"#202020\" stroke-width=\"0.15\"" + (a.active ? "" : " fill-opacity=\"0.3\"") +
                    "/>\n";
  const Vec2 nose = a.pose.to_world({a.extent.length / 2.0, 0.0});
  out += "<line x1=\"" + num(a.pose.x) + "\" y1=\"" + num(a.pose.y) + "\" x2=\"" + num(nose.x) + "\" y2=\"" +
         num(nose.y) + "\" stroke=\"#ffffff\" stroke-width=\"0.2\"/>\n";
  return out;
}

std::string trails(const Episode& e, std::size_t upto) {
  std::map<AgentId, std::vector<Vec2>> tracks;
  for (std::size_t k = 0; k <= upto; ++k) {
    for (const AgentState& a : e.states[k].agents) {
      if (a.active) tracks[a.id].push_back(a.pose.position());
    }
  }
  const AgentId ego = e.states.front().ego_id;
  std::string out;
  for (const auto& [id, pts] : tracks) {
    if (pts.size() < 2) continue;
    out += "<polyline points=\"" + points_attr(pts) + "\" fill=\"none\" stroke=\"" +
           (id == ego ? "#2060d0" : "#e08020") + "\" stroke-width=\"0.3\" stroke-opacity=\"0.6\"/>\n";
  }
  return out;
}

constexpr const char* kFooter = "</g>\n</svg>\n";

}  // namespace

std::string svg_frame(const Episode& e, std::size_t offset, const SemanticMap* map) {
  if (offset >= e.states.size()) throw DomainError("frame offset out of range");
  const SimState& s = e.states[offset];
  std::string out = header(scene_bounds(e));
  out += map_layer(map, e.dt * static_cast<double>(s.step_index));
  out += trails(e, offset);
  for (const AgentState& a : s.agents) {
    if (a.id != s.ego_id) out += agent_rect(a, false);
  }
  out += agent_rect(s.ego(), true);
  return out + kFooter;
}

std::string svg_overview(const Episode& e, const SemanticMap* map) {
  if (e.states.empty()) throw DomainError("empty episode");
  std::string out = header(scene_bounds(e));
  out += map_layer(map, e.dt * static_cast<double>(e.states.front().step_index));
  out += trails(e, e.states.size() - 1);
  const SimState& first = e.states.front();
  for (const AgentState& a : first.agents) out += agent_rect(a, a.id == first.ego_id);
  return out + kFooter;
}

}  // namespace reactsim
