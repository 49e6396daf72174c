#include "agentsim/scenario/generator.hpp"

#include "agentsim/error.hpp"
#include "agentsim/metrics/geometry.hpp"
#include "agentsim/scenario/frame.hpp"
#include "agentsim/scenario/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

namespace agentsim
{
namespace
{
constexpr double kPi = std::numbers::pi;
constexpr double kLaneWidth = 3.6;
constexpr double kMaxLateralAccel = 3.0;
constexpr double kHorizon = static_cast<double>(kScenarioSteps - 1) * kDt;

struct Route
{
  Path path;
  bool cyclist_ok = false;
  bool pedestrian = false;
  double stop_s = -1.0;  //!< Arc length of a yield point, < 0 when none.
};

struct Layout
{
  std::vector<MapPolyline> polylines;
  std::vector<Vec2> drivable;
  std::vector<Route> routes;
};

void add_path_polyline(Layout & layout, const Path & path, PolylineType type, double spacing)
{
  layout.polylines.push_back(MapPolyline::make(path.sample(spacing), type));
}

void add_segment_polyline(Layout & layout, Vec2 a, Vec2 b, PolylineType type, double spacing)
{
  const double len = (b - a).norm();
  add_path_polyline(layout, Path::line({a.x, a.y, std::atan2(b.y - a.y, b.x - a.x)}, len), type, spacing);
}

double max_speed_on(const Path & path)
{
  double k = 0.0;
  for (const auto & seg : path.segments()) {
    k = std::max(k, std::abs(seg.curvature));
  }
  return k > 0.0 ? std::sqrt(kMaxLateralAccel / k) : std::numeric_limits<double>::infinity();
}

// Crossing walk: across the road along x = xc, then a quarter turn onto the far side line.
Path crossing_walk(double xc, double half_width, bool from_right_side)
{
  const double leg = 2.0 * half_width - 2.5;
  if (from_right_side) {
    return Path::line({xc, -half_width + 0.5, kPi / 2}, leg).then(kPi / 2, 1.0).then(30.0);
  }
  return Path::line({xc, half_width - 0.5, -kPi / 2}, leg).then(kPi / 2, -1.0).then(30.0);
}

Layout straight_road_layout(Rng & rng)
{
  Layout layout;
  const int lanes = static_cast<int>(rng.uniform_int(1, 2));
  const double hw = lanes * kLaneWidth;
  const double half_len = 150.0;
  const Path base = Path::line({-half_len, 0.0, 0.0}, 2.0 * half_len);
  const bool crosswalk = rng.bernoulli(0.6);
  const double cx = rng.uniform(-20.0, 40.0);

  for (int i = 0; i < lanes; ++i) {
    const double d = (i + 0.5) * kLaneWidth;
    Route fwd{base.offset(-d), i == lanes - 1, false, crosswalk ? cx - 5.5 + half_len : -1.0};
    Route bwd{base.reversed().offset(-d), i == lanes - 1, false, crosswalk ? half_len - (cx + 5.5) : -1.0};
    add_path_polyline(layout, fwd.path, PolylineType::lane_center, 2.0);
    add_path_polyline(layout, bwd.path, PolylineType::lane_center, 2.0);
    layout.routes.push_back(std::move(fwd));
    layout.routes.push_back(std::move(bwd));
  }
  add_path_polyline(layout, base.offset(-hw), PolylineType::road_edge, 5.0);
  add_path_polyline(layout, base.offset(hw), PolylineType::road_edge, 5.0);
  if (crosswalk) {
    add_segment_polyline(layout, {cx, -hw}, {cx, hw}, PolylineType::crosswalk, 2.0);
    add_segment_polyline(layout, {cx - 4.0, -hw}, {cx - 4.0, 0.0}, PolylineType::stop_line, 1.0);
    add_segment_polyline(layout, {cx + 4.0, hw}, {cx + 4.0, 0.0}, PolylineType::stop_line, 1.0);
    layout.routes.push_back({crossing_walk(cx, hw, true), false, true});
    layout.routes.push_back({crossing_walk(cx, hw, false), false, true});
  }
  layout.drivable = {{-half_len, -hw}, {half_len, -hw}, {half_len, hw}, {-half_len, hw}};
  return layout;
}

Layout curve_layout(Rng & rng)
{
  Layout layout;
  const int lanes = static_cast<int>(rng.uniform_int(1, 2));
  const double hw = lanes * kLaneWidth;
  const double radius = rng.uniform(30.0, 90.0);
  const double sweep = rng.uniform(0.8, 1.9);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  Path base = Path::line({-80.0, 0.0, 0.0}, 80.0);
  base.then(radius * sweep, sign / radius).then(80.0);

  for (int i = 0; i < lanes; ++i) {
    const double d = (i + 0.5) * kLaneWidth;
    Route fwd{base.offset(-d), i == lanes - 1};
    Route bwd{base.reversed().offset(-d), i == lanes - 1};
    add_path_polyline(layout, fwd.path, PolylineType::lane_center, 2.0);
    add_path_polyline(layout, bwd.path, PolylineType::lane_center, 2.0);
    layout.routes.push_back(std::move(fwd));
    layout.routes.push_back(std::move(bwd));
  }
  const Path right = base.offset(-hw);
  const Path left = base.offset(hw);
  add_path_polyline(layout, right, PolylineType::road_edge, 5.0);
  add_path_polyline(layout, left, PolylineType::road_edge, 5.0);
  layout.drivable = right.sample(2.0);
  auto back = left.sample(2.0);
  layout.drivable.insert(layout.drivable.end(), back.rbegin(), back.rend());
  return layout;
}

Layout intersection_layout(Rng & rng)
{
  Layout layout;
  const int lanes = static_cast<int>(rng.uniform_int(1, 2));
  const double hw = lanes * kLaneWidth;
  const double arm = 90.0;
  const double chamfer = 8.0;      // corner cut; also where right turns begin
  const double left_start = 4.0;   // left turns begin this far before the box
  const double crosswalk_x = -hw - chamfer - 2.0;
  const double stop_line_x = -hw - 13.0;
  const double stop_s = arm - hw - 16.0;

  // Everything is built for the approach travelling +x from the west arm, then rotated.
  std::vector<Route> local_routes;
  std::vector<std::pair<Path, PolylineType>> local_lines;
  for (int i = 0; i < lanes; ++i) {
    const double y = -(i + 0.5) * kLaneWidth;
    local_routes.push_back({Path::line({-arm, y, 0.0}, 2.0 * arm), i == lanes - 1, false, stop_s});
    local_lines.emplace_back(local_routes.back().path, PolylineType::lane_center);
    if (i == 0) {
      const double r = hw + left_start + (i + 0.5) * kLaneWidth;
      Path p = Path::line({-arm, y, 0.0}, arm - hw - left_start);
      p.then(r * kPi / 2, 1.0 / r).then(arm - hw - left_start);
      local_lines.emplace_back(Path::arc({-hw - left_start, y, 0.0}, r * kPi / 2, 1.0 / r), PolylineType::lane_center);
      local_routes.push_back({std::move(p), false, false, stop_s});
    }
    if (i == lanes - 1) {
      const double r = hw + chamfer - (i + 0.5) * kLaneWidth;
      Path p = Path::line({-arm, y, 0.0}, arm - hw - chamfer);
      p.then(r * kPi / 2, -1.0 / r).then(arm - hw - chamfer);
      local_lines.emplace_back(Path::arc({-hw - chamfer, y, 0.0}, r * kPi / 2, -1.0 / r), PolylineType::lane_center);
      local_routes.push_back({std::move(p), true, false, stop_s});
    }
  }
  local_routes.push_back({crossing_walk(crosswalk_x, hw, true), false, true});
  local_routes.push_back({crossing_walk(crosswalk_x, hw, false), false, true});

  for (int k = 0; k < 4; ++k) {
    const Frame rot({0.0, 0.0, k * kPi / 2});
    for (const auto & r : local_routes) {
      layout.routes.push_back({r.path.transformed(rot), r.cyclist_ok, r.pedestrian, r.stop_s});
    }
    for (const auto & [p, type] : local_lines) {
      add_path_polyline(layout, p.transformed(rot), type, 2.0);
    }
    add_segment_polyline(
      layout, rot.to_global(Vec2{crosswalk_x, -hw}), rot.to_global(Vec2{crosswalk_x, hw}), PolylineType::crosswalk, 2.0);
    add_segment_polyline(
      layout, rot.to_global(Vec2{stop_line_x, -hw}), rot.to_global(Vec2{stop_line_x, 0.0}), PolylineType::stop_line, 1.0);
  }

  // Plus shape with chamfered inner corners, counter-clockwise, starting on the east arm.
  const double a = arm;
  const double c = hw + chamfer;
  layout.drivable = {{a, -hw}, {a, hw}, {c, hw}, {hw, c}, {hw, a}, {-hw, a}, {-hw, c}, {-c, hw}, {-a, hw},
    {-a, -hw}, {-c, -hw}, {-hw, -c}, {-hw, -a}, {hw, -a}, {hw, -c}, {c, -hw}};
  for (std::size_t i = 0; i < layout.drivable.size(); ++i) {
    add_segment_polyline(
      layout, layout.drivable[i], layout.drivable[(i + 1) % layout.drivable.size()], PolylineType::road_edge, 5.0);
  }
  return layout;
}

struct Candidate
{
  AgentCategory category;
  double length;
  double width;
};

std::optional<SpeedProfile> yield_profile(double v0, double v_go, double stop_s, Rng & rng, double & s0)
{
  // Either approach and stop, or start stopped; then wait and pull away.
  const double a_go = rng.uniform(1.2, 2.5);
  const double wait = rng.uniform(0.8, 4.0);
  std::vector<std::pair<double, double>> knots;
  double t_stop = 0.0;
  if (rng.bernoulli(0.3)) {
    s0 = stop_s;
    knots.emplace_back(0.0, 0.0);
  } else {
    const double cruise = rng.uniform(0.0, 2.5);
    const double a_stop = rng.uniform(1.5, 3.0);
    t_stop = cruise + v0 / a_stop;
    s0 = stop_s - v0 * cruise - v0 * v0 / (2.0 * a_stop);
    knots.emplace_back(0.0, v0);
    if (cruise > 0.0) {
      knots.emplace_back(cruise, v0);
    }
    knots.emplace_back(t_stop, 0.0);
  }
  if (s0 < 0.0 || t_stop > 7.0) {
    return std::nullopt;
  }
  const double t_go = t_stop + wait;
  knots.emplace_back(t_go, 0.0);
  knots.emplace_back(t_go + v_go / a_go, v_go);
  return SpeedProfile(std::move(knots));
}

std::optional<AgentTrack> try_place(
  const Layout & layout, const GeneratorConfig & cfg, Rng & rng, bool is_adv, const std::vector<AgentTrack> & placed,
  double z, const std::string & id_prefix)
{
  // Category first, then a compatible route.
  AgentCategory category = AgentCategory::vehicle;
  if (!is_adv) {
    const double u = rng.uniform();
    if (u < cfg.pedestrian_fraction) {
      category = AgentCategory::pedestrian;
    } else if (u < cfg.pedestrian_fraction + cfg.cyclist_fraction) {
      category = AgentCategory::cyclist;
    }
  }
  std::vector<const Route *> options;
  for (const auto & r : layout.routes) {
    const bool ok = category == AgentCategory::pedestrian ? r.pedestrian
                    : category == AgentCategory::cyclist  ? (r.cyclist_ok && !r.pedestrian)
                                                          : !r.pedestrian;
    if (ok) {
      options.push_back(&r);
    }
  }
  if (options.empty()) {
    return std::nullopt;
  }
  const Route & route = *options[rng.below(options.size())];

  const SpeedRange range = category == AgentCategory::pedestrian ? cfg.pedestrian_speed
                           : category == AgentCategory::cyclist  ? cfg.cyclist_speed
                                                                 : cfg.vehicle_speed;
  const double vmax = std::min(range.max, max_speed_on(route.path));
  if (vmax < range.min) {
    return std::nullopt;
  }
  auto draw_speed = [&] { return range.min == vmax ? vmax : rng.uniform(range.min, vmax); };

  double length = 0.0;
  double width = 0.0;
  switch (category) {
    case AgentCategory::vehicle:
      length = rng.uniform(4.0, 5.2);
      width = rng.uniform(1.8, 2.1);
      break;
    case AgentCategory::cyclist:
      length = rng.uniform(1.6, 1.9);
      width = rng.uniform(0.6, 0.8);
      break;
    case AgentCategory::pedestrian:
      length = rng.uniform(0.5, 0.7);
      width = rng.uniform(0.5, 0.7);
      break;
  }

  std::optional<SpeedProfile> profile;
  double s0 = -1.0;
  const double behaviour = cfg.varied_behaviors ? rng.uniform() : 0.0;
  const bool can_yield = route.stop_s > 0.0 && category != AgentCategory::pedestrian;
  if (cfg.varied_behaviors && can_yield && behaviour < 0.35) {
    profile = yield_profile(draw_speed(), draw_speed(), route.stop_s, rng, s0);
  } else if (cfg.varied_behaviors && behaviour < 0.65) {
    const double v0 = draw_speed();
    const double v1 = draw_speed();
    const double t0 = rng.uniform(0.5, 6.0);
    const double accel = category == AgentCategory::pedestrian ? 0.5 : rng.uniform(1.0, 2.5);
    const double dur = std::max(std::abs(v1 - v0) / accel, 0.1);
    profile = SpeedProfile({{0.0, v0}, {t0, v0}, {t0 + dur, v1}});
  } else {
    profile = SpeedProfile::constant(draw_speed());
  }
  if (!profile) {
    return std::nullopt;
  }
  const double travel = profile->distance(kHorizon);
  if (s0 < 0.0) {
    const double slack = route.path.length() - travel - 1.0;
    if (slack < 0.0) {
      return std::nullopt;
    }
    s0 = rng.uniform(0.0, slack);
  } else if (s0 + travel > route.path.length() - 1.0) {
    return std::nullopt;
  }

  AgentTrack track;
  track.start_step = 0;
  track.history_len = kHistorySteps;
  track.states.reserve(kScenarioSteps);
  for (std::size_t k = 0; k < kScenarioSteps; ++k) {
    const double t = static_cast<double>(k) * kDt;
    const Pose2 pose = route.path.pose_at(s0 + profile->distance(t));
    const double v = profile->speed(t);
    if (!point_in_polygon({pose.x, pose.y}, layout.drivable)) {
      return std::nullopt;
    }
    track.states.push_back(make_state(
      pose.x, pose.y, z, pose.heading, v * std::cos(pose.heading), v * std::sin(pose.heading), length, width,
      category));
  }
  // Keep clear of every agent already placed.
  const double own = 0.5 * std::hypot(length, width);
  for (const auto & other : placed) {
    const double clearance = own + 0.5 * std::hypot(other.states[0].length, other.states[0].width) + 0.5;
    for (std::size_t k = 0; k < kScenarioSteps; ++k) {
      if ((track.states[k].position() - other.states[k].position()).norm() < clearance) {
        return std::nullopt;
      }
    }
  }
  const char * tag = category == AgentCategory::vehicle ? "veh" : category == AgentCategory::cyclist ? "cyc" : "ped";
  track.agent_id = id_prefix + tag + "_" + std::to_string(placed.size());
  return track;
}
}  // namespace

std::string_view to_string(ScenarioTemplate t)
{
  switch (t) {
    case ScenarioTemplate::straight_road:
      return "straight_road";
    case ScenarioTemplate::curve:
      return "curve";
    case ScenarioTemplate::four_way_intersection:
      return "four_way_intersection";
  }
  return "unknown";
}

void GeneratorConfig::validate() const
{
  if (scenario_count() == 0) {
    throw ValidationError("generator: no scenarios requested");
  }
  if (min_agents < 2 || min_agents > max_agents) {
    throw ValidationError("generator: need 2 <= min_agents <= max_agents");
  }
  if (max_agents > agent_cap) {
    throw ValidationError(
      "generator: max_agents " + std::to_string(max_agents) + " exceeds agent cap " + std::to_string(agent_cap));
  }
  for (const SpeedRange * r : {&vehicle_speed, &cyclist_speed, &pedestrian_speed}) {
    if (!(r->min > 0.0) || r->max < r->min) {
      throw ValidationError("generator: speed ranges need 0 < min <= max");
    }
  }
  if (pedestrian_fraction < 0.0 || cyclist_fraction < 0.0 || pedestrian_fraction + cyclist_fraction > 1.0) {
    throw ValidationError("generator: category fractions must lie in [0, 1] and sum to at most 1");
  }
}

Scenario generate_scenario(ScenarioTemplate type, const GeneratorConfig & config, Rng & rng, std::string scenario_id)
{
  config.validate();
  for (int layout_try = 0; layout_try < 50; ++layout_try) {
    Layout layout = type == ScenarioTemplate::straight_road ? straight_road_layout(rng)
                    : type == ScenarioTemplate::curve       ? curve_layout(rng)
                                                            : intersection_layout(rng);
    const auto wanted = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(config.min_agents), static_cast<std::int64_t>(config.max_agents)));
    const double z = rng.uniform(0.0, 3.0);
    std::vector<AgentTrack> tracks;
    for (int attempt = 0; attempt < 400 && tracks.size() < wanted; ++attempt) {
      if (auto t = try_place(layout, config, rng, tracks.empty(), tracks, z, "")) {
        tracks.push_back(std::move(*t));
      }
    }
    if (tracks.size() < config.min_agents) {
      continue;
    }

    Scenario s;
    s.scenario_id = std::move(scenario_id);
    s.adv_id = tracks.front().agent_id;
    Frame place;
    if (config.random_pose) {
      place = Frame({rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0), rng.uniform(-kPi, kPi)});
    }
    for (auto & pl : layout.polylines) {
      std::vector<Vec2> pts;
      for (const auto & p : pl.points) {
        pts.push_back(place.to_global(p));
      }
      s.polylines.push_back(MapPolyline::make(std::move(pts), pl.type));
    }
    for (const auto & p : layout.drivable) {
      s.drivable_area.push_back(place.to_global(p));
    }
    for (auto & t : tracks) {
      for (auto & st : t.states) {
        st = place.to_global(st);
      }
    }
    s.tracks = std::move(tracks);
    validate_scenario(s, config.agent_cap);
    return s;
  }
  throw Error("generator: could not place " + std::to_string(config.min_agents) + " agents in a " +
              std::string(to_string(type)) + " scene");
}

std::vector<Scenario> generate_synthetic_corpus(const GeneratorConfig & config, std::uint64_t seed)
{
  config.validate();
  std::vector<ScenarioTemplate> order;
  order.insert(order.end(), config.straight_road, ScenarioTemplate::straight_road);
  order.insert(order.end(), config.curve, ScenarioTemplate::curve);
  order.insert(order.end(), config.four_way_intersection, ScenarioTemplate::four_way_intersection);
  // Interleave templates so any prefix of the corpus mixes them.
  Rng shuffle = Rng::stream(seed, {0x5348554646ULL});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[shuffle.below(i)]);
  }
  std::vector<Scenario> out;
  out.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(i)});
    char id[64];
    std::snprintf(id, sizeof id, "syn%llu_%04zu_%s", static_cast<unsigned long long>(seed), i,
      std::string(to_string(order[i])).c_str());
    out.push_back(generate_scenario(order[i], config, rng, id));
  }
  return out;
}
}  // namespace agentsim
