#include "maad/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maad/dataio.hpp"

namespace maad::datagen {

namespace fs = std::filesystem;
using core::kDt;
using nlohmann::ordered_json;

VehicleState step_kinematics(const VehicleState& state, const ControlCommand& cmd, double dt,
                             double wheelbase) {
  VehicleState next;
  next.x = state.x + state.speed * std::cos(state.heading) * dt;
  next.y = state.y + state.speed * std::sin(state.heading) * dt;
  next.heading = wrap_angle(state.heading + state.speed / wheelbase * std::tan(cmd.steer) * dt);
  next.speed = std::max(0.0, state.speed + cmd.accel * dt);
  return next;
}

namespace {

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// inverse of smoothstep on [0,1], bisection
double smoothstep_inv(double y) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (smoothstep(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double lateral_at(const LateralProfile& p, double t) {
  switch (p.kind) {
    case LateralKind::None:
      return 0.0;
    case LateralKind::Sine: {
      const double end = p.t0 + p.cycles * p.period;
      if (t < p.t0 || t > end) return 0.0;
      return p.amp * std::sin(2.0 * M_PI * (t - p.t0) / p.period);
    }
    case LateralKind::Bump: {
      if (t < p.t0 || t > p.t0 + p.dur) return 0.0;
      const double s = std::sin(M_PI * (t - p.t0) / p.dur);
      return p.amp * s * s;
    }
    case LateralKind::RampHold: {
      if (t < p.t0) return 0.0;
      return p.amp * smoothstep((t - p.t0) / p.dur);
    }
    case LateralKind::RampHoldReturn: {
      if (t < p.t0) return 0.0;
      const double up_end = p.t0 + p.dur;
      const double hold_end = up_end + p.hold;
      if (t < up_end) return p.amp * smoothstep((t - p.t0) / p.dur);
      if (t < hold_end) return p.amp;
      return p.amp * (1.0 - smoothstep((t - hold_end) / p.dur));
    }
  }
  return 0.0;
}

double speed_at(const std::vector<SpeedKnot>& knots, double t) {
  if (knots.empty()) return 0.0;
  if (t <= knots.front().t) return knots.front().v;
  for (size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].t) {
      const double span = knots[i].t - knots[i - 1].t;
      const double u = span > 0.0 ? (t - knots[i - 1].t) / span : 1.0;
      return knots[i - 1].v + u * (knots[i].v - knots[i - 1].v);
    }
  }
  return knots.back().v;
}

// ---------------------------------------------------------------------------
// worlds

namespace {

constexpr double kLaneWidth = 3.5;

std::vector<Vec2> line_points(Vec2 a, Vec2 b, double step = 5.0) {
  const double len = (b - a).norm();
  const int n = std::max(1, int(std::ceil(len / step)));
  std::vector<Vec2> pts;
  pts.reserve(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) pts.push_back(a + (b - a) * (double(i) / n));
  return pts;
}

// CCW if a1 > a0 (degrees), CW otherwise
std::vector<Vec2> arc_points(Vec2 center, double radius, double a0_deg, double a1_deg,
                             double step = 2.5) {
  const double a0 = a0_deg * M_PI / 180.0, a1 = a1_deg * M_PI / 180.0;
  const double arc_len = std::abs(a1 - a0) * radius;
  const int n = std::max(2, int(std::ceil(arc_len / step)));
  std::vector<Vec2> pts;
  pts.reserve(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * double(i) / n;
    pts.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
  }
  return pts;
}

core::Lane lane(std::string id, std::vector<Vec2> pts, std::vector<std::string> successors = {},
                std::optional<std::string> left = std::nullopt,
                std::optional<std::string> right = std::nullopt) {
  core::Lane l;
  l.id = std::move(id);
  l.centerline = std::move(pts);
  l.successors = std::move(successors);
  l.left_neighbor = std::move(left);
  l.right_neighbor = std::move(right);
  return l;
}

void fill_predecessors(core::LaneGraph& g) {
  for (auto& l : g.lanes)
    for (auto& other : g.lanes)
      for (const auto& succ : other.successors)
        if (succ == l.id) l.predecessors.push_back(other.id);
}

core::LaneGraph straight_world() {
  core::LaneGraph g;
  auto seg = [](double y, double x0, double x1) { return line_points({x0, y}, {x1, y}); };
  g.lanes.push_back(lane("f0a", seg(1.75, -200, 0), {"f0b"}, "f1a", std::nullopt));
  g.lanes.push_back(lane("f0b", seg(1.75, 0, 200), {}, "f1b", std::nullopt));
  g.lanes.push_back(lane("f1a", seg(5.25, -200, 0), {"f1b"}, std::nullopt, "f0a"));
  g.lanes.push_back(lane("f1b", seg(5.25, 0, 200), {}, std::nullopt, "f0b"));
  g.lanes.push_back(lane("o0a", seg(-1.75, 200, 0), {"o0b"}, "o1a", std::nullopt));
  g.lanes.push_back(lane("o0b", seg(-1.75, 0, -200), {}, "o1b", std::nullopt));
  g.lanes.push_back(lane("o1a", seg(-5.25, 200, 0), {"o1b"}, std::nullopt, "o0a"));
  g.lanes.push_back(lane("o1b", seg(-5.25, 0, -200), {}, std::nullopt, "o0b"));
  fill_predecessors(g);
  return g;
}

core::LaneGraph curve_world() {
  core::LaneGraph g;
  // CCW ring road segment spanning -60..60 degrees; left of travel is inward
  g.lanes.push_back(lane("c0a", arc_points({0, 0}, 80.0, -60, 0), {"c0b"}, "c1a", std::nullopt));
  g.lanes.push_back(lane("c0b", arc_points({0, 0}, 80.0, 0, 60), {}, "c1b", std::nullopt));
  g.lanes.push_back(lane("c1a", arc_points({0, 0}, 76.5, -60, 0), {"c1b"}, std::nullopt, "c0a"));
  g.lanes.push_back(lane("c1b", arc_points({0, 0}, 76.5, 0, 60), {}, std::nullopt, "c0b"));
  g.lanes.push_back(lane("co0a", arc_points({0, 0}, 83.5, 60, 0), {"co0b"}));
  g.lanes.push_back(lane("co0b", arc_points({0, 0}, 83.5, 0, -60), {}));
  fill_predecessors(g);
  return g;
}

core::LaneGraph junction_world(bool four_way) {
  core::LaneGraph g;
  const double h = kLaneWidth / 2.0;  // 1.75
  // west-east road
  g.lanes.push_back(lane("we_in", line_points({-150, -h}, {-10, -h}),
                         four_way ? std::vector<std::string>{"we_through", "we_left", "we_right"}
                                  : std::vector<std::string>{"we_through", "we_left"}));
  g.lanes.push_back(lane("we_through", line_points({-10, -h}, {10, -h}, 2.5), {"we_out"}));
  g.lanes.push_back(lane("we_out", line_points({10, -h}, {150, -h})));
  g.lanes.push_back(lane("we_left", arc_points({-10, 10}, 11.75, -90, 0), {"n_out"}));
  g.lanes.push_back(lane("ew_in", line_points({150, h}, {10, h}),
                         four_way ? std::vector<std::string>{"ew_through", "ew_right", "ew_left"}
                                  : std::vector<std::string>{"ew_through", "ew_right"}));
  g.lanes.push_back(lane("ew_through", line_points({10, h}, {-10, h}, 2.5), {"ew_out"}));
  g.lanes.push_back(lane("ew_out", line_points({-10, h}, {-150, h})));
  g.lanes.push_back(lane("ew_right", arc_points({10, 10}, 8.25, -90, -180), {"n_out"}));
  // north stub
  g.lanes.push_back(lane("n_out", line_points({h, 10}, {h, 150})));
  g.lanes.push_back(lane("s_in", line_points({-h, 150}, {-h, 10}),
                         four_way ? std::vector<std::string>{"s_left", "s_right", "s_through"}
                                  : std::vector<std::string>{"s_left", "s_right"}));
  g.lanes.push_back(lane("s_left", arc_points({10, 10}, 11.75, 180, 270), {"we_out"}));
  g.lanes.push_back(lane("s_right", arc_points({-10, 10}, 8.25, 0, -90), {"ew_out"}));
  if (four_way) {
    g.lanes.push_back(lane("we_right", arc_points({-10, -10}, 8.25, 90, 0), {"s_out"}));
    g.lanes.push_back(lane("ew_left", arc_points({10, -10}, 11.75, 90, 180), {"s_out"}));
    g.lanes.push_back(lane("s_through", line_points({-h, 10}, {-h, -10}, 2.5), {"s_out"}));
    g.lanes.push_back(lane("s_out", line_points({-h, -10}, {-h, -150})));
    g.lanes.push_back(lane("n_in", line_points({h, -150}, {h, -10}),
                           {"n_through", "n_left", "n_right"}));
    g.lanes.push_back(lane("n_through", line_points({h, -10}, {h, 10}, 2.5), {"n_out"}));
    g.lanes.push_back(lane("n_left", arc_points({-10, -10}, 11.75, 0, 90), {"ew_out"}));
    g.lanes.push_back(lane("n_right", arc_points({10, -10}, 8.25, 180, 90), {"we_out"}));
  }
  fill_predecessors(g);
  return g;
}

}  // namespace

const std::vector<std::string>& world_template_ids() {
  static const std::vector<std::string> ids = {"straight", "curve", "t_intersection", "crossing"};
  return ids;
}

core::LaneGraph make_world_lanes(const std::string& template_id) {
  if (template_id == "straight") return straight_world();
  if (template_id == "curve") return curve_world();
  if (template_id == "t_intersection") return junction_world(false);
  if (template_id == "crossing") return junction_world(true);
  throw ConfigError("unknown world template '" + template_id + "'");
}

// ---------------------------------------------------------------------------
// route polylines

namespace {

class Polyline {
 public:
  explicit Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    cum_.resize(pts_.size(), 0.0);
    for (size_t i = 1; i < pts_.size(); ++i)
      cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
  }

  double length() const { return cum_.back(); }

  Vec2 point_at(double s) const {
    const auto [i, u] = locate(s);
    return pts_[i] + (pts_[i + 1] - pts_[i]) * u;
  }

  Vec2 direction_at(double s) const {
    const auto [i, u] = locate(s);
    (void)u;
    return (pts_[i + 1] - pts_[i]).normalized();
  }

 private:
  std::pair<size_t, double> locate(double s) const {
    s = std::clamp(s, 0.0, length());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    size_t i = it == cum_.begin() ? 0 : size_t(it - cum_.begin()) - 1;
    i = std::min(i, pts_.size() - 2);
    const double seg = cum_[i + 1] - cum_[i];
    return {i, seg > 0.0 ? (s - cum_[i]) / seg : 0.0};
  }

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

Polyline build_route(const core::LaneGraph& lanes, const std::vector<std::string>& route,
                     const std::string& subclass) {
  std::vector<Vec2> pts;
  for (const auto& id : route) {
    const core::Lane* l = lanes.find(id);
    if (l == nullptr)
      throw InfeasibleScript("script '" + subclass + "' references lane '" + id +
                             "' absent from the world");
    for (const auto& p : l->centerline) {
      if (!pts.empty() && (p - pts.back()).norm() < 1e-9) continue;
      pts.push_back(p);
    }
  }
  if (pts.size() < 2) throw InfeasibleScript("route of '" + subclass + "' is degenerate");
  return Polyline(std::move(pts));
}

}  // namespace

// ---------------------------------------------------------------------------
// scenario builders

namespace {

struct LabelSpan {
  double t0, t1;
  core::LabelCategory cat;
  std::string subclass;
};

// converts second-spans into frame intervals covering [0, frames)
std::vector<LabelInterval> spans_to_intervals(const std::vector<LabelSpan>& spans, int frames) {
  std::vector<LabelInterval> out;
  int cursor = 0;
  for (size_t i = 0; i < spans.size(); ++i) {
    int end = i + 1 == spans.size() ? frames
                                    : std::clamp(int(std::lround(spans[i].t1 / kDt)), cursor, frames);
    if (end <= cursor && i + 1 != spans.size()) continue;
    out.push_back(LabelInterval{cursor, end, spans[i].cat, spans[i].subclass});
    cursor = end;
  }
  if (out.empty() || out.back().end != frames)
    throw TrainingFailure("label spans do not cover the scene");  // builder bug
  return out;
}

struct BuilderContext {
  Rng* rng;
  const KinematicsLimits* limits;
  std::map<std::string, double> params;  // defaults merged with overrides

  double get(const std::string& key) const {
    const auto it = params.find(key);
    if (it == params.end()) throw ConfigError("missing parameter '" + key + "'");
    return it->second;
  }
  double jitter(double v, double frac) { return v * (1.0 + rng->uniform(-frac, frac)); }
};

void default_backgrounds(const std::string& template_id, Scenario& sc, Rng& rng) {
  auto& bg = sc.world.backgrounds;
  if (template_id == "straight") {
    bg.push_back({"av", core::AgentRole::Ego, {"f1a", "f1b"}, rng.uniform(90.0, 105.0),
                  rng.uniform(6.5, 7.5)});
    bg.push_back({"bg0", core::AgentRole::Other, {"o0a", "o0b"}, rng.uniform(20.0, 45.0),
                  rng.uniform(7.0, 8.5)});
  } else if (template_id == "curve") {
    bg.push_back({"av", core::AgentRole::Ego, {"c1a", "c1b"}, rng.uniform(15.0, 30.0),
                  rng.uniform(6.0, 7.0)});
    bg.push_back({"bg0", core::AgentRole::Other, {"co0a", "co0b"}, rng.uniform(10.0, 30.0),
                  rng.uniform(6.5, 8.0)});
  } else {
    bg.push_back({"av", core::AgentRole::Ego, {"ew_in", "ew_through", "ew_out"},
                  rng.uniform(40.0, 70.0), rng.uniform(6.0, 7.0)});
    bg.push_back({"bg0", core::AgentRole::Other, {"s_in", "s_right", "ew_out"},
                  rng.uniform(60.0, 85.0), rng.uniform(5.0, 6.0)});
  }
}

}  // namespace

Scenario make_scenario(const std::string& subclass, const std::map<std::string, double>& overrides,
                       Rng& rng, const KinematicsLimits& limits,
                       std::optional<std::pair<double, double>> duration_range,
                       const std::string& world_override) {
  if (!core::is_abnormal_subclass(subclass) && !core::is_normal_subclass(subclass))
    throw ConfigError("unknown maneuver subclass '" + subclass + "'");

  BuilderContext ctx{&rng, &limits, {}};
  auto set_default = [&](const std::string& k, double v) {
    if (!ctx.params.count(k)) ctx.params[k] = v;
  };
  ctx.params = overrides;

  Scenario sc;
  sc.script.subclass = subclass;

  // per-class defaults (seconds / meters / m/s); oracle-critical values get
  // only a small jitter so the documented bands stay valid
  double duration = 5.0;
  std::string template_id = "straight";
  const bool curvy = subclass == "straight" || subclass == "following" || subclass == "brake" ||
                     subclass == "accelerate";
  if (curvy && rng.uniform() < 0.35) template_id = "curve";
  if (subclass == "turn_left" || subclass == "turn_right" || subclass == "cancel_turn" ||
      subclass == "last_minute_turn" || subclass == "enter_wrong_lane")
    template_id = "crossing";
  if (world_override != "auto") template_id = world_override;
  const bool on_curve = template_id == "curve";
  const std::vector<std::string> lane0 =
      on_curve ? std::vector<std::string>{"c0a", "c0b"} : std::vector<std::string>{"f0a", "f0b"};
  const std::vector<std::string> lane1 =
      on_curve ? std::vector<std::string>{"c1a", "c1b"} : std::vector<std::string>{"f1a", "f1b"};

  auto& s = sc.script;
  std::vector<LabelSpan> spans;

  if (subclass == "straight") {
    duration = 5.0;
    set_default("v0", ctx.jitter(8.0, 0.12));
    set_default("offset", on_curve ? rng.uniform(25.0, 45.0) : rng.uniform(100.0, 140.0));
    s.route = lane0;
    spans = {{0, duration, core::LabelCategory::Normal, subclass}};
  } else if (subclass == "turn_left" || subclass == "turn_right") {
    duration = 6.0;
    const bool left = subclass == "turn_left";
    set_default("v0", ctx.jitter(left ? 6.0 : 5.0, 0.1));
    set_default("t_junction", ctx.jitter(2.0, 0.1));
    s.route = left ? std::vector<std::string>{"we_in", "we_left", "n_out"}
                   : std::vector<std::string>{"we_in", "we_right", "s_out"};
    set_default("offset", 140.0 - ctx.get("v0") * ctx.get("t_junction"));
    spans = {{0, duration, core::LabelCategory::Normal, subclass}};
  } else if (subclass == "following") {
    duration = 5.0;
    set_default("v0", ctx.jitter(8.0, 0.12));
    set_default("offset", on_curve ? rng.uniform(20.0, 35.0) : rng.uniform(100.0, 130.0));
    set_default("gap", ctx.jitter(12.0, 0.1));
    s.route = lane0;
    spans = {{0, duration, core::LabelCategory::Normal, subclass}};
  } else if (subclass == "side_by_side") {
    duration = 5.0;
    set_default("v0", ctx.jitter(8.0, 0.1));
    set_default("offset", rng.uniform(100.0, 130.0));
    s.route = lane0;
    spans = {{0, duration, core::LabelCategory::Normal, subclass}};
  } else if (subclass == "lane_change_left" || subclass == "lane_change_right") {
    duration = 5.0;
    const bool left = subclass == "lane_change_left";
    set_default("v0", ctx.jitter(8.0, 0.12));
    set_default("offset", rng.uniform(100.0, 130.0));
    set_default("t0", ctx.jitter(1.5, 0.15));
    set_default("dur", ctx.jitter(2.5, 0.1));
    s.route = left ? lane0 : lane1;
    s.lateral = {LateralKind::RampHold, ctx.get("t0"), ctx.get("dur"),
                 left ? kLaneWidth : -kLaneWidth, 0, 0, 0};
    spans = {{0, duration, core::LabelCategory::Normal, subclass}};
  } else if (subclass == "brake" || subclass == "accelerate") {
    duration = 6.0;
    const bool braking = subclass == "brake";
    set_default("v0", ctx.jitter(braking ? 10.0 : 5.0, 0.1));
    set_default("offset", on_curve ? rng.uniform(20.0, 35.0) : rng.uniform(100.0, 130.0));
    set_default("t0", ctx.jitter(1.5, 0.15));
    set_default("a", braking ? -2.5 : 2.5);
    set_default("dur", 2.0);
    s.route = lane0;
    const double v1 = std::clamp(ctx.get("v0") + ctx.get("a") * ctx.get("dur"), 0.0, limits.v_max);
    s.speed_knots = {{0, ctx.get("v0")},
                     {ctx.get("t0"), ctx.get("v0")},
                     {ctx.get("t0") + ctx.get("dur"), v1},
                     {duration, v1}};
    spans = {{0, duration, core::LabelCategory::Normal, subclass}};
  } else if (subclass == "ghost_driver") {
    duration = 6.0;
    set_default("v0", ctx.jitter(8.0, 0.08));
    set_default("offset", rng.uniform(100.0, 125.0));
    set_default("t0", ctx.jitter(1.2, 0.1));
    set_default("dur", 1.5);
    s.route = lane0;  // ramps across the divider onto the oncoming lane
    s.lateral = {LateralKind::RampHold, ctx.get("t0"), ctx.get("dur"), -kLaneWidth, 0, 0, 0};
    const double t_cross = ctx.get("t0") + 0.5 * ctx.get("dur");
    spans = {{0, t_cross, core::LabelCategory::Normal, "straight"},
             {t_cross, duration, core::LabelCategory::Abnormal, subclass}};
  } else if (subclass == "leave_road") {
    duration = 6.0;
    set_default("v0", ctx.jitter(8.0, 0.08));
    set_default("offset", rng.uniform(100.0, 125.0));
    set_default("t0", ctx.jitter(1.5, 0.1));
    set_default("dur", 2.5);
    set_default("amp", 6.0);
    s.route = lane1;  // outermost forward lane, monotone ramp off the road
    s.lateral = {LateralKind::RampHold, ctx.get("t0"), ctx.get("dur"), ctx.get("amp"), 0, 0, 0};
    const double t_out =
        ctx.get("t0") + ctx.get("dur") * smoothstep_inv(0.5 * kLaneWidth / ctx.get("amp"));
    spans = {{0, t_out, core::LabelCategory::Normal, "straight"},
             {t_out, duration, core::LabelCategory::Abnormal, subclass}};
  } else if (subclass == "thwarting") {
    duration = 6.0;
    set_default("v0", ctx.jitter(8.0, 0.08));
    set_default("offset", rng.uniform(105.0, 130.0));
    set_default("t0", ctx.jitter(2.0, 0.1));
    set_default("v_floor", 0.5);
    set_default("gap_behind", ctx.jitter(12.0, 0.1));
    s.route = lane0;
    const double brake_dur = (ctx.get("v0") - ctx.get("v_floor")) / limits.a_max;
    s.speed_knots = {{0, ctx.get("v0")},
                     {ctx.get("t0"), ctx.get("v0")},
                     {ctx.get("t0") + brake_dur, ctx.get("v_floor")},
                     {duration, ctx.get("v_floor")}};
    spans = {{0, ctx.get("t0"), core::LabelCategory::Normal, "straight"},
             {ctx.get("t0"), duration, core::LabelCategory::Abnormal, subclass}};
  } else if (subclass == "cancel_turn") {
    duration = 6.5;
    set_default("v0", ctx.jitter(6.0, 0.08));
    set_default("t_junction", 2.0);
    set_default("t_revert", ctx.get("t_junction") + ctx.jitter(1.0, 0.1));
    set_default("blend_dur", 1.2);
    s.route = {"we_in", "we_left", "n_out"};
    s.alt_route = {"we_in", "we_through", "we_out"};
    set_default("offset", 140.0 - ctx.get("v0") * ctx.get("t_junction"));
    s.blend = {true, ctx.get("t_revert"), ctx.get("blend_dur")};
    const double t_done = ctx.get("t_revert") + ctx.get("blend_dur") + 0.8;
    spans = {{0, ctx.get("t_revert"), core::LabelCategory::Normal, "turn_left"},
             {ctx.get("t_revert"), t_done, core::LabelCategory::Abnormal, subclass},
             {t_done, duration, core::LabelCategory::Normal, "straight"}};
  } else if (subclass == "last_minute_turn") {
    duration = 6.0;
    set_default("v0", ctx.jitter(9.0, 0.05));
    set_default("t_brake", ctx.jitter(2.0, 0.08));
    set_default("v_turn", 5.0);
    set_default("blend_dur", 0.9);
    s.route = {"we_in", "we_through", "we_out"};
    s.alt_route = {"we_in", "we_right", "s_out"};
    const double brake_dur = (ctx.get("v0") - ctx.get("v_turn")) / limits.a_max;
    set_default("offset", 116.0);
    s.speed_knots = {{0, ctx.get("v0")},
                     {ctx.get("t_brake"), ctx.get("v0")},
                     {ctx.get("t_brake") + brake_dur, ctx.get("v_turn")},
                     {duration, ctx.get("v_turn")}};
    const double t_blend = ctx.get("t_brake") + 0.8;
    s.blend = {true, t_blend, ctx.get("blend_dur")};
    const double t_done = t_blend + ctx.get("blend_dur") + 0.5;
    spans = {{0, ctx.get("t_brake"), core::LabelCategory::Normal, "straight"},
             {ctx.get("t_brake"), t_done, core::LabelCategory::Abnormal, subclass},
             {t_done, duration, core::LabelCategory::Normal, "turn_right"}};
  } else if (subclass == "enter_wrong_lane") {
    duration = 8.0;
    set_default("v0", ctx.jitter(6.0, 0.08));
    set_default("t_junction", 2.0);
    s.route = {"we_in", "we_left", "n_out"};
    set_default("offset", 140.0 - ctx.get("v0") * ctx.get("t_junction"));
    const double turn_time = 11.75 * M_PI / 2.0 / ctx.get("v0");
    set_default("t0", ctx.get("t_junction") + turn_time);
    set_default("dur", 1.5);
    s.lateral = {LateralKind::RampHold, ctx.get("t0"), ctx.get("dur"), -kLaneWidth, 0, 0, 0};
    const double t_cross = ctx.get("t0") + 0.5 * ctx.get("dur");
    spans = {{0, t_cross, core::LabelCategory::Normal, "turn_left"},
             {t_cross, duration, core::LabelCategory::Abnormal, subclass}};
  } else if (subclass == "staggering") {
    duration = 7.0;
    set_default("v0", ctx.jitter(8.0, 0.05));
    set_default("offset", rng.uniform(100.0, 120.0));
    set_default("t0", ctx.jitter(1.0, 0.1));
    set_default("amplitude", ctx.jitter(1.0, 0.03));
    set_default("period_s", 2.0);
    set_default("cycles", 2.0);
    s.route = lane0;
    s.lateral = {LateralKind::Sine, ctx.get("t0"), 0, ctx.get("amplitude"), ctx.get("period_s"),
                 ctx.get("cycles"), 0};
    const double t_end = ctx.get("t0") + ctx.get("cycles") * ctx.get("period_s");
    spans = {{0, ctx.get("t0"), core::LabelCategory::Normal, "straight"},
             {ctx.get("t0"), t_end, core::LabelCategory::Abnormal, subclass},
             {t_end, duration, core::LabelCategory::Normal, "straight"}};
  } else if (subclass == "pushing_away") {
    duration = 7.0;
    set_default("v0", ctx.jitter(8.0, 0.08));
    set_default("offset", rng.uniform(100.0, 125.0));
    set_default("t0", ctx.jitter(1.5, 0.1));
    set_default("dur", 1.5);
    set_default("hold", 1.5);
    set_default("amp", 2.5);
    s.route = lane0;
    s.lateral = {LateralKind::RampHoldReturn, ctx.get("t0"), ctx.get("dur"), ctx.get("amp"), 0, 0,
                 ctx.get("hold")};
    const double t_end = ctx.get("t0") + 2.0 * ctx.get("dur") + ctx.get("hold");
    spans = {{0, ctx.get("t0"), core::LabelCategory::Normal, "side_by_side"},
             {ctx.get("t0"), t_end, core::LabelCategory::Abnormal, subclass},
             {t_end, duration, core::LabelCategory::Normal, "side_by_side"}};
  } else if (subclass == "swerving_left" || subclass == "swerving_right") {
    duration = 6.0;
    const bool left = subclass == "swerving_left";
    set_default("v0", ctx.jitter(8.0, 0.05));
    set_default("offset", rng.uniform(100.0, 125.0));
    set_default("t0", ctx.jitter(2.0, 0.1));
    set_default("dur", 2.0);
    set_default("amp", ctx.jitter(1.8, 0.05));
    s.route = lane0;
    s.lateral = {LateralKind::Bump, ctx.get("t0"), ctx.get("dur"),
                 left ? ctx.get("amp") : -ctx.get("amp"), 0, 0, 0};
    spans = {{0, ctx.get("t0"), core::LabelCategory::Normal, "straight"},
             {ctx.get("t0"), ctx.get("t0") + ctx.get("dur"), core::LabelCategory::Abnormal,
              subclass},
             {ctx.get("t0") + ctx.get("dur"), duration, core::LabelCategory::Normal, "straight"}};
  } else if (subclass == "aggressive_shearing_left" || subclass == "aggressive_shearing_right") {
    duration = 6.0;
    const bool left = subclass == "aggressive_shearing_left";
    set_default("v0", ctx.jitter(11.0, 0.04));
    set_default("offset", rng.uniform(95.0, 110.0));
    set_default("victim_speed", 7.0);
    set_default("victim_lead", 8.0);
    set_default("t0", ctx.jitter(2.2, 0.08));
    set_default("dur", 1.5);
    s.route = left ? lane0 : lane1;
    s.lateral = {LateralKind::RampHold, ctx.get("t0"), ctx.get("dur"),
                 left ? kLaneWidth : -kLaneWidth, 0, 0, 0};
    const double t_end = ctx.get("t0") + ctx.get("dur") + 0.5;
    spans = {{0, ctx.get("t0"), core::LabelCategory::Normal, "straight"},
             {ctx.get("t0"), t_end, core::LabelCategory::Abnormal, subclass},
             {t_end, duration, core::LabelCategory::Normal, "straight"}};
  } else if (subclass == "tailgating") {
    duration = 7.5;
    set_default("v0", ctx.jitter(10.0, 0.04));
    set_default("offset", rng.uniform(105.0, 120.0));
    set_default("leader_speed", 7.0);
    set_default("gap0", 15.0);
    set_default("gap_min", 2.0);
    set_default("brake_rate", 3.0);
    s.route = lane0;
    const double closing = ctx.get("v0") - ctx.get("leader_speed");
    const double brake_dur = closing / ctx.get("brake_rate");
    const double brake_dist = 0.5 * closing * brake_dur;  // relative distance closed while braking
    const double t_brake = (ctx.get("gap0") - ctx.get("gap_min") - brake_dist) / closing;
    s.speed_knots = {{0, ctx.get("v0")},
                     {t_brake, ctx.get("v0")},
                     {t_brake + brake_dur, ctx.get("leader_speed")},
                     {duration, ctx.get("leader_speed")}};
    const double t_abn = (ctx.get("gap0") - 3.0) / closing;  // gap falls below 3 m
    spans = {{0, t_abn, core::LabelCategory::Normal, "following"},
             {t_abn, duration, core::LabelCategory::Abnormal, subclass}};
  }

  // clamp duration into the configured range and the paper's bounds
  double lo = 1.7, hi = 10.1;
  if (duration_range) {
    lo = std::max(lo, duration_range->first);
    hi = std::min(hi, duration_range->second);
  }
  if (!ctx.params.count("duration_s")) ctx.params["duration_s"] = duration;
  duration = std::clamp(ctx.params["duration_s"], lo, hi);
  ctx.params["duration_s"] = duration;
  s.frames = std::max(int(std::lround(duration / kDt)), core::kWindowLength + 1);

  sc.world.template_id = template_id;
  sc.world.lanes = make_world_lanes(template_id);
  default_backgrounds(template_id, sc, rng);

  // class-specific agents tied to the target's script
  const double offset = ctx.params.count("offset") ? ctx.get("offset") : 0.0;
  if (subclass == "following") {
    sc.world.backgrounds.push_back({"lead", core::AgentRole::Other, s.route,
                                    offset + ctx.get("gap"), ctx.get("v0")});
  } else if (subclass == "side_by_side" || subclass == "pushing_away") {
    sc.world.backgrounds.push_back({"mate", core::AgentRole::Other,
                                    on_curve ? lane1 : std::vector<std::string>{"f1a", "f1b"},
                                    offset, ctx.get("v0")});
  } else if (subclass == "thwarting") {
    sc.world.backgrounds.push_back({"victim", core::AgentRole::Other, s.route,
                                    offset - ctx.get("gap_behind"), ctx.get("v0")});
  } else if (subclass == "aggressive_shearing_left" || subclass == "aggressive_shearing_right") {
    const bool left = subclass == "aggressive_shearing_left";
    sc.world.backgrounds.push_back({"victim", core::AgentRole::Other,
                                    left ? lane1 : lane0,
                                    offset + ctx.get("victim_lead"), ctx.get("victim_speed")});
  } else if (subclass == "tailgating") {
    sc.world.backgrounds.push_back({"lead", core::AgentRole::Other, s.route,
                                    offset + ctx.get("gap0"), ctx.get("leader_speed")});
    s.follow_leader = int(sc.world.backgrounds.size()) - 1;
    s.follow_gap = ctx.get("gap_min");
  }

  s.params = ctx.params;
  s.start_offset = offset;
  if (s.speed_knots.empty()) s.speed_knots = {{0.0, ctx.get("v0")}};
  s.label_intervals = spans_to_intervals(spans, s.frames);
  return sc;
}

// ---------------------------------------------------------------------------
// scene animation

namespace {

std::vector<core::FrameLabel> assemble_labels(const std::vector<LabelInterval>& intervals,
                                              int frames) {
  std::vector<core::LabelCategory> cat(size_t(frames), core::LabelCategory::Normal);
  std::vector<std::string> sub(static_cast<size_t>(frames));
  std::vector<bool> covered(size_t(frames), false);
  for (const auto& iv : intervals) {
    for (int f = iv.begin; f < iv.end; ++f) {
      if (f < 0 || f >= frames || covered[size_t(f)])
        throw TrainingFailure("label intervals overlap or exceed the scene");
      covered[size_t(f)] = true;
      cat[size_t(f)] = iv.category;
      sub[size_t(f)] = iv.subclass;
    }
  }
  for (int f = 0; f < frames; ++f)
    if (!covered[size_t(f)]) throw TrainingFailure("label intervals leave frames unlabeled");

  // ignore bands: 3 frames on each side of every NORMAL<->ABNORMAL transition
  std::vector<bool> ignore(size_t(frames), false);
  for (int f = 1; f < frames; ++f) {
    const auto a = cat[size_t(f) - 1], b = cat[size_t(f)];
    const bool transition = (a == core::LabelCategory::Normal && b == core::LabelCategory::Abnormal) ||
                            (a == core::LabelCategory::Abnormal && b == core::LabelCategory::Normal);
    if (!transition) continue;
    for (int k = f - 3; k < f + 3; ++k)
      if (k >= 0 && k < frames) ignore[size_t(k)] = true;
  }
  std::vector<core::FrameLabel> labels(static_cast<size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    labels[size_t(f)].frame_index = f;
    if (ignore[size_t(f)]) {
      labels[size_t(f)].category = core::LabelCategory::Ignore;
      labels[size_t(f)].subclass.clear();
    } else {
      labels[size_t(f)].category = cat[size_t(f)];
      labels[size_t(f)].subclass = sub[size_t(f)];
    }
  }
  return labels;
}

}  // namespace

core::Scene generate_scene(const WorldSpec& world, const ManeuverScript& script, uint64_t seed,
                           const KinematicsLimits& limits) {
  (void)seed;  // the recipe is fully resolved; kept for interface stability
  const int frames = script.frames;
  const Polyline route = build_route(world.lanes, script.route, script.subclass);
  std::optional<Polyline> alt;
  if (script.blend.active) alt.emplace(build_route(world.lanes, script.alt_route, script.subclass));

  // leader arc positions for gap clamping
  const BackgroundAgent* leader = nullptr;
  if (script.follow_leader >= 0) {
    if (script.follow_leader >= int(world.backgrounds.size()))
      throw InfeasibleScript("follow leader index out of range");
    leader = &world.backgrounds[size_t(script.follow_leader)];
    if (leader->route != script.route)
      throw InfeasibleScript("follow leader must share the target route");
  }

  // reference positions at 10 Hz: centerline arc march + lateral offset
  std::vector<Vec2> ref(size_t(frames) + 2);  // two extrapolated steps for the controller
  double s = script.start_offset;
  for (int k = 0; k < frames + 2; ++k) {
    const double t = k * kDt;
    Vec2 base = route.point_at(s);
    Vec2 dir = route.direction_at(s);
    if (script.blend.active && t >= script.blend.t0) {
      const double sigma = smoothstep((t - script.blend.t0) / script.blend.dur);
      base = base * (1.0 - sigma) + alt->point_at(s) * sigma;
      dir = (dir * (1.0 - sigma) + alt->direction_at(s) * sigma).normalized();
    }
    ref[size_t(k)] = base + dir.perp() * lateral_at(script.lateral, t);
    double v = std::min(speed_at(script.speed_knots, t), limits.v_max);
    double s_next = s + v * kDt;
    if (leader != nullptr)
      s_next = std::min(s_next, leader->start_offset + leader->speed * (t + kDt) - script.follow_gap);
    s = std::max(s, s_next);
  }

  // animate through the bicycle model; the controller inverts the discrete
  // dynamics one step ahead, so feasible references are tracked exactly
  std::vector<core::AgentState> target_states(static_cast<size_t>(frames));
  VehicleState vs;
  vs.x = ref[0].x;
  vs.y = ref[0].y;
  {
    const Vec2 d0 = ref[1] - ref[0];
    vs.heading = d0.norm() > 1e-12 ? std::atan2(d0.y, d0.x) : 0.0;
    vs.speed = std::min(d0.norm() / kDt, limits.v_max);
  }
  target_states[0] = {vs.x, vs.y, true};
  for (int k = 0; k + 1 < frames; ++k) {
    const Vec2 next{vs.x + vs.speed * std::cos(vs.heading) * kDt,
                    vs.y + vs.speed * std::sin(vs.heading) * kDt};
    const Vec2 want = ref[size_t(k) + 2] - next;
    ControlCommand cmd;
    double v_des = std::min(want.norm() / kDt, limits.v_max);
    cmd.accel = std::clamp((v_des - vs.speed) / kDt, -limits.a_max, limits.a_max);
    if (vs.speed > 1e-9 && want.norm() > 1e-12) {
      const double dtheta = wrap_angle(std::atan2(want.y, want.x) - vs.heading);
      cmd.steer = std::clamp(std::atan(limits.wheelbase * dtheta / (vs.speed * kDt)),
                             -limits.steer_max, limits.steer_max);
    }
    vs = step_kinematics(vs, cmd, kDt, limits.wheelbase);
    target_states[size_t(k) + 1] = {vs.x, vs.y, true};
  }

  core::Scene scene;
  scene.scene_id = "scene";
  scene.lane_graph = world.lanes;

  core::Trajectory target;
  target.agent_id = "target";
  target.role = core::AgentRole::Target;
  target.states = std::move(target_states);
  scene.trajectories.push_back(std::move(target));

  for (const auto& bg : world.backgrounds) {
    const Polyline bg_route = build_route(world.lanes, bg.route, script.subclass);
    core::Trajectory traj;
    traj.agent_id = bg.agent_id;
    traj.role = bg.role;
    traj.states.assign(size_t(frames), core::AgentState{});
    for (int k = 0; k < frames; ++k) {
      const double arc = bg.start_offset + bg.speed * k * kDt;
      if (arc < 0.0 || arc > bg_route.length()) continue;  // not (yet) on the road
      const Vec2 p = bg_route.point_at(arc);
      traj.states[size_t(k)] = {p.x, p.y, true};
    }
    scene.trajectories.push_back(std::move(traj));
  }

  scene.labels = assemble_labels(script.label_intervals, frames);
  return scene;
}

// ---------------------------------------------------------------------------
// dataset generation

namespace {

const std::vector<ClassCount>& paper_like_test_classes() {
  // abnormal counts roughly proportional to the reported per-class timesteps
  static const std::vector<ClassCount> classes = {
      {"ghost_driver", 11, {}},
      {"leave_road", 11, {}},
      {"thwarting", 10, {}},
      {"cancel_turn", 9, {}},
      {"last_minute_turn", 7, {}},
      {"enter_wrong_lane", 6, {}},
      {"staggering", 5, {}},
      {"pushing_away", 5, {}},
      {"swerving_left", 4, {}},
      {"swerving_right", 2, {}},
      {"tailgating", 4, {}},
      {"aggressive_shearing_left", 3, {}},
      {"aggressive_shearing_right", 3, {}},
      {"straight", 10, {}},
      {"turn_left", 9, {}},
      {"turn_right", 9, {}},
      {"following", 9, {}},
      {"side_by_side", 9, {}},
      {"lane_change_left", 9, {}},
      {"lane_change_right", 9, {}},
      {"brake", 8, {}},
      {"accelerate", 8, {}},
  };
  return classes;
}

std::vector<ClassCount> uniform_normal_mix(int scenes) {
  const auto& names = core::normal_subclasses();
  std::vector<ClassCount> out;
  for (size_t i = 0; i < names.size(); ++i) {
    const int count = scenes / int(names.size()) + (int(i) < scenes % int(names.size()) ? 1 : 0);
    if (count > 0) out.push_back({names[i], count, {}});
  }
  return out;
}

std::map<std::string, double> params_from_json(const ordered_json& j) {
  std::map<std::string, double> params;
  for (const auto& [key, value] : j.items()) params[key] = value.get<double>();
  return params;
}

std::vector<ClassCount> classes_from_json(const ordered_json& j) {
  std::vector<ClassCount> out;
  for (const auto& jc : j) {
    ClassCount c;
    c.subclass = jc.at("subclass").get<std::string>();
    c.count = jc.at("count").get<int>();
    if (jc.contains("params")) c.params = params_from_json(jc["params"]);
    out.push_back(std::move(c));
  }
  return out;
}

ordered_json classes_to_json(const std::vector<ClassCount>& classes) {
  ordered_json out = ordered_json::array();
  for (const auto& c : classes) {
    ordered_json jc;
    jc["subclass"] = c.subclass;
    jc["count"] = c.count;
    ordered_json jp = ordered_json::object();
    for (const auto& [k, v] : c.params) jp[k] = v;
    jc["params"] = std::move(jp);
    out.push_back(std::move(jc));
  }
  return out;
}

}  // namespace

DatasetConfig default_dataset_config() {
  DatasetConfig c;
  c.test_classes = paper_like_test_classes();
  return c;
}

DatasetConfig parse_dataset_config(const ordered_json& j) {
  DatasetConfig c = default_dataset_config();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("world")) c.world = j["world"].get<std::string>();
  if (c.world != "auto") make_world_lanes(c.world);  // validates the template id
  if (j.contains("duration_s")) {
    if (j["duration_s"].is_array())
      c.duration_s = {j["duration_s"].at(0).get<double>(), j["duration_s"].at(1).get<double>()};
    else
      c.duration_s = {j["duration_s"].get<double>(), j["duration_s"].get<double>()};
    if (c.duration_s->first < 1.7 || c.duration_s->second > 10.1 ||
        c.duration_s->first > c.duration_s->second)
      throw ConfigError("duration_s must lie within [1.7, 10.1]");
  }
  if (j.contains("v_max")) c.limits.v_max = j["v_max"].get<double>();
  if (j.contains("a_max")) c.limits.a_max = j["a_max"].get<double>();
  if (j.contains("train_scenes")) c.train_scenes = j["train_scenes"].get<int>();
  if (j.contains("val_scenes")) c.val_scenes = j["val_scenes"].get<int>();
  if (j.contains("classes")) c.test_classes = classes_from_json(j["classes"]);
  if (j.contains("train_classes")) c.train_classes = classes_from_json(j["train_classes"]);
  if (j.contains("val_classes")) c.val_classes = classes_from_json(j["val_classes"]);
  for (const auto& cc : c.test_classes)
    if (!core::is_abnormal_subclass(cc.subclass) && !core::is_normal_subclass(cc.subclass))
      throw ConfigError("unknown subclass '" + cc.subclass + "' in config");
  return c;
}

ordered_json dataset_config_to_json(const DatasetConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["world"] = c.world;
  if (c.duration_s) j["duration_s"] = {c.duration_s->first, c.duration_s->second};
  j["v_max"] = c.limits.v_max;
  j["a_max"] = c.limits.a_max;
  j["train_scenes"] = c.train_scenes;
  j["val_scenes"] = c.val_scenes;
  j["classes"] = classes_to_json(c.test_classes);
  if (c.train_classes) j["train_classes"] = classes_to_json(*c.train_classes);
  if (c.val_classes) j["val_classes"] = classes_to_json(*c.val_classes);
  return j;
}

namespace {

struct SceneJob {
  std::string id;
  std::string subclass;
  std::map<std::string, double> params;
  uint64_t seed = 0;
  bool labeled = false;
};

}  // namespace

ordered_json generate_dataset(const DatasetConfig& config, const fs::path& out_dir, uint64_t seed,
                              int jobs) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  auto expand = [](const std::vector<ClassCount>& classes, const std::string& prefix,
                   uint64_t split_tag, uint64_t base_seed, bool labeled) {
    std::vector<SceneJob> out;
    int index = 0;
    for (const auto& cc : classes)
      for (int i = 0; i < cc.count; ++i) {
        SceneJob job;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d", index);
        job.id = prefix + "_" + buf;
        job.subclass = cc.subclass;
        job.params = cc.params;
        job.seed = Rng::mix(base_seed, split_tag * 1000003ULL + uint64_t(index));
        job.labeled = labeled;
        ++index;
      out.push_back(std::move(job));
      }
    return out;
  };

  const auto train_classes =
      config.train_classes ? *config.train_classes : uniform_normal_mix(config.train_scenes);
  const auto val_classes =
      config.val_classes ? *config.val_classes : uniform_normal_mix(config.val_scenes);

  struct Split {
    std::string name;
    std::vector<SceneJob> scene_jobs;
    std::vector<core::Scene> scenes;
  };
  std::vector<Split> splits(3);
  splits[0] = {"train", expand(train_classes, "train", 1, seed, false), {}};
  splits[1] = {"val", expand(val_classes, "val", 2, seed, false), {}};
  splits[2] = {"test", expand(config.test_classes, "test", 3, seed, true), {}};

  for (auto& split : splits) {
    split.scenes.resize(split.scene_jobs.size());
    parallel_for(int(split.scene_jobs.size()), jobs, [&](int i) {
      const SceneJob& job = split.scene_jobs[size_t(i)];
      try {
        Rng rng(job.seed);
        Scenario sc = make_scenario(job.subclass, job.params, rng, config.limits,
                                    config.duration_s, config.world);
        core::Scene scene = generate_scene(sc.world, sc.script, job.seed, config.limits);
        scene.scene_id = job.id;
        if (!job.labeled) scene.labels.clear();
        split.scenes[size_t(i)] = std::move(scene);
      } catch (const InfeasibleScript& e) {
        throw InfeasibleScript(std::string(e.what()) + " (scene " + job.id + ")");
      }
    });
  }

  ordered_json manifest;
  manifest["seed"] = seed;
  manifest["splits"] = ordered_json::object();
  for (auto& split : splits) {
    const fs::path dir = out_dir / split.name;
    fs::create_directories(dir, ec);
    int64_t frames = 0;
    std::map<std::string, std::array<int64_t, 4>> per_class;  // scenes, abn, norm, ign
    int64_t n_abn = 0, n_norm = 0, n_ign = 0;
    for (size_t i = 0; i < split.scenes.size(); ++i) {
      const core::Scene& scene = split.scenes[i];
      dataio::write_scene(scene, dir);
      frames += scene.length();
      auto& slot = per_class[split.scene_jobs[i].subclass];
      slot[0] += 1;
      for (const auto& l : scene.labels) {
        if (l.category == core::LabelCategory::Abnormal) {
          ++slot[1];
          ++n_abn;
        } else if (l.category == core::LabelCategory::Normal) {
          ++slot[2];
          ++n_norm;
        } else {
          ++slot[3];
          ++n_ign;
        }
      }
    }
    ordered_json js;
    js["scenes"] = split.scenes.size();
    js["frames"] = frames;
    if (split.name == "test") {
      js["label_frames"] = {{"abnormal", n_abn}, {"normal", n_norm}, {"ignore", n_ign}};
      ordered_json jp = ordered_json::object();
      for (const auto& [name, slot] : per_class) {
        jp[name] = {{"scenes", slot[0]},
                    {"abnormal_frames", slot[1]},
                    {"normal_frames", slot[2]},
                    {"ignore_frames", slot[3]}};
      }
      js["per_class"] = std::move(jp);
    }
    manifest["splits"][split.name] = std::move(js);
  }

  DatasetConfig echo = config;
  echo.seed = seed;
  dataio::write_json_file(out_dir / "config.json", dataset_config_to_json(echo));
  dataio::write_json_file(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace maad::datagen
