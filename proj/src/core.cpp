#include "maad/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace maad::core {

double Lane::length() const {
  double total = 0.0;
  for (size_t i = 1; i < centerline.size(); ++i) total += (centerline[i] - centerline[i - 1]).norm();
  return total;
}

Vec2 Lane::point_at(double s) const {
  if (centerline.size() < 2 || s <= 0.0) return centerline.front();
  for (size_t i = 1; i < centerline.size(); ++i) {
    const double seg = (centerline[i] - centerline[i - 1]).norm();
    if (s <= seg) {
      const double t = seg > 0.0 ? s / seg : 0.0;
      return centerline[i - 1] + (centerline[i] - centerline[i - 1]) * t;
    }
    s -= seg;
  }
  return centerline.back();
}

Vec2 Lane::direction_at(double s) const {
  if (centerline.size() < 2) return {1.0, 0.0};
  for (size_t i = 1; i < centerline.size(); ++i) {
    const double seg = (centerline[i] - centerline[i - 1]).norm();
    if (s <= seg) return (centerline[i] - centerline[i - 1]).normalized();
    s -= seg;
  }
  return (centerline.back() - centerline[centerline.size() - 2]).normalized();
}

const Lane* LaneGraph::find(const std::string& id) const {
  for (const auto& lane : lanes)
    if (lane.id == id) return &lane;
  return nullptr;
}

void LaneGraph::validate() const {
  std::set<std::string> ids;
  for (const auto& lane : lanes) {
    if (!ids.insert(lane.id).second) throw SchemaError("duplicate lane id '" + lane.id + "'");
    if (lane.centerline.size() < 2)
      throw SchemaError("lane '" + lane.id + "' has fewer than 2 centerline points");
    for (const auto& p : lane.centerline)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw SchemaError("lane '" + lane.id + "' has non-finite centerline coordinates");
  }
  auto check = [&](const std::string& owner, const std::string& ref) {
    if (!ids.count(ref))
      throw SchemaError("lane '" + owner + "' references unknown lane '" + ref + "'");
  };
  for (const auto& lane : lanes) {
    for (const auto& s : lane.successors) check(lane.id, s);
    for (const auto& p : lane.predecessors) check(lane.id, p);
    if (lane.left_neighbor) check(lane.id, *lane.left_neighbor);
    if (lane.right_neighbor) check(lane.id, *lane.right_neighbor);
  }
}

std::string to_string(LabelCategory c) {
  switch (c) {
    case LabelCategory::Normal:
      return "NORMAL";
    case LabelCategory::Abnormal:
      return "ABNORMAL";
    case LabelCategory::Ignore:
      return "IGNORE";
  }
  return "NORMAL";
}

LabelCategory label_category_from_string(const std::string& s) {
  if (s == "NORMAL") return LabelCategory::Normal;
  if (s == "ABNORMAL") return LabelCategory::Abnormal;
  if (s == "IGNORE") return LabelCategory::Ignore;
  throw ParseError("unknown label category '" + s + "'");
}

const std::vector<std::string>& abnormal_subclasses() {
  static const std::vector<std::string> classes = {
      "ghost_driver",   "leave_road",        "thwarting",
      "cancel_turn",    "last_minute_turn",  "enter_wrong_lane",
      "staggering",     "pushing_away",      "swerving_left",
      "swerving_right", "tailgating",        "aggressive_shearing_left",
      "aggressive_shearing_right"};
  return classes;
}

const std::vector<std::string>& normal_subclasses() {
  static const std::vector<std::string> classes = {
      "straight",  "turn_left",        "turn_right",        "following", "side_by_side",
      "lane_change_left", "lane_change_right", "brake",     "accelerate"};
  return classes;
}

bool is_abnormal_subclass(const std::string& s) {
  const auto& c = abnormal_subclasses();
  return std::find(c.begin(), c.end(), s) != c.end();
}

bool is_normal_subclass(const std::string& s) {
  const auto& c = normal_subclasses();
  return std::find(c.begin(), c.end(), s) != c.end();
}

const Trajectory* Scene::target() const {
  for (const auto& t : trajectories)
    if (t.role == AgentRole::Target) return &t;
  return nullptr;
}

Window to_target_frame(const Scene& scene, int end_frame) {
  const int length = scene.length();
  if (end_frame < kWindowLength - 1 || end_frame >= length)
    throw FrameOutOfRange("end_frame " + std::to_string(end_frame) + " outside [15, " +
                          std::to_string(length - 1) + "] in scene '" + scene.scene_id + "'");
  const Trajectory* target = scene.target();
  if (target == nullptr) throw MissingTarget("scene '" + scene.scene_id + "' has no TARGET");
  if (!target->states[size_t(end_frame)].valid)
    throw MissingTarget("target not observed at frame " + std::to_string(end_frame) +
                        " in scene '" + scene.scene_id + "'");

  const Vec2 origin = target->states[size_t(end_frame)].pos();

  // Heading from the last two locations; if the target is not moving there,
  // fall back to the most recent moving segment, then to identity.
  double heading = 0.0;
  for (int k = end_frame; k >= 1; --k) {
    const AgentState& a = target->states[size_t(k - 1)];
    const AgentState& b = target->states[size_t(k)];
    if (!a.valid || !b.valid) continue;
    const Vec2 d = b.pos() - a.pos();
    if (d.norm() >= kHeadingEps) {
      heading = std::atan2(d.y, d.x);
      break;
    }
  }

  Window window;
  window.pose = Pose{origin, heading};
  window.frame_of_score = end_frame;
  window.target_index = 0;

  auto append_agent = [&](const Trajectory& traj) {
    std::vector<AgentState> row(static_cast<size_t>(kWindowLength));
    for (int t = 0; t < kWindowLength; ++t) {
      const int frame = end_frame - (kWindowLength - 1) + t;
      const AgentState& s = traj.states[size_t(frame)];
      if (s.valid) {
        const Vec2 local = window.pose.to_local(s.pos());
        row[size_t(t)] = AgentState{local.x, local.y, true};
      }
    }
    window.agents.push_back(std::move(row));
  };

  append_agent(*target);
  for (const auto& traj : scene.trajectories) {
    if (&traj == target) continue;
    // only agents present in the last frame are considered
    if (!traj.states[size_t(end_frame)].valid) continue;
    append_agent(traj);
  }
  return window;
}

std::vector<std::vector<Vec2>> to_displacements(const Window& window) {
  std::vector<std::vector<Vec2>> out;
  out.reserve(size_t(window.agent_count()));
  const int length = window.length();
  for (const auto& row : window.agents) {
    std::vector<Vec2> d(size_t(length - 1));
    for (int t = 0; t + 1 < length; ++t) {
      if (row[size_t(t)].valid && row[size_t(t) + 1].valid)
        d[size_t(t)] = row[size_t(t) + 1].pos() - row[size_t(t)].pos();
    }
    out.push_back(std::move(d));
  }
  return out;
}

int window_count(const Scene& scene) { return std::max(0, scene.length() - (kWindowLength - 1)); }

WindowRange::WindowRange(const Scene& scene) : scene_(&scene) {}

WindowRange window_iter(const Scene& scene) {
  if (scene.length() < kWindowLength)
    throw SceneTooShort("scene '" + scene.scene_id + "' has " + std::to_string(scene.length()) +
                        " frames, need at least " + std::to_string(kWindowLength));
  return WindowRange(scene);
}

}  // namespace maad::core
