#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maad/common.hpp"

namespace maad::core {

constexpr double kDt = 0.1;  // 10 Hz frame step, seconds
constexpr int kWindowLength = 16;
constexpr double kHeadingEps = 1e-9;  // below this displacement a segment is "not moving"

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  bool valid = false;  // padded states carry (0,0) and valid == false

  Vec2 pos() const { return {x, y}; }
};

enum class AgentRole { Target, Other, Ego };

struct Trajectory {
  std::string agent_id;
  AgentRole role = AgentRole::Other;
  // One entry per scene frame on the 10 Hz grid; missing observations are
  // invalid entries so every trajectory covers the full frame range.
  std::vector<AgentState> states;
};

struct Lane {
  std::string id;
  std::vector<Vec2> centerline;  // >= 2 points
  std::vector<std::string> successors;
  std::vector<std::string> predecessors;
  std::optional<std::string> left_neighbor;
  std::optional<std::string> right_neighbor;

  double length() const;
  // Point / direction at arc-length s (clamped to the polyline).
  Vec2 point_at(double s) const;
  Vec2 direction_at(double s) const;
};

struct LaneGraph {
  std::vector<Lane> lanes;

  bool empty() const { return lanes.empty(); }
  const Lane* find(const std::string& id) const;
  // Throws SchemaError on dangling references, short centerlines or NaNs.
  void validate() const;
};

enum class LabelCategory { Normal, Abnormal, Ignore };

std::string to_string(LabelCategory c);
LabelCategory label_category_from_string(const std::string& s);

// The closed 22-class taxonomy.
const std::vector<std::string>& abnormal_subclasses();  // 13
const std::vector<std::string>& normal_subclasses();    // 9
bool is_abnormal_subclass(const std::string& s);
bool is_normal_subclass(const std::string& s);

struct FrameLabel {
  int frame_index = 0;
  LabelCategory category = LabelCategory::Normal;
  std::string subclass;  // empty iff category == Ignore
};

struct Scene {
  std::string scene_id;
  double start_time = 0.0;  // seconds of frame 0; frame k is at start_time + k*kDt
  std::vector<Trajectory> trajectories;
  LaneGraph lane_graph;
  std::vector<FrameLabel> labels;  // empty for train/val scenes

  int length() const {
    return trajectories.empty() ? 0 : int(trajectories.front().states.size());
  }
  const Trajectory* target() const;
};

// Rigid transform of the target-centric frame: local = R(-rotation) * (world - translation).
struct Pose {
  Vec2 translation;
  double rotation = 0.0;

  Vec2 to_local(const Vec2& world) const { return (world - translation).rotated(-rotation); }
  Vec2 to_world(const Vec2& local) const { return local.rotated(rotation) + translation; }
};

struct Window {
  // agents[i] has kWindowLength states in the target-centric frame; index 0 is
  // always the target. frame_of_score is the scene frame of the last step.
  std::vector<std::vector<AgentState>> agents;
  int target_index = 0;
  int frame_of_score = 0;
  Pose pose;

  int length() const { return agents.empty() ? 0 : int(agents.front().size()); }
  int agent_count() const { return int(agents.size()); }
  const std::vector<AgentState>& target() const { return agents[size_t(target_index)]; }
};

// Builds the T=16 window ending at end_frame. Agents absent at end_frame are
// excluded; missing observations inside the window become zero padding.
Window to_target_frame(const Scene& scene, int end_frame);

// Per-agent T-1 displacement vectors; steps touching a padded state are (0,0).
std::vector<std::vector<Vec2>> to_displacements(const Window& window);

int window_count(const Scene& scene);  // max(0, L - 15)

// Ordered stream of windows, one per frame from 15 to L-1.
class WindowRange {
 public:
  explicit WindowRange(const Scene& scene);

  class iterator {
   public:
    iterator(const Scene* scene, int end_frame) : scene_(scene), end_frame_(end_frame) {}
    Window operator*() const { return to_target_frame(*scene_, end_frame_); }
    iterator& operator++() {
      ++end_frame_;
      return *this;
    }
    bool operator!=(const iterator& o) const { return end_frame_ != o.end_frame_; }

   private:
    const Scene* scene_;
    int end_frame_;
  };

  iterator begin() const { return iterator(scene_, kWindowLength - 1); }
  iterator end() const { return iterator(scene_, scene_->length()); }

 private:
  const Scene* scene_;
};

WindowRange window_iter(const Scene& scene);  // throws SceneTooShort if L < 16

}  // namespace maad::core
