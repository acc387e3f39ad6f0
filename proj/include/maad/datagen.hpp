#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maad/core.hpp"

namespace maad::datagen {

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi]
  double speed = 0.0;    // m/s, >= 0
};

struct ControlCommand {
  double accel = 0.0;  // m/s^2, signed
  double steer = 0.0;  // rad, front-wheel angle
};

// Kinematic bicycle model defaults; the bounds approximate urban driving.
struct KinematicsLimits {
  double wheelbase = 2.5;  // m
  double a_max = 4.0;      // m/s^2
  double steer_max = 0.5;  // rad
  double v_max = 15.0;     // m/s
};

VehicleState step_kinematics(const VehicleState& state, const ControlCommand& cmd, double dt,
                             double wheelbase = 2.5);

struct LabelInterval {
  int begin = 0;  // frame, inclusive
  int end = 0;    // frame, exclusive
  core::LabelCategory category = core::LabelCategory::Normal;
  std::string subclass;
};

struct SpeedKnot {
  double t = 0.0;  // s
  double v = 0.0;  // m/s
};

enum class LateralKind { None, Sine, Bump, RampHold, RampHoldReturn };

struct LateralProfile {
  LateralKind kind = LateralKind::None;
  double t0 = 0.0;
  double dur = 0.0;     // ramp or bump duration
  double amp = 0.0;     // m, positive = left of route direction
  double period = 2.0;  // Sine only
  double cycles = 2.0;  // Sine only
  double hold = 0.0;    // RampHoldReturn only
};

double lateral_at(const LateralProfile& p, double t);
double speed_at(const std::vector<SpeedKnot>& knots, double t);

// Blend the reference from `route` onto `alt_route` over [t0, t0+dur].
struct RouteBlend {
  bool active = false;
  double t0 = 0.0;
  double dur = 1.0;
};

// A fully resolved maneuver recipe: route plus longitudinal/lateral profiles.
// `params` keeps the class-level knobs for provenance.
struct ManeuverScript {
  std::string subclass;
  std::map<std::string, double> params;
  std::vector<LabelInterval> label_intervals;
  int frames = 50;
  std::vector<std::string> route;
  std::vector<std::string> alt_route;
  double start_offset = 0.0;  // arc-length along route at frame 0
  std::vector<SpeedKnot> speed_knots;
  LateralProfile lateral;
  RouteBlend blend;
  // gap-clamped following (tailgating): never closer than follow_gap to the
  // given background agent, which must share the target's route
  int follow_leader = -1;
  double follow_gap = 2.0;
};

struct BackgroundAgent {
  std::string agent_id;
  core::AgentRole role = core::AgentRole::Other;
  std::vector<std::string> route;
  double start_offset = 0.0;
  double speed = 0.0;
};

struct WorldSpec {
  std::string template_id;
  core::LaneGraph lanes;
  std::vector<BackgroundAgent> backgrounds;
};

// "straight", "curve", "t_intersection", "crossing"
const std::vector<std::string>& world_template_ids();
core::LaneGraph make_world_lanes(const std::string& template_id);

struct Scenario {
  WorldSpec world;
  ManeuverScript script;
};

// Builds the parametric scenario for one of the 22 subclasses. `overrides`
// replaces class parameter defaults; `duration_range` clamps scene length.
Scenario make_scenario(const std::string& subclass,
                       const std::map<std::string, double>& overrides, Rng& rng,
                       const KinematicsLimits& limits = {},
                       std::optional<std::pair<double, double>> duration_range = std::nullopt,
                       const std::string& world_override = "auto");

// Animates the target through the kinematic car model along the script's
// reference path, replays backgrounds, and attaches labels. Deterministic.
core::Scene generate_scene(const WorldSpec& world, const ManeuverScript& script, uint64_t seed,
                           const KinematicsLimits& limits = {});

struct ClassCount {
  std::string subclass;
  int count = 0;
  std::map<std::string, double> params;
};

struct DatasetConfig {
  uint64_t seed = 0;
  std::string world = "auto";
  std::optional<std::pair<double, double>> duration_s;
  KinematicsLimits limits;
  int train_scenes = 200;
  int val_scenes = 40;
  std::vector<ClassCount> test_classes;  // empty -> paper-like default (80/80)
  std::optional<std::vector<ClassCount>> train_classes;
  std::optional<std::vector<ClassCount>> val_classes;
};

DatasetConfig default_dataset_config();
DatasetConfig parse_dataset_config(const nlohmann::ordered_json& j);
nlohmann::ordered_json dataset_config_to_json(const DatasetConfig& c);

// Writes train/ val/ test/ splits plus manifest.json and config.json under
// out_dir; returns the manifest. Byte-identical for identical config+seed.
nlohmann::ordered_json generate_dataset(const DatasetConfig& config,
                                        const std::filesystem::path& out_dir, uint64_t seed,
                                        int jobs = 1);

}  // namespace maad::datagen
