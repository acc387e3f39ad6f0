#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "maad/datagen.hpp"
#include "maad/dataio.hpp"

using namespace maad;
using namespace maad::datagen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static uint64_t counter = 0;
    path = fs::temp_directory_path() / ("maad_datagen_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

core::Scene make_scene(const std::string& subclass, uint64_t seed,
                       std::map<std::string, double> params = {}) {
  Rng rng(seed);
  const Scenario sc = make_scenario(subclass, params, rng);
  return generate_scene(sc.world, sc.script, seed);
}

// signed lateral offset of a point from the nearest spot on a lane centerline
double lateral_offset(const core::Lane& lane, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  double best_signed = 0.0;
  for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
    const Vec2 a = lane.centerline[i], b = lane.centerline[i + 1];
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.norm_sq(), 0.0, 1.0);
    const Vec2 closest = a + ab * t;
    const double d = (p - closest).norm();
    if (d < best) {
      best = d;
      best_signed = ab.normalized().cross(p - closest) >= 0.0 ? d : -d;
    }
  }
  return best_signed;
}

const core::Lane* nearest_lane(const core::LaneGraph& g, Vec2 p) {
  const core::Lane* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& lane : g.lanes) {
    const double d = std::abs(lateral_offset(lane, p));
    if (d < best_d) {
      best_d = d;
      best = &lane;
    }
  }
  return best;
}

Vec2 lane_direction_near(const core::Lane& lane, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 dir{1, 0};
  for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
    const Vec2 a = lane.centerline[i], b = lane.centerline[i + 1];
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.norm_sq(), 0.0, 1.0);
    const double d = (p - (a + ab * t)).norm();
    if (d < best) {
      best = d;
      dir = ab.normalized();
    }
  }
  return dir;
}

}  // namespace

TEST_CASE("step_kinematics straight motion") {
  VehicleState s;
  s.speed = 10.0;
  const VehicleState next = step_kinematics(s, {0.0, 0.0}, 0.1);
  CHECK(next.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next.y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero steering keeps heading and lateral position") {
  VehicleState s;
  s.speed = 7.0;
  s.y = 2.5;
  for (int k = 0; k < 100; ++k) s = step_kinematics(s, {0.5, 0.0}, 0.1);
  CHECK(s.y == 2.5);
  CHECK(s.heading == 0.0);
}

TEST_CASE("one steered step matches the closed form") {
  VehicleState s;
  s.speed = 10.0;
  const VehicleState next = step_kinematics(s, {0.0, 0.1}, 0.1, 2.5);
  CHECK(next.heading == doctest::Approx(10.0 / 2.5 * std::tan(0.1) * 0.1).epsilon(1e-12));
}

TEST_CASE("heading wraps and speed clamps at zero") {
  VehicleState s;
  s.heading = M_PI - 0.01;
  s.speed = 10.0;
  const VehicleState turned = step_kinematics(s, {0.0, 0.4}, 0.1);
  CHECK(turned.heading <= M_PI);
  CHECK(turned.heading > -M_PI);

  VehicleState slow;
  slow.speed = 0.2;
  const VehicleState stopped = step_kinematics(slow, {-4.0, 0.0}, 0.1);
  CHECK(stopped.speed == 0.0);
}

TEST_CASE("straight script stays on the centerline with NORMAL labels") {
  const core::Scene scene = make_scene("straight", 11, {{"duration_s", 5.0}});
  const core::Lane* lane = nearest_lane(scene.lane_graph, scene.target()->states[0].pos());
  REQUIRE(lane != nullptr);
  for (const auto& st : scene.target()->states)
    CHECK(std::abs(lateral_offset(*lane, st.pos())) < 0.05);
  for (const auto& l : scene.labels) {
    CHECK(l.category == core::LabelCategory::Normal);
    CHECK(l.subclass == "straight");
  }
}

TEST_CASE("staggering amplitude stays in the documented band") {
  for (const uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const core::Scene scene =
        make_scene("staggering", seed, {{"amplitude", 1.0}, {"period_s", 2.0}});
    // the scripted route is the inner forward lane
    const core::Lane* lane = scene.lane_graph.find("f0a");
    REQUIRE(lane != nullptr);
    core::Lane full = *lane;
    const core::Lane* lane_b = scene.lane_graph.find("f0b");
    full.centerline.insert(full.centerline.end(), lane_b->centerline.begin(),
                           lane_b->centerline.end());
    double max_dev = 0.0;
    for (const auto& l : scene.labels) {
      if (l.category != core::LabelCategory::Abnormal) continue;
      const Vec2 p = scene.target()->states[size_t(l.frame_index)].pos();
      max_dev = std::max(max_dev, std::abs(lateral_offset(full, p)));
    }
    CHECK(max_dev >= 0.9);
    CHECK(max_dev <= 1.1);
  }
}

TEST_CASE("ghost driver opposes its occupied lane on every abnormal frame") {
  const core::Scene scene = make_scene("ghost_driver", 21);
  for (const auto& l : scene.labels) {
    if (l.category != core::LabelCategory::Abnormal) continue;
    const int k = l.frame_index;
    if (k + 1 >= scene.length()) continue;
    const Vec2 p = scene.target()->states[size_t(k)].pos();
    const Vec2 heading =
        (scene.target()->states[size_t(k) + 1].pos() - p).normalized();
    const core::Lane* lane = nearest_lane(scene.lane_graph, p);
    REQUIRE(lane != nullptr);
    CHECK(heading.dot(lane_direction_near(*lane, p)) < 0.0);
  }
}

TEST_CASE("tailgating closes to the scripted minimum gap") {
  const core::Scene scene = make_scene("tailgating", 31);
  const core::Trajectory* leader = nullptr;
  for (const auto& t : scene.trajectories)
    if (t.agent_id == "lead") leader = &t;
  REQUIRE(leader != nullptr);
  const int last = scene.length() - 1;
  const double gap =
      (leader->states[size_t(last)].pos() - scene.target()->states[size_t(last)].pos()).norm();
  CHECK(gap > 1.5);
  CHECK(gap < 3.0);
}

TEST_CASE("dynamics bounds hold for every class by finite differencing") {
  const KinematicsLimits limits;
  int checked = 0;
  for (const auto& subclass : core::abnormal_subclasses()) {
    const core::Scene scene = make_scene(subclass, 5);
    const auto& states = scene.target()->states;
    for (size_t k = 0; k + 2 < states.size(); ++k) {
      const double v0 = (states[k + 1].pos() - states[k].pos()).norm() / core::kDt;
      const double v1 = (states[k + 2].pos() - states[k + 1].pos()).norm() / core::kDt;
      CHECK(v0 <= limits.v_max + 1e-9);
      CHECK(std::abs(v1 - v0) / core::kDt <= limits.a_max + 1e-6);
    }
    ++checked;
  }
  for (const auto& subclass : core::normal_subclasses()) {
    const core::Scene scene = make_scene(subclass, 6);
    const auto& states = scene.target()->states;
    for (size_t k = 0; k + 2 < states.size(); ++k) {
      const double v0 = (states[k + 1].pos() - states[k].pos()).norm() / core::kDt;
      const double v1 = (states[k + 2].pos() - states[k + 1].pos()).norm() / core::kDt;
      CHECK(v0 <= limits.v_max + 1e-9);
      CHECK(std::abs(v1 - v0) / core::kDt <= limits.a_max + 1e-6);
    }
    ++checked;
  }
  CHECK(checked == 22);
}

TEST_CASE("every frame carries exactly one label category") {
  for (const auto& subclass : core::abnormal_subclasses()) {
    const core::Scene scene = make_scene(subclass, 13);
    REQUIRE(int(scene.labels.size()) == scene.length());
    for (int k = 0; k < scene.length(); ++k) {
      CHECK(scene.labels[size_t(k)].frame_index == k);
      const bool ignore = scene.labels[size_t(k)].category == core::LabelCategory::Ignore;
      CHECK(scene.labels[size_t(k)].subclass.empty() == ignore);
    }
    // there is at least one abnormal and one ignore frame (transition bands)
    int abnormal = 0, ignored = 0;
    for (const auto& l : scene.labels) {
      abnormal += l.category == core::LabelCategory::Abnormal;
      ignored += l.category == core::LabelCategory::Ignore;
    }
    CHECK(abnormal > 0);
    CHECK(ignored > 0);
  }
}

TEST_CASE("backgrounds are identical across scripts sharing world and seed") {
  Rng rng_a(77), rng_b(77);
  const Scenario sa = make_scenario("brake", {}, rng_a, {}, std::nullopt, "straight");
  const Scenario sb = make_scenario("accelerate", {}, rng_b, {}, std::nullopt, "straight");
  // same world spec by construction (same template, same rng stream)
  REQUIRE(sa.world.backgrounds.size() == sb.world.backgrounds.size());
  const core::Scene scene_a = generate_scene(sa.world, sa.script, 77);
  const core::Scene scene_b = generate_scene(sb.world, sb.script, 77);
  const int frames = std::min(scene_a.length(), scene_b.length());
  for (size_t i = 1; i < scene_a.trajectories.size(); ++i) {
    for (int k = 0; k < frames; ++k) {
      const auto& a = scene_a.trajectories[i].states[size_t(k)];
      const auto& b = scene_b.trajectories[i].states[size_t(k)];
      CHECK(a.valid == b.valid);
      CHECK(a.x == b.x);
      CHECK(a.y == b.y);
    }
  }
}

TEST_CASE("scripts referencing missing lanes are infeasible") {
  Rng rng(3);
  Scenario sc = make_scenario("straight", {}, rng, {}, std::nullopt, "straight");
  sc.script.route = {"not_a_lane"};
  CHECK_THROWS_AS(generate_scene(sc.world, sc.script, 3), InfeasibleScript);
}

TEST_CASE("initial conditions come from the scripted route") {
  Rng rng(9);
  const Scenario sc = make_scenario("straight", {{"v0", 8.0}, {"offset", 120.0}}, rng, {},
                                    std::nullopt, "straight");
  const core::Scene scene = generate_scene(sc.world, sc.script, 9);
  const Vec2 p0 = scene.target()->states[0].pos();
  const Vec2 p1 = scene.target()->states[1].pos();
  CHECK(p0.x == doctest::Approx(-80.0).epsilon(1e-9));  // offset 120 on a lane from -200
  CHECK(p0.y == doctest::Approx(1.75).epsilon(1e-9));
  CHECK((p1 - p0).norm() / core::kDt == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("world templates validate and cover the taxonomy") {
  for (const auto& id : world_template_ids()) {
    const core::LaneGraph g = make_world_lanes(id);
    CHECK_NOTHROW(g.validate());
    CHECK(g.lanes.size() >= 6);
  }
  CHECK_THROWS_AS(make_world_lanes("nope"), ConfigError);
}

TEST_CASE("default dataset config generates the paper-sized test split") {
  TempDir tmp;
  DatasetConfig config = default_dataset_config();
  config.train_scenes = 4;  // keep the unit test quick
  config.val_scenes = 2;
  const auto manifest = generate_dataset(config, tmp.path, 123, 2);
  CHECK(manifest["splits"]["test"]["scenes"].get<int>() == 160);
  int abnormal_scenes = 0, normal_scenes = 0;
  for (const auto& [name, slot] : manifest["splits"]["test"]["per_class"].items())
    (core::is_abnormal_subclass(name) ? abnormal_scenes : normal_scenes) +=
        slot["scenes"].get<int>();
  CHECK(abnormal_scenes == 80);
  CHECK(normal_scenes == 80);
  // per-class frame counts are reported
  CHECK(manifest["splits"]["test"]["per_class"]["ghost_driver"]["abnormal_frames"].get<int>() > 0);
  CHECK(fs::exists(tmp.path / "config.json"));
  CHECK(fs::exists(tmp.path / "manifest.json"));
}

TEST_CASE("same seed twice produces byte-identical trees") {
  TempDir tmp;
  DatasetConfig config = default_dataset_config();
  config.train_scenes = 3;
  config.val_scenes = 1;
  config.test_classes = {{"staggering", 2, {}}, {"straight", 2, {}}};
  generate_dataset(config, tmp.path / "a", 7, 1);
  generate_dataset(config, tmp.path / "b", 7, 2);  // jobs must not matter
  for (const auto& entry : fs::recursive_directory_iterator(tmp.path / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), tmp.path / "a");
    CHECK(dataio::read_text_file(entry.path()) == dataio::read_text_file(tmp.path / "b" / rel));
  }
  // different seed differs somewhere in the target trajectory
  generate_dataset(config, tmp.path / "c", 8, 1);
  CHECK(dataio::read_text_file(tmp.path / "a" / "test" / "test_0000.csv") !=
        dataio::read_text_file(tmp.path / "c" / "test" / "test_0000.csv"));
}

TEST_CASE("generated scenes load back through dataio") {
  TempDir tmp;
  DatasetConfig config = default_dataset_config();
  config.train_scenes = 2;
  config.val_scenes = 1;
  config.test_classes = {{"swerving_left", 1, {}}};
  generate_dataset(config, tmp.path, 55, 1);
  const auto test_scenes = dataio::read_scene_dir(tmp.path / "test");
  REQUIRE(test_scenes.size() == 1);
  CHECK(test_scenes[0].target() != nullptr);
  CHECK_FALSE(test_scenes[0].labels.empty());
  CHECK_FALSE(test_scenes[0].lane_graph.empty());
  const auto train_scenes = dataio::read_scene_dir(tmp.path / "train");
  CHECK(train_scenes.size() == 2);
  CHECK(train_scenes[0].labels.empty());
}
