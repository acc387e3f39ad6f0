#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "maad/core.hpp"
#include "testutil.hpp"

using namespace maad;
using namespace maad::core;

namespace {

Scene two_point_heading_scene() {
  // target moves (5,5) -> (6,5) over the last step of a 16-frame scene
  Scene scene;
  Trajectory target;
  target.agent_id = "t";
  target.role = AgentRole::Target;
  for (int k = 0; k < 16; ++k) {
    const double x = 5.0 - (15 - k) * 1.0;  // ends at x=5... adjusted below
    target.states.push_back({x, 5.0, true});
  }
  target.states[14] = {5.0, 5.0, true};
  target.states[15] = {6.0, 5.0, true};
  scene.trajectories.push_back(std::move(target));
  return scene;
}

}  // namespace

TEST_CASE("to_target_frame centers the target at the origin") {
  Scene scene = testutil::make_linear_scene(20, {5.0, 5.0}, {10.0, 0.0});
  const Window w = to_target_frame(scene, 16);
  const AgentState& last = w.target()[15];
  CHECK(last.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(last.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w.frame_of_score == 16);
}

TEST_CASE("to_target_frame maps a world point by the rigid transform") {
  // pose from (5,5)->(6,5): heading 0, origin (6,5); world (7,5) -> (1,0)
  Scene scene = two_point_heading_scene();
  const Window w = to_target_frame(scene, 15);
  const Vec2 local = w.pose.to_local({7.0, 5.0});
  CHECK(local.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(local.y == doctest::Approx(0.0).epsilon(1e-12));
  // heading lines up with +x
  const Vec2 d = w.target()[15].pos() - w.target()[14].pos();
  CHECK(std::atan2(d.y, d.x) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("stationary target falls back to the last moving segment") {
  Scene scene;
  Trajectory target;
  target.agent_id = "t";
  target.role = AgentRole::Target;
  // moves along +y until frame 8, then parks
  for (int k = 0; k < 20; ++k) {
    const double y = std::min(k, 8) * 1.0;
    target.states.push_back({2.0, y, true});
  }
  scene.trajectories.push_back(std::move(target));
  const Window w = to_target_frame(scene, 19);
  CHECK(w.pose.rotation == doctest::Approx(M_PI / 2).epsilon(1e-12));

  // never moved at all -> identity rotation
  Scene parked;
  Trajectory stay;
  stay.agent_id = "t";
  stay.role = AgentRole::Target;
  for (int k = 0; k < 20; ++k) stay.states.push_back({3.0, 4.0, true});
  parked.trajectories.push_back(std::move(stay));
  CHECK(to_target_frame(parked, 19).pose.rotation == 0.0);
}

TEST_CASE("window errors") {
  Scene scene = testutil::make_linear_scene(20, {0, 0}, {1, 0});
  CHECK_THROWS_AS(to_target_frame(scene, 14), FrameOutOfRange);
  CHECK_THROWS_AS(to_target_frame(scene, 20), FrameOutOfRange);
  Scene no_target = scene;
  no_target.trajectories[0].role = AgentRole::Other;
  CHECK_THROWS_AS(to_target_frame(no_target, 15), MissingTarget);
}

TEST_CASE("agents absent at the last frame are excluded, partial ones padded") {
  Scene scene = testutil::make_linear_scene(20, {0, 0}, {8, 0}, 2);
  // other0 disappears before the end; other1 appears mid-window
  for (int k = 15; k < 20; ++k) scene.trajectories[1].states[size_t(k)] = {};
  for (int k = 0; k < 10; ++k) scene.trajectories[2].states[size_t(k)] = {};
  const Window w = to_target_frame(scene, 19);
  CHECK(w.agent_count() == 2);  // target + other1
  CHECK(w.target_index == 0);
  const auto& padded = w.agents[1];
  for (int t = 0; t < 6; ++t) {  // frames 4..9 of the window are pre-appearance
    CHECK_FALSE(padded[size_t(t)].valid);
    CHECK(padded[size_t(t)].x == 0.0);
    CHECK(padded[size_t(t)].y == 0.0);
  }
  CHECK(padded[6].valid);
}

TEST_CASE("padding mask soundness on random scenes") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Rng scene_rng = rng.derive(uint64_t(trial));
    Scene scene = testutil::make_random_scene(30, 3, scene_rng);
    // punch random holes in non-target trajectories
    for (size_t a = 1; a < scene.trajectories.size(); ++a)
      for (int k = 0; k < 29; ++k)  // keep the final frame observed
        if (scene_rng.uniform() < 0.2) scene.trajectories[a].states[size_t(k)] = {};
    const int end = 29;
    const Window w = to_target_frame(scene, end);
    size_t wi = 1;
    for (size_t a = 1; a < scene.trajectories.size(); ++a) {
      const auto& traj = scene.trajectories[a];
      if (!traj.states[size_t(end)].valid) continue;
      for (int t = 0; t < kWindowLength; ++t) {
        const bool observed = traj.states[size_t(end - 15 + t)].valid;
        CHECK(w.agents[wi][size_t(t)].valid == observed);
      }
      ++wi;
    }
    CHECK(wi == size_t(w.agent_count()));
  }
}

TEST_CASE("rigid transform preserves pairwise distances") {
  Rng rng(1234);
  for (int trial = 0; trial < 10; ++trial) {
    Rng scene_rng = rng.derive(uint64_t(trial));
    Scene scene = testutil::make_random_scene(25, 4, scene_rng);
    const Window w = to_target_frame(scene, 20);
    for (int t = 0; t < kWindowLength; ++t) {
      const int frame = 20 - 15 + t;
      for (int a = 0; a < w.agent_count(); ++a) {
        for (int b = a + 1; b < w.agent_count(); ++b) {
          if (!w.agents[size_t(a)][size_t(t)].valid || !w.agents[size_t(b)][size_t(t)].valid)
            continue;
          const double local =
              (w.agents[size_t(a)][size_t(t)].pos() - w.agents[size_t(b)][size_t(t)].pos()).norm();
          // windows keep scene order with the target hoisted to the front
          const auto world_of = [&](int wi) {
            int count = 0;
            if (wi == 0) return scene.target()->states[size_t(frame)].pos();
            for (const auto& traj : scene.trajectories) {
              if (traj.role == AgentRole::Target) continue;
              if (!traj.states[20].valid) continue;
              if (++count == wi) return traj.states[size_t(frame)].pos();
            }
            REQUIRE(false);
            return Vec2{};
          };
          const double world = (world_of(a) - world_of(b)).norm();
          CHECK(std::abs(local - world) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("to_displacements hand cases and round trip") {
  Scene constant = testutil::make_linear_scene(20, {3, 3}, {0, 0});
  Window w = to_target_frame(constant, 15);
  const auto constant_disp = to_displacements(w);
  for (const auto& d : constant_disp[0]) {
    CHECK(d.x == 0.0);
    CHECK(d.y == 0.0);
  }

  // positions (0,0),(1,0),(3,0) -> displacements (1,0),(2,0)
  Window hand;
  hand.agents = {{{0, 0, true}, {1, 0, true}, {3, 0, true}}};
  const auto hand_disp = to_displacements(hand);
  REQUIRE(hand_disp[0].size() == 2);
  CHECK(hand_disp[0][0].x == 1.0);
  CHECK(hand_disp[0][1].x == 2.0);

  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Rng scene_rng = rng.derive(uint64_t(trial));
    Scene scene = testutil::make_random_scene(20, 2, scene_rng);
    const Window win = to_target_frame(scene, 18);
    const auto disp = to_displacements(win);
    for (int a = 0; a < win.agent_count(); ++a) {
      Vec2 acc = win.agents[size_t(a)][0].pos();
      for (int t = 0; t + 1 < kWindowLength; ++t) {
        acc += disp[size_t(a)][size_t(t)];
        const Vec2 expect = win.agents[size_t(a)][size_t(t) + 1].pos();
        CHECK(std::abs(acc.x - expect.x) < 1e-12);
        CHECK(std::abs(acc.y - expect.y) < 1e-12);
      }
    }
  }
}

TEST_CASE("window_iter yields L-15 windows in order") {
  Scene scene = testutil::make_linear_scene(50, {0, 0}, {5, 0});
  int count = 0, expect_frame = 15;
  for (const Window& w : window_iter(scene)) {
    CHECK(w.frame_of_score == expect_frame++);
    ++count;
  }
  CHECK(count == 35);
  CHECK(window_count(scene) == 35);

  Scene minimal = testutil::make_linear_scene(16, {0, 0}, {5, 0});
  int n = 0;
  for (const Window& w : window_iter(minimal)) {
    CHECK(w.frame_of_score == 15);
    ++n;
  }
  CHECK(n == 1);

  Scene tiny = testutil::make_linear_scene(15, {0, 0}, {5, 0});
  CHECK_THROWS_AS(window_iter(tiny), SceneTooShort);
  CHECK(window_count(tiny) == 0);

  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int length = 16 + rng.uniform_int(80);
    Scene s = testutil::make_linear_scene(length, {0, 0}, {3, 1});
    int c = 0;
    for ([[maybe_unused]] const Window& w : window_iter(s)) ++c;
    CHECK(c == length - 15);
  }
}

TEST_CASE("taxonomy is the closed 22-class set") {
  CHECK(abnormal_subclasses().size() == 13);
  CHECK(normal_subclasses().size() == 9);
  CHECK(is_abnormal_subclass("ghost_driver"));
  CHECK(is_normal_subclass("lane_change_left"));
  CHECK_FALSE(is_abnormal_subclass("lane_change_left"));
  CHECK_FALSE(is_normal_subclass("warp_drive"));
}

TEST_CASE("lane graph validation") {
  LaneGraph g = testutil::make_mini_map();
  CHECK_NOTHROW(g.validate());
  g.lanes[0].successors.push_back("missing");
  CHECK_THROWS_AS(g.validate(), SchemaError);
}
