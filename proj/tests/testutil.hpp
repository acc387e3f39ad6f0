#pragma once

#include <functional>
#include <vector>

#include "maad/core.hpp"
#include "maad/diffcalc.hpp"
#include "maad/models.hpp"

namespace maad::testutil {

// Builds a scalar loss from one leaf Var per parameter (same order) so both
// analytic gradients and finite differences can be evaluated from one place.
using LossBuilder = std::function<diffcalc::Var(const std::vector<diffcalc::Var>&)>;

inline std::vector<diffcalc::Var> make_leaves(const std::vector<diffcalc::Parameter>& params) {
  std::vector<diffcalc::Var> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(diffcalc::leaf(p.value));
  return leaves;
}

// max relative error between analytic and central-difference gradients;
// coords_per_tensor == 0 checks every coordinate
inline double gradcheck_max_rel_err(std::vector<diffcalc::Parameter>& params,
                                    const LossBuilder& build, Rng& coord_rng,
                                    int coords_per_tensor = 0, double eps = 1e-5) {
  auto eval = [&]() {
    const auto leaves = make_leaves(params);
    return build(leaves)->value.data[0];
  };
  const auto leaves = make_leaves(params);
  const diffcalc::Var loss = build(leaves);
  diffcalc::backward(loss);

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& data = params[pi].value.data;
    std::vector<size_t> coords;
    if (coords_per_tensor <= 0 || int(data.size()) <= coords_per_tensor) {
      coords.resize(data.size());
      for (size_t c = 0; c < data.size(); ++c) coords[c] = c;
    } else {
      for (int k = 0; k < coords_per_tensor; ++k)
        coords.push_back(size_t(coord_rng.uniform_int(int(data.size()))));
    }
    for (const size_t c : coords) {
      const double saved = data[c];
      data[c] = saved + eps;
      const double fp = eval();
      data[c] = saved - eps;
      const double fm = eval();
      data[c] = saved;
      const double fd = (fp - fm) / (2.0 * eps);
      const double analytic = leaves[pi]->grad.data[c];
      const double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-5});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

inline models::Binding binding_from_leaves(const models::DeepModel& model,
                                           const std::vector<diffcalc::Var>& leaves) {
  models::Binding b;
  for (size_t i = 0; i < model.params.size(); ++i)
    b.vars.emplace_back(model.params[i].name, leaves[i]);
  return b;
}

// straight-line scene: target plus n_others parallel agents, constant velocity
inline core::Scene make_linear_scene(int length, Vec2 start, Vec2 vel, int n_others = 0) {
  core::Scene scene;
  scene.scene_id = "linear";
  core::Trajectory target;
  target.agent_id = "target";
  target.role = core::AgentRole::Target;
  for (int k = 0; k < length; ++k) {
    const Vec2 p = start + vel * (k * core::kDt);
    target.states.push_back({p.x, p.y, true});
  }
  scene.trajectories.push_back(std::move(target));
  for (int i = 0; i < n_others; ++i) {
    core::Trajectory other;
    other.agent_id = "other" + std::to_string(i);
    other.role = core::AgentRole::Other;
    for (int k = 0; k < length; ++k) {
      const Vec2 p = start + Vec2{0.0, 4.0 * (i + 1)} + vel * (k * core::kDt);
      other.states.push_back({p.x, p.y, true});
    }
    scene.trajectories.push_back(std::move(other));
  }
  return scene;
}

// jagged random-walk scene, seeded; useful for property tests
inline core::Scene make_random_scene(int length, int n_others, Rng& rng) {
  core::Scene scene;
  scene.scene_id = "random";
  const int agents = 1 + n_others;
  for (int i = 0; i < agents; ++i) {
    core::Trajectory traj;
    traj.agent_id = i == 0 ? "target" : ("other" + std::to_string(i));
    traj.role = i == 0 ? core::AgentRole::Target : core::AgentRole::Other;
    Vec2 p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
    Vec2 v{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    for (int k = 0; k < length; ++k) {
      traj.states.push_back({p.x, p.y, true});
      v += Vec2{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      p += v * core::kDt;
    }
    scene.trajectories.push_back(std::move(traj));
  }
  return scene;
}

// small 3-lane map around the origin for lanegcn tests
inline core::LaneGraph make_mini_map() {
  core::LaneGraph g;
  auto mk = [](const std::string& id, double y, double x0, double x1) {
    core::Lane lane;
    lane.id = id;
    for (double x = x0; x <= x1 + 1e-9; x += 5.0) lane.centerline.push_back({x, y});
    return lane;
  };
  core::Lane a = mk("a", 0.0, -40.0, 0.0);
  core::Lane b = mk("b", 0.0, 0.0, 40.0);
  core::Lane c = mk("c", 3.5, -40.0, 40.0);
  a.successors = {"b"};
  b.predecessors = {"a"};
  a.left_neighbor = "c";
  g.lanes = {a, b, c};
  return g;
}

}  // namespace maad::testutil
