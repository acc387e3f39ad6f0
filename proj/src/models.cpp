#include "maad/models.hpp"

#include <algorithm>
#include <cmath>

namespace maad::models {

namespace dc = maad::diffcalc;
using dc::Var;

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::Cvm:
      return "cvm";
    case Architecture::Lti:
      return "lti";
    case Architecture::Seq2Seq:
      return "seq2seq";
    case Architecture::Stgae:
      return "stgae";
    case Architecture::LanegcnAe:
      return "lanegcn_ae";
  }
  return "seq2seq";
}

std::string to_string(Objective o) { return o == Objective::Recon ? "recon" : "dsvdd"; }

Architecture architecture_from_string(const std::string& s) {
  if (s == "cvm") return Architecture::Cvm;
  if (s == "lti") return Architecture::Lti;
  if (s == "seq2seq") return Architecture::Seq2Seq;
  if (s == "stgae") return Architecture::Stgae;
  if (s == "lanegcn_ae") return Architecture::LanegcnAe;
  throw ConfigError("unknown architecture '" + s + "'");
}

Objective objective_from_string(const std::string& s) {
  if (s == "recon") return Objective::Recon;
  if (s == "dsvdd") return Objective::Dsvdd;
  throw ConfigError("unknown objective '" + s + "'");
}

// ---------------------------------------------------------------------------
// linear baselines

LinearResult cvm_reconstruct(std::span<const Vec2> traj) {
  const size_t T = traj.size();
  if (T < 2) throw ShapeMismatch("cvm_reconstruct: need at least 2 steps");
  const Vec2 v = traj[1] - traj[0];
  LinearResult out;
  out.reconstruction.resize(T);
  double err = 0.0;
  for (size_t t = 0; t < T; ++t) {
    out.reconstruction[t] = traj[0] + v * double(t);
    err += (traj[t] - out.reconstruction[t]).norm();
  }
  out.alpha = err / double(T);
  return out;
}

LinearResult lti_reconstruct(std::span<const Vec2> traj) {
  const size_t T = traj.size();
  if (T < 2) throw ShapeMismatch("lti_reconstruct: need at least 2 steps");
  const Vec2 span = traj[T - 1] - traj[0];
  LinearResult out;
  out.reconstruction.resize(T);
  double err = 0.0;
  for (size_t t = 0; t < T; ++t) {
    out.reconstruction[t] = traj[0] + span * (double(t) / double(T - 1));
    err += (traj[t] - out.reconstruction[t]).norm();
  }
  out.alpha = err / double(T);
  return out;
}

// ---------------------------------------------------------------------------
// parameters

diffcalc::Parameter* DeepModel::find(const std::string& name) {
  for (auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

const diffcalc::Parameter* DeepModel::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

namespace {

void add_param(std::vector<dc::Parameter>& params, const std::string& name, int rows, int cols,
               Rng& rng, bool zero = false) {
  params.emplace_back(name, zero ? dc::Tensor::zeros({rows, cols}) : dc::uniform_init(rows, cols, rng));
}

void add_lstm(std::vector<dc::Parameter>& params, const std::string& prefix, int in, int hidden,
              Rng& rng) {
  add_param(params, prefix + ".wx", in, 4 * hidden, rng);
  add_param(params, prefix + ".wh", hidden, 4 * hidden, rng);
  add_param(params, prefix + ".b", 1, 4 * hidden, rng, /*zero=*/true);
}

}  // namespace

DeepModel make_model(const ModelDescriptor& desc, uint64_t seed) {
  if (desc.architecture == Architecture::Cvm || desc.architecture == Architecture::Lti)
    throw ConfigError(to_string(desc.architecture) + " requires no parameters");
  if (desc.dims.latent != desc.dims.hidden)
    throw ConfigError("latent dimension must equal the LSTM hidden size");
  DeepModel model;
  model.desc = desc;
  Rng rng = Rng(seed).derive(0x1817);
  const int E = desc.dims.embed, H = desc.dims.hidden;
  switch (desc.architecture) {
    case Architecture::Seq2Seq:
      add_param(model.params, "enc_embed.w", 2, E, rng);
      add_param(model.params, "enc_embed.b", 1, E, rng, true);
      add_lstm(model.params, "enc_lstm", E, H, rng);
      add_param(model.params, "dec_embed.w", 2, E, rng);
      add_param(model.params, "dec_embed.b", 1, E, rng, true);
      add_lstm(model.params, "dec_lstm", E, H, rng);
      add_param(model.params, "out.w", H, 2, rng);
      add_param(model.params, "out.b", 1, 2, rng, true);
      break;
    case Architecture::Stgae:
      add_param(model.params, "graph_embed.w", 2, E, rng);
      add_param(model.params, "graph_embed.b", 1, E, rng, true);
      add_param(model.params, "gc.w", E, E, rng);
      add_param(model.params, "gc.w_res", E, E, rng);
      add_lstm(model.params, "enc_lstm", E, H, rng);
      add_param(model.params, "dec_embed.w", 2, E, rng);
      add_param(model.params, "dec_embed.b", 1, E, rng, true);
      add_lstm(model.params, "dec_lstm", E, H, rng);
      add_param(model.params, "out.w", H, 2, rng);
      add_param(model.params, "out.b", 1, 2, rng, true);
      break;
    case Architecture::LanegcnAe:
      add_param(model.params, "actor_embed.w", 2, E, rng);
      add_param(model.params, "actor_embed.b", 1, E, rng, true);
      add_lstm(model.params, "actor_lstm", E, H, rng);
      add_param(model.params, "lane_embed.w", 2, H, rng);
      add_param(model.params, "lane_embed.b", 1, H, rng, true);
      add_param(model.params, "lane_gc.w", H, H, rng);
      add_param(model.params, "lane_gc.w_res", H, H, rng);
      add_param(model.params, "l2a.w", H + 2, H, rng);
      add_param(model.params, "l2a.b", 1, H, rng, true);
      add_param(model.params, "a2a.w", H, H, rng);
      add_param(model.params, "a2a.w_res", H, H, rng);
      add_param(model.params, "head.w", H, 2 * (core::kWindowLength - 1), rng);
      add_param(model.params, "head.b", 1, 2 * (core::kWindowLength - 1), rng, true);
      break;
    default:
      break;
  }
  return model;
}

const Var& Binding::operator[](const std::string& name) const {
  for (const auto& [n, v] : vars)
    if (n == name) return v;
  throw ShapeMismatch("no bound parameter named '" + name + "'");
}

Binding bind_params(const DeepModel& model) {
  Binding b;
  b.vars.reserve(model.params.size());
  for (const auto& p : model.params) b.vars.emplace_back(p.name, dc::leaf(p.value));
  return b;
}

// ---------------------------------------------------------------------------
// shared pieces

namespace {

Var const_row(double x, double y) { return dc::constant(dc::Tensor::row({x, y})); }

// symmetric normalized adjacency D^-1/2 (A + I) D^-1/2 with A_jk = 1/(d+eps)
dc::Tensor distance_adjacency(const std::vector<Vec2>& positions) {
  const int n = int(positions.size());
  dc::Tensor a = dc::Tensor::zeros({n, n});
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) {
        a.at(j, k) = 1.0;
        continue;
      }
      const double d = (positions[size_t(j)] - positions[size_t(k)]).norm();
      a.at(j, k) = 1.0 / (d + kAdjacencyEps);
    }
  }
  std::vector<double> dinv(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    double deg = 0.0;
    for (int k = 0; k < n; ++k) deg += a.at(j, k);
    dinv[size_t(j)] = 1.0 / std::sqrt(deg);
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) a.at(j, k) *= dinv[size_t(j)] * dinv[size_t(k)];
  return a;
}

dc::Tensor normalize_adjacency(dc::Tensor a) {
  const int n = a.rows();
  std::vector<double> dinv(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    double deg = 0.0;
    for (int k = 0; k < n; ++k) deg += a.at(j, k);
    dinv[size_t(j)] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) a.at(j, k) *= dinv[size_t(j)] * dinv[size_t(k)];
  return a;
}

struct DecoderParams {
  Var embed_w, embed_b;
  dc::LstmWeights lstm;
  Var out_w, out_b;
};

// symmetric LSTM decoder: feeds back its own previous prediction
std::vector<Var> run_decoder(const DecoderParams& p, dc::LstmState state, int steps) {
  std::vector<Var> recon;
  recon.reserve(size_t(steps));
  Var prev = const_row(0.0, 0.0);
  for (int t = 0; t < steps; ++t) {
    const Var e = dc::add(dc::matmul(prev, p.embed_w), p.embed_b);
    state = dc::lstm_cell(e, state, p.lstm);
    prev = dc::add(dc::matmul(state.h, p.out_w), p.out_b);
    recon.push_back(prev);
  }
  return recon;
}

ForwardOut seq2seq_forward(const DeepModel& model, const Binding& b, const core::Window& window) {
  const double s = model.input_scale;
  const int T = window.length();
  const int H = model.desc.dims.hidden;
  const auto& target = window.target();

  std::vector<Var> inputs;
  inputs.reserve(size_t(T));
  for (int t = 0; t < T; ++t)
    inputs.push_back(const_row(target[size_t(t)].x / s, target[size_t(t)].y / s));

  dc::LstmWeights enc{b["enc_lstm.wx"], b["enc_lstm.wh"], b["enc_lstm.b"]};
  dc::LstmState state{dc::constant(dc::Tensor::zeros({1, H})),
                      dc::constant(dc::Tensor::zeros({1, H}))};
  for (int t = 0; t < T; ++t) {
    const Var e = dc::add(dc::matmul(inputs[size_t(t)], b["enc_embed.w"]), b["enc_embed.b"]);
    state = dc::lstm_cell(e, state, enc);
  }

  ForwardOut out;
  out.z = state.h;
  DecoderParams dec{b["dec_embed.w"], b["dec_embed.b"],
                    {b["dec_lstm.wx"], b["dec_lstm.wh"], b["dec_lstm.b"]},
                    b["out.w"], b["out.b"]};
  out.recon = run_decoder(dec, state, T);
  out.target_inputs = std::move(inputs);
  return out;
}

ForwardOut stgae_forward(const DeepModel& model, const Binding& b, const core::Window& window) {
  const double s = model.input_scale;
  const int T = window.length();
  const int N = window.agent_count();
  const int H = model.desc.dims.hidden;

  // spatial graph embedding per timestep; the target row feeds the Seq2Seq AE
  std::vector<Var> features;
  features.reserve(size_t(T));
  for (int t = 0; t < T; ++t) {
    std::vector<Var> rows;
    rows.reserve(size_t(N));
    std::vector<Vec2> positions(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      const auto& st = window.agents[size_t(i)][size_t(t)];
      rows.push_back(const_row(st.x / s, st.y / s));
      positions[size_t(i)] = st.pos();
    }
    const Var x = dc::stack_rows(rows);
    const Var h = dc::add_rowvec(dc::matmul(x, b["graph_embed.w"]), b["graph_embed.b"]);
    const Var adj = dc::constant(distance_adjacency(positions));
    const Var mixed = dc::add(dc::tanh(dc::matmul(adj, dc::matmul(h, b["gc.w"]))),
                              dc::matmul(h, b["gc.w_res"]));
    features.push_back(dc::slice(mixed, window.target_index, 1, 0, model.desc.dims.embed));
  }

  dc::LstmWeights enc{b["enc_lstm.wx"], b["enc_lstm.wh"], b["enc_lstm.b"]};
  dc::LstmState state{dc::constant(dc::Tensor::zeros({1, H})),
                      dc::constant(dc::Tensor::zeros({1, H}))};
  for (int t = 0; t < T; ++t) state = dc::lstm_cell(features[size_t(t)], state, enc);

  ForwardOut out;
  out.z = state.h;
  DecoderParams dec{b["dec_embed.w"], b["dec_embed.b"],
                    {b["dec_lstm.wx"], b["dec_lstm.wh"], b["dec_lstm.b"]},
                    b["out.w"], b["out.b"]};
  out.recon = run_decoder(dec, state, T);
  const auto& target = window.target();
  out.target_inputs.reserve(size_t(T));
  for (int t = 0; t < T; ++t)
    out.target_inputs.push_back(const_row(target[size_t(t)].x / s, target[size_t(t)].y / s));
  return out;
}

struct LaneNode {
  Vec2 mid;   // local frame, meters
  Vec2 dir;   // unit
  int lane = 0;
  int seg = 0;
};

ForwardOut lanegcn_forward(const DeepModel& model, const Binding& b, const core::Window& window,
                           const core::LaneGraph* lanes) {
  const double s = model.input_scale;
  const int T = window.length();
  if (T != core::kWindowLength)
    throw ShapeMismatch("lanegcn_ae expects T=" + std::to_string(core::kWindowLength) +
                        " windows, got " + std::to_string(T));
  const int N = window.agent_count();
  const int H = model.desc.dims.hidden;

  // actor temporal encoder on displacement inputs
  const auto disp = core::to_displacements(window);
  dc::LstmWeights actor_lstm{b["actor_lstm.wx"], b["actor_lstm.wh"], b["actor_lstm.b"]};
  std::vector<Var> actor_feats;
  actor_feats.reserve(size_t(N));
  for (int i = 0; i < N; ++i) {
    dc::LstmState state{dc::constant(dc::Tensor::zeros({1, H})),
                        dc::constant(dc::Tensor::zeros({1, H}))};
    for (const auto& d : disp[size_t(i)]) {
      const Var e =
          dc::add(dc::matmul(const_row(d.x / s, d.y / s), b["actor_embed.w"]), b["actor_embed.b"]);
      state = dc::lstm_cell(e, state, actor_lstm);
    }
    actor_feats.push_back(state.h);
  }

  // lane nodes from centerline segments in the local frame, pruned around the target
  std::vector<LaneNode> nodes;
  Var lane_h;
  if (lanes != nullptr && !lanes->empty()) {
    std::vector<std::vector<int>> per_lane(lanes->lanes.size());
    for (size_t li = 0; li < lanes->lanes.size(); ++li) {
      const auto& cl = lanes->lanes[li].centerline;
      for (size_t pi = 0; pi + 1 < cl.size(); ++pi) {
        const Vec2 a = window.pose.to_local(cl[pi]);
        const Vec2 c = window.pose.to_local(cl[pi + 1]);
        const Vec2 mid = (a + c) * 0.5;
        if (mid.norm() > kLanePruneRadius) continue;
        per_lane[li].push_back(int(nodes.size()));
        nodes.push_back({mid, (c - a).normalized(), int(li), int(pi)});
      }
    }
    if (!nodes.empty()) {
      std::vector<Var> rows;
      rows.reserve(nodes.size());
      for (const auto& n : nodes) rows.push_back(const_row(n.dir.x, n.dir.y));
      lane_h = dc::add_rowvec(dc::matmul(dc::stack_rows(rows), b["lane_embed.w"]),
                              b["lane_embed.b"]);
      // connectivity: consecutive segments plus lane -> successor joins
      dc::Tensor adj = dc::Tensor::zeros({int(nodes.size()), int(nodes.size())});
      for (size_t i = 0; i < nodes.size(); ++i) adj.at(int(i), int(i)) = 1.0;
      for (size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (nodes[i].lane == nodes[i + 1].lane && nodes[i].seg + 1 == nodes[i + 1].seg) {
          adj.at(int(i), int(i + 1)) = 1.0;
          adj.at(int(i + 1), int(i)) = 1.0;
        }
      }
      for (size_t li = 0; li < lanes->lanes.size(); ++li) {
        if (per_lane[li].empty()) continue;
        const int last = per_lane[li].back();
        for (const auto& succ_id : lanes->lanes[li].successors) {
          for (size_t lj = 0; lj < lanes->lanes.size(); ++lj) {
            if (lanes->lanes[lj].id != succ_id || per_lane[lj].empty()) continue;
            const int first = per_lane[lj].front();
            adj.at(last, first) = 1.0;
            adj.at(first, last) = 1.0;
          }
        }
      }
      const Var nadj = dc::constant(normalize_adjacency(std::move(adj)));
      lane_h = dc::add(dc::tanh(dc::matmul(nadj, dc::matmul(lane_h, b["lane_gc.w"]))),
                       dc::matmul(lane_h, b["lane_gc.w_res"]));
    }
  }

  // lane-to-actor: mean of relative-position-conditioned node messages
  std::vector<Vec2> actor_pos(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) actor_pos[size_t(i)] = window.agents[size_t(i)][size_t(T) - 1].pos();
  std::vector<Var> fused = actor_feats;
  if (!nodes.empty()) {
    for (int i = 0; i < N; ++i) {
      std::vector<Var> msgs;
      for (size_t j = 0; j < nodes.size(); ++j) {
        const Vec2 rel = nodes[j].mid - actor_pos[size_t(i)];
        if (rel.norm() > kLaneRadius) continue;
        const Var hj = dc::slice(lane_h, int(j), 1, 0, H);
        const Var in = dc::concat_cols(hj, const_row(rel.x / kLaneRadius, rel.y / kLaneRadius));
        msgs.push_back(dc::tanh(dc::add(dc::matmul(in, b["l2a.w"]), b["l2a.b"])));
      }
      if (msgs.empty()) continue;
      Var total = msgs.front();
      for (size_t j = 1; j < msgs.size(); ++j) total = dc::add(total, msgs[j]);
      fused[size_t(i)] = dc::add(fused[size_t(i)], dc::scale(total, 1.0 / double(msgs.size())));
    }
  }

  // actor-to-actor over the distance-based adjacency, as in the STGAE layer
  const Var f = dc::stack_rows(fused);
  const Var nadj_a = dc::constant(distance_adjacency(actor_pos));
  const Var mixed = dc::add(dc::tanh(dc::matmul(nadj_a, dc::matmul(f, b["a2a.w"]))),
                            dc::matmul(f, b["a2a.w_res"]));
  ForwardOut out;
  out.z = dc::slice(mixed, window.target_index, 1, 0, H);

  // linear head predicts the 15 displacement steps; positions by integration
  const Var head = dc::add(dc::matmul(out.z, b["head.w"]), b["head.b"]);
  const auto& target = window.target();
  out.target_inputs.reserve(size_t(T));
  for (int t = 0; t < T; ++t)
    out.target_inputs.push_back(const_row(target[size_t(t)].x / s, target[size_t(t)].y / s));
  Var pos = out.target_inputs.front();
  out.recon.reserve(size_t(T));
  out.recon.push_back(pos);
  for (int t = 0; t + 1 < T; ++t) {
    pos = dc::add(pos, dc::slice_cols(head, 2 * t, 2));
    out.recon.push_back(pos);
  }
  return out;
}

}  // namespace

ForwardOut model_forward(const DeepModel& model, const Binding& binding,
                         const core::Window& window, const core::LaneGraph* lanes) {
  switch (model.desc.architecture) {
    case Architecture::Seq2Seq:
      return seq2seq_forward(model, binding, window);
    case Architecture::Stgae:
      return stgae_forward(model, binding, window);
    case Architecture::LanegcnAe:
      return lanegcn_forward(model, binding, window, lanes);
    default:
      throw ConfigError("model_forward: " + to_string(model.desc.architecture) +
                        " is not a deep model");
  }
}

Var recon_loss_var(const ForwardOut& fo) {
  if (fo.recon.size() != fo.target_inputs.size())
    throw ShapeMismatch("recon_loss: reconstruction length " + std::to_string(fo.recon.size()) +
                        " does not match input length " + std::to_string(fo.target_inputs.size()));
  Var total = dc::squared_euclidean(fo.recon[0], fo.target_inputs[0]);
  for (size_t t = 1; t < fo.recon.size(); ++t)
    total = dc::add(total, dc::squared_euclidean(fo.recon[t], fo.target_inputs[t]));
  return dc::scale(total, 1.0 / double(fo.recon.size()));
}

double recon_alpha(const ForwardOut& fo, double input_scale) {
  double err = 0.0;
  for (size_t t = 0; t < fo.recon.size(); ++t) {
    const double dx = fo.recon[t]->value.data[0] - fo.target_inputs[t]->value.data[0];
    const double dy = fo.recon[t]->value.data[1] - fo.target_inputs[t]->value.data[1];
    err += std::hypot(dx, dy);
  }
  return input_scale * err / double(fo.recon.size());
}

double recon_loss_value(const std::vector<Vec2>& input, const std::vector<Vec2>& recon) {
  if (input.size() != recon.size())
    throw ShapeMismatch("recon_loss: expected " + std::to_string(input.size()) + " steps, got " +
                        std::to_string(recon.size()));
  double total = 0.0;
  for (size_t t = 0; t < input.size(); ++t) total += (input[t] - recon[t]).norm_sq();
  return total / double(input.size());
}

Var dsvdd_loss_var(const std::vector<Var>& zs, const std::vector<double>& c) {
  if (zs.empty()) throw EmptyTrainingSet("dsvdd_loss over an empty batch");
  const Var center = dc::constant(dc::Tensor::row(std::vector<double>(c)));
  Var total = dc::squared_euclidean(zs[0], center);
  for (size_t i = 1; i < zs.size(); ++i)
    total = dc::add(total, dc::squared_euclidean(zs[i], center));
  return dc::scale(total, 1.0 / double(zs.size()));
}

double dsvdd_score(std::span<const double> z, const std::optional<std::vector<double>>& c) {
  if (!c) throw CenterUninitialized("DSVDD centre has not been initialized");
  if (z.size() != c->size())
    throw ShapeMismatch("dsvdd_score: latent size " + std::to_string(z.size()) +
                        " does not match centre size " + std::to_string(c->size()));
  double d2 = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - (*c)[i];
    d2 += d * d;
  }
  return std::sqrt(d2);
}

std::vector<double> init_center(const DeepModel& model, const std::vector<TrainSample>& samples,
                                Rng& rng) {
  if (samples.empty()) throw EmptyTrainingSet("init_center over an empty training set");
  std::vector<size_t> indices(samples.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  if (int(indices.size()) > kCenterSampleCap) {
    for (size_t i = indices.size() - 1; i > 0; --i)
      std::swap(indices[i], indices[size_t(rng.uniform_int(int(i) + 1))]);
    indices.resize(size_t(kCenterSampleCap));
    std::sort(indices.begin(), indices.end());
  }
  std::vector<double> c(size_t(model.desc.dims.latent), 0.0);
  for (const size_t idx : indices) {
    const Binding b = bind_params(model);
    const ForwardOut fo = model_forward(model, b, samples[idx].window, samples[idx].lanes);
    for (size_t k = 0; k < c.size(); ++k) c[k] += fo.z->value.data[k];
  }
  for (double& v : c) v /= double(indices.size());
  return c;
}

// ---------------------------------------------------------------------------
// persistence

dataio::Checkpoint to_checkpoint(const DeepModel& model) {
  dataio::Checkpoint ck;
  ck.architecture = to_string(model.desc.architecture);
  ck.objective = to_string(model.desc.objective);
  ck.dims = {{"embed", model.desc.dims.embed},
             {"hidden", model.desc.dims.hidden},
             {"latent", model.desc.dims.latent}};
  ck.norm_stats = {{"input_scale", model.input_scale}};
  for (const auto& p : model.params) ck.tensors.emplace_back(p.name, p.value);
  if (model.center)
    ck.tensors.emplace_back("dsvdd_center", dc::Tensor::row(std::vector<double>(*model.center)));
  return ck;
}

DeepModel model_from_checkpoint(const dataio::Checkpoint& ck,
                                std::optional<Architecture> expected) {
  const Architecture arch = architecture_from_string(ck.architecture);
  if (expected && arch != *expected)
    throw ArchitectureMismatch("checkpoint holds '" + ck.architecture + "', requested '" +
                               to_string(*expected) + "'");
  ModelDescriptor desc;
  desc.architecture = arch;
  desc.objective = objective_from_string(ck.objective);
  desc.dims.embed = ck.dims.at("embed").get<int>();
  desc.dims.hidden = ck.dims.at("hidden").get<int>();
  desc.dims.latent = ck.dims.at("latent").get<int>();

  DeepModel model = make_model(desc, /*seed=*/0);
  model.input_scale = ck.norm_stats.at("input_scale").get<double>();
  for (auto& p : model.params) {
    const dc::Tensor& t = ck.require(p.name);
    if (!t.same_shape(p.value))
      throw ArchitectureMismatch("tensor '" + p.name + "' has shape " + t.shape_str() +
                                 ", expected " + p.value.shape_str());
    p.value = t;
    p.m = dc::Tensor::zeros(t.shape);
    p.v = dc::Tensor::zeros(t.shape);
    p.step = 0;
  }
  if (const dc::Tensor* c = ck.find("dsvdd_center")) model.center = c->data;
  if (desc.objective == Objective::Dsvdd && !model.center)
    throw CenterUninitialized("dsvdd checkpoint without a centre tensor");
  return model;
}

}  // namespace maad::models
