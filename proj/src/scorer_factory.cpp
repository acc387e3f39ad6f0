#include "maad/scorer_factory.hpp"

#include <filesystem>

namespace maad {

namespace dc = maad::diffcalc;

std::vector<Vec2> window_target_positions(const core::Window& window) {
  std::vector<Vec2> out;
  out.reserve(size_t(window.length()));
  for (const auto& st : window.target()) out.push_back(st.pos());
  return out;
}

namespace {

class LinearScorer : public eval::WindowScorer {
 public:
  explicit LinearScorer(models::Architecture arch) : arch_(arch) {}

  double score_window(const core::Window& window, const core::LaneGraph&) const override {
    const std::vector<Vec2> traj = window_target_positions(window);
    return arch_ == models::Architecture::Cvm ? models::cvm_reconstruct(traj).alpha
                                              : models::lti_reconstruct(traj).alpha;
  }

 private:
  models::Architecture arch_;
};

class DeepScorer : public eval::WindowScorer {
 public:
  explicit DeepScorer(models::DeepModel model) : model_(std::move(model)) {}

  double score_window(const core::Window& window, const core::LaneGraph& lanes) const override {
    const models::Binding binding = models::bind_params(model_);
    const models::ForwardOut fo = models::model_forward(model_, binding, window, &lanes);
    if (model_.desc.objective == models::Objective::Dsvdd)
      return models::dsvdd_score(fo.z->value.data, model_.center);
    return models::recon_alpha(fo, model_.input_scale);
  }

  const models::DeepModel& model() const { return model_; }

 private:
  models::DeepModel model_;
};

class OcsvmScorer : public eval::WindowScorer {
 public:
  OcsvmScorer(models::DeepModel encoder, oneclass::OcSvmModel ocsvm)
      : encoder_(std::move(encoder)), ocsvm_(std::move(ocsvm)) {}

  double score_window(const core::Window& window, const core::LaneGraph& lanes) const override {
    const models::Binding binding = models::bind_params(encoder_);
    const models::ForwardOut fo = models::model_forward(encoder_, binding, window, &lanes);
    return oneclass::score_ocsvm(ocsvm_, fo.z->value.data);
  }

 private:
  models::DeepModel encoder_;
  oneclass::OcSvmModel ocsvm_;
};

constexpr const char* kEncoderPrefix = "encoder.";

}  // namespace

std::unique_ptr<eval::WindowScorer> make_linear_scorer(models::Architecture arch) {
  if (arch != models::Architecture::Cvm && arch != models::Architecture::Lti)
    throw ConfigError("linear scorer requires cvm or lti");
  return std::make_unique<LinearScorer>(arch);
}

std::unique_ptr<eval::WindowScorer> make_deep_scorer(models::DeepModel model) {
  return std::make_unique<DeepScorer>(std::move(model));
}

std::unique_ptr<eval::WindowScorer> make_ocsvm_scorer(models::DeepModel encoder,
                                                      oneclass::OcSvmModel ocsvm) {
  return std::make_unique<OcsvmScorer>(std::move(encoder), std::move(ocsvm));
}

dataio::Checkpoint ocsvm_with_encoder_checkpoint(const models::DeepModel& encoder,
                                                 const oneclass::OcSvmModel& ocsvm) {
  dataio::Checkpoint ck = oneclass::to_checkpoint(ocsvm);
  const dataio::Checkpoint enc = models::to_checkpoint(encoder);
  ck.extra["encoder"] = {{"architecture", enc.architecture},
                         {"objective", enc.objective},
                         {"dims", enc.dims},
                         {"norm_stats", enc.norm_stats}};
  for (const auto& [name, tensor] : enc.tensors)
    ck.tensors.emplace_back(kEncoderPrefix + name, tensor);
  return ck;
}

std::unique_ptr<eval::WindowScorer> make_scorer(const dataio::Checkpoint& ck) {
  if (ck.architecture == "cvm" || ck.architecture == "lti")
    return make_linear_scorer(models::architecture_from_string(ck.architecture));
  if (ck.architecture == "ocsvm") {
    if (!ck.extra.contains("encoder"))
      throw ArchitectureMismatch("ocsvm checkpoint lacks the embedded encoder");
    dataio::Checkpoint enc;
    enc.architecture = ck.extra["encoder"].at("architecture").get<std::string>();
    enc.objective = ck.extra["encoder"].at("objective").get<std::string>();
    enc.dims = ck.extra["encoder"].at("dims");
    enc.norm_stats = ck.extra["encoder"].at("norm_stats");
    for (const auto& [name, tensor] : ck.tensors)
      if (name.rfind(kEncoderPrefix, 0) == 0)
        enc.tensors.emplace_back(name.substr(std::string(kEncoderPrefix).size()), tensor);
    return make_ocsvm_scorer(models::model_from_checkpoint(enc),
                             oneclass::ocsvm_from_checkpoint(ck));
  }
  return make_deep_scorer(models::model_from_checkpoint(ck));
}

std::unique_ptr<eval::WindowScorer> make_scorer_from_arg(const std::string& checkpoint_or_name) {
  if (checkpoint_or_name == "cvm" || checkpoint_or_name == "lti")
    return make_linear_scorer(models::architecture_from_string(checkpoint_or_name));
  if (!std::filesystem::exists(checkpoint_or_name))
    throw IoFailure("no such checkpoint '" + checkpoint_or_name + "'");
  return make_scorer(dataio::load_checkpoint(checkpoint_or_name));
}

namespace {

std::vector<double> window_latent(const models::DeepModel& encoder, const core::Window& window,
                                  const core::LaneGraph& lanes) {
  const models::Binding binding = models::bind_params(encoder);
  const models::ForwardOut fo = models::model_forward(encoder, binding, window, &lanes);
  return fo.z->value.data;
}

}  // namespace

std::vector<std::vector<double>> extract_latents(const models::DeepModel& encoder,
                                                 const std::vector<core::Scene>& scenes,
                                                 size_t cap, uint64_t seed) {
  std::vector<std::pair<const core::Scene*, int>> slots;
  for (const auto& scene : scenes)
    for (int end = core::kWindowLength - 1; end < scene.length(); ++end)
      slots.emplace_back(&scene, end);
  if (slots.size() > cap) {
    Rng rng = Rng(seed).derive(0xFEA7);
    for (size_t i = slots.size(); i > 1; --i)
      std::swap(slots[i - 1], slots[size_t(rng.uniform_int(int(i)))]);
    slots.resize(cap);
    std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first->scene_id < b.first->scene_id;
      return a.second < b.second;
    });
  }
  std::vector<std::vector<double>> out;
  out.reserve(slots.size());
  for (const auto& [scene, end] : slots)
    out.push_back(window_latent(encoder, core::to_target_frame(*scene, end), scene->lane_graph));
  return out;
}

LabeledLatents extract_labeled_latents(const models::DeepModel& encoder,
                                       const std::vector<core::Scene>& labeled_scenes) {
  LabeledLatents out;
  for (const auto& scene : labeled_scenes) {
    std::map<int, const core::FrameLabel*> by_frame;
    for (const auto& l : scene.labels) by_frame[l.frame_index] = &l;
    for (int end = core::kWindowLength - 1; end < scene.length(); ++end) {
      const auto it = by_frame.find(end);
      if (it == by_frame.end())
        throw MissingLabel("scene '" + scene.scene_id + "' frame " + std::to_string(end) +
                           " has no label");
      if (it->second->category == core::LabelCategory::Ignore) continue;
      out.features.push_back(
          window_latent(encoder, core::to_target_frame(scene, end), scene.lane_graph));
      out.abnormal.push_back(it->second->category == core::LabelCategory::Abnormal ? 1 : 0);
    }
  }
  return out;
}

}  // namespace maad
