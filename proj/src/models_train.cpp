#include <algorithm>
#include <cmath>

#include "maad/models.hpp"

namespace maad::models {

namespace dc = maad::diffcalc;
using dc::Var;

double lr_for_epoch(const TrainOptions& opts, int epoch) {
  return epoch <= opts.lr_switch_after ? opts.lr_initial : opts.lr_late;
}

int argmin_epoch(const std::vector<double>& losses) {
  if (losses.empty()) throw EmptyTrainingSet("argmin over an empty loss curve");
  int best = 0;
  for (int i = 1; i < int(losses.size()); ++i)
    if (losses[size_t(i)] < losses[size_t(best)]) best = i;
  return best;
}

namespace {

struct Clip {
  core::Window window;
  const core::LaneGraph* lanes;
};

// one random T=16 clip per scene
std::vector<Clip> draw_clips(const std::vector<core::Scene>& scenes, Rng& rng) {
  std::vector<Clip> clips;
  clips.reserve(scenes.size());
  for (const auto& scene : scenes) {
    const int length = scene.length();
    if (length < core::kWindowLength)
      throw SceneTooShort("scene '" + scene.scene_id + "' is shorter than one window");
    const int end = core::kWindowLength - 1 + rng.uniform_int(length - core::kWindowLength + 1);
    clips.push_back({core::to_target_frame(scene, end), &scene.lane_graph});
  }
  return clips;
}

double compute_input_scale(const ModelDescriptor& desc, const std::vector<Clip>& clips) {
  // RMS of the network's raw inputs; keeps geometry intact (no centering)
  double sq = 0.0;
  int64_t n = 0;
  for (const auto& clip : clips) {
    if (desc.architecture == Architecture::LanegcnAe) {
      for (const auto& row : core::to_displacements(clip.window))
        for (const auto& d : row) {
          sq += d.x * d.x + d.y * d.y;
          n += 2;
        }
    } else {
      for (const auto& row : clip.window.agents)
        for (const auto& st : row) {
          if (!st.valid) continue;
          sq += st.x * st.x + st.y * st.y;
          n += 2;
        }
    }
  }
  const double rms = n > 0 ? std::sqrt(sq / double(n)) : 1.0;
  return rms > 1e-9 ? rms : 1.0;
}

struct LossParts {
  double recon = 0.0;
  double aux = 0.0;
};

LossParts eval_loss(const DeepModel& model, const Clip& clip) {
  const Binding b = bind_params(model);
  const ForwardOut fo = model_forward(model, b, clip.window, clip.lanes);
  LossParts parts;
  parts.recon = recon_loss_var(fo)->value.data[0];
  if (model.desc.objective == Objective::Dsvdd) {
    const double d = dsvdd_score(fo.z->value.data, model.center);
    parts.aux = d * d;
  }
  return parts;
}

}  // namespace

TrainResult train(const ModelDescriptor& desc, const std::vector<core::Scene>& train_scenes,
                  const std::vector<core::Scene>& val_scenes, const TrainOptions& opts) {
  if (desc.architecture == Architecture::Cvm || desc.architecture == Architecture::Lti)
    throw ConfigError(to_string(desc.architecture) + " requires no training");
  if (train_scenes.empty()) throw EmptyTrainingSet("no training scenes");

  DeepModel model = make_model(desc, opts.seed);

  Rng norm_rng = Rng(opts.seed).derive(0xA0);
  const std::vector<Clip> norm_clips = draw_clips(train_scenes, norm_rng);
  model.input_scale = compute_input_scale(desc, norm_clips);

  Rng val_rng = Rng(opts.seed).derive(0xB1);
  std::vector<Clip> val_clips;
  if (!val_scenes.empty()) val_clips = draw_clips(val_scenes, val_rng);

  // DSVDD centre from an initial forward pass over the first epoch's clips
  Rng epoch1_rng = Rng(opts.seed).derive(101);
  std::vector<Clip> epoch1_clips = draw_clips(train_scenes, epoch1_rng);
  if (desc.objective == Objective::Dsvdd) {
    std::vector<TrainSample> samples;
    samples.reserve(epoch1_clips.size());
    for (const auto& c : epoch1_clips) samples.push_back({c.window, c.lanes});
    Rng center_rng = Rng(opts.seed).derive(0xCE);
    model.center = init_center(model, samples, center_rng);
  }

  TrainResult result;
  std::vector<double> val_curve;
  std::vector<dc::Tensor> best_params;
  std::optional<std::vector<double>> best_center;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const double lr = lr_for_epoch(opts, epoch);
    Rng epoch_rng = Rng(opts.seed).derive(uint64_t(100 + epoch));
    std::vector<Clip> clips = epoch == 1 ? epoch1_clips : draw_clips(train_scenes, epoch_rng);
    for (size_t i = clips.size() - 1; i > 0; --i)
      std::swap(clips[i], clips[size_t(epoch_rng.uniform_int(int(i) + 1))]);

    double recon_sum = 0.0, aux_sum = 0.0;
    for (size_t start = 0; start < clips.size(); start += size_t(opts.batch_size)) {
      const size_t stop = std::min(clips.size(), start + size_t(opts.batch_size));
      const int batch = int(stop - start);
      const Binding binding = bind_params(model);

      Var loss;
      std::vector<Var> zs;
      Var recon_total;
      for (size_t i = start; i < stop; ++i) {
        const ForwardOut fo = model_forward(model, binding, clips[i].window, clips[i].lanes);
        const Var lr_i = recon_loss_var(fo);
        recon_total = recon_total ? dc::add(recon_total, lr_i) : lr_i;
        if (desc.objective == Objective::Dsvdd) zs.push_back(fo.z);
      }
      loss = dc::scale(recon_total, 1.0 / batch);
      recon_sum += loss->value.data[0] * batch;
      if (desc.objective == Objective::Dsvdd) {
        const Var aux = dsvdd_loss_var(zs, *model.center);
        aux_sum += aux->value.data[0] * batch;
        loss = dc::add(loss, aux);  // un-weighted sum L_r + L_a
      }
      if (!std::isfinite(loss->value.data[0]))
        throw TrainingFailure("non-finite loss at epoch " + std::to_string(epoch));

      dc::backward(loss);
      for (size_t pi = 0; pi < model.params.size(); ++pi) {
        const auto& [name, var] = binding.vars[pi];
        (void)name;
        dc::adam_step(model.params[pi], var->grad, lr);
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_recon = recon_sum / double(clips.size());
    log.train_aux = aux_sum / double(clips.size());
    log.train_total = log.train_recon + log.train_aux;

    double val_loss = 0.0;
    const std::vector<Clip>& eval_clips = val_clips.empty() ? clips : val_clips;
    for (const auto& clip : eval_clips) {
      const LossParts parts = eval_loss(model, clip);
      val_loss += parts.recon + parts.aux;
    }
    val_loss /= double(eval_clips.size());
    log.val_loss = val_loss;
    if (!std::isfinite(val_loss))
      throw TrainingFailure("non-finite validation loss at epoch " + std::to_string(epoch));

    val_curve.push_back(val_loss);
    result.log.push_back(log);
    if (argmin_epoch(val_curve) == int(val_curve.size()) - 1) {
      best_params.clear();
      for (const auto& p : model.params) best_params.push_back(p.value);
      best_center = model.center;
    }
    log_debug("epoch " + std::to_string(epoch) + " train=" + std::to_string(log.train_total) +
              " val=" + std::to_string(val_loss));
  }

  result.best_epoch = argmin_epoch(val_curve) + 1;
  for (size_t i = 0; i < model.params.size(); ++i) model.params[i].value = best_params[i];
  model.center = best_center;
  result.model = std::move(model);
  return result;
}

}  // namespace maad::models
