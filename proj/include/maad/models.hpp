#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maad/core.hpp"
#include "maad/dataio.hpp"
#include "maad/diffcalc.hpp"

namespace maad::models {

enum class Architecture { Cvm, Lti, Seq2Seq, Stgae, LanegcnAe };
enum class Objective { Recon, Dsvdd };

std::string to_string(Architecture a);
std::string to_string(Objective o);
Architecture architecture_from_string(const std::string& s);
Objective objective_from_string(const std::string& s);

struct Dims {
  int embed = 8;
  int hidden = 16;
  int latent = 16;  // F; equals the LSTM hidden size
};

struct ModelDescriptor {
  Architecture architecture = Architecture::Seq2Seq;
  Objective objective = Objective::Recon;
  Dims dims;
};

constexpr double kAdjacencyEps = 0.1;   // m, regularizes the 1/d adjacency
constexpr double kLaneRadius = 30.0;    // m, lane-to-actor aggregation radius
constexpr double kLanePruneRadius = 45.0;

// ---------------------------------------------------------------------------
// linear reconstruction baselines (stateless)

struct LinearResult {
  std::vector<Vec2> reconstruction;
  double alpha = 0.0;  // mean per-step Euclidean error
};

LinearResult cvm_reconstruct(std::span<const Vec2> traj);
LinearResult lti_reconstruct(std::span<const Vec2> traj);

// ---------------------------------------------------------------------------
// deep models

struct DeepModel {
  ModelDescriptor desc;
  std::vector<diffcalc::Parameter> params;
  double input_scale = 1.0;  // inputs are divided by this before the network
  std::optional<std::vector<double>> center;  // DSVDD centre c, frozen after init

  diffcalc::Parameter* find(const std::string& name);
  const diffcalc::Parameter* find(const std::string& name) const;
};

DeepModel make_model(const ModelDescriptor& desc, uint64_t seed);

// Fresh leaf Vars per computation graph, one per named parameter. Reusing one
// binding across the windows of a batch accumulates their gradients.
struct Binding {
  std::vector<std::pair<std::string, diffcalc::Var>> vars;
  const diffcalc::Var& operator[](const std::string& name) const;
};

Binding bind_params(const DeepModel& model);

struct ForwardOut {
  diffcalc::Var z;                              // [1, latent]
  std::vector<diffcalc::Var> recon;             // per-step [1,2] scaled local positions
  std::vector<diffcalc::Var> target_inputs;     // per-step [1,2] scaled local positions (const)
};

// Dispatches on the architecture; lanes may be null except for lanegcn_ae,
// which transforms them into the window's local frame via window.pose.
ForwardOut model_forward(const DeepModel& model, const Binding& binding,
                         const core::Window& window, const core::LaneGraph* lanes);

// (1/T) sum_t ||s_t - s^hat_t||^2, in scaled units; smooth for training.
diffcalc::Var recon_loss_var(const ForwardOut& fo);
// (1/T) sum_t ||s_t - s^hat_t|| in meters; the reconstruction anomaly score.
double recon_alpha(const ForwardOut& fo, double input_scale);
double recon_loss_value(const std::vector<Vec2>& input, const std::vector<Vec2>& recon);

// DSVDD: L_a = mean_batch ||Z - c||^2 ; alpha = ||Z - c||.
diffcalc::Var dsvdd_loss_var(const std::vector<diffcalc::Var>& zs, const std::vector<double>& c);
double dsvdd_score(std::span<const double> z, const std::optional<std::vector<double>>& c);

struct TrainSample {
  core::Window window;
  const core::LaneGraph* lanes = nullptr;
};

// c = mean latent representation over the samples (uniform subsample above
// kCenterSampleCap).
constexpr int kCenterSampleCap = 10000;
std::vector<double> init_center(const DeepModel& model, const std::vector<TrainSample>& samples,
                                Rng& rng);

// ---------------------------------------------------------------------------
// training

struct TrainOptions {
  int epochs = 36;
  int batch_size = 32;
  double lr_initial = 1e-3;
  double lr_late = 1e-4;
  int lr_switch_after = 32;  // epochs beyond this use lr_late
  uint64_t seed = 0;
};

double lr_for_epoch(const TrainOptions& opts, int epoch);  // epoch is 1-based

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_recon = 0.0;
  double train_aux = 0.0;   // DSVDD term; 0 for plain reconstruction
  double train_total = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  DeepModel model;  // parameters of the best-validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

// index of the lowest value, earliest on ties
int argmin_epoch(const std::vector<double>& losses);

TrainResult train(const ModelDescriptor& desc, const std::vector<core::Scene>& train_scenes,
                  const std::vector<core::Scene>& val_scenes, const TrainOptions& opts);

// ---------------------------------------------------------------------------
// persistence

dataio::Checkpoint to_checkpoint(const DeepModel& model);
DeepModel model_from_checkpoint(const dataio::Checkpoint& ck,
                                std::optional<Architecture> expected = std::nullopt);

}  // namespace maad::models
