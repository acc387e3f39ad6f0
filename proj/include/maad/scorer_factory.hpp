#pragma once

#include <memory>
#include <string>

#include "maad/dataio.hpp"
#include "maad/eval.hpp"
#include "maad/models.hpp"
#include "maad/oneclass.hpp"

namespace maad {

// target positions of a window as a plain sequence (padding included as-is)
std::vector<Vec2> window_target_positions(const core::Window& window);

std::unique_ptr<eval::WindowScorer> make_linear_scorer(models::Architecture arch);
std::unique_ptr<eval::WindowScorer> make_deep_scorer(models::DeepModel model);
std::unique_ptr<eval::WindowScorer> make_ocsvm_scorer(models::DeepModel encoder,
                                                      oneclass::OcSvmModel ocsvm);

// Dispatch on the checkpoint's architecture tag; "cvm" / "lti" need no file.
std::unique_ptr<eval::WindowScorer> make_scorer(const dataio::Checkpoint& ck);
std::unique_ptr<eval::WindowScorer> make_scorer_from_arg(const std::string& checkpoint_or_name);

// combined container for a fitted OC-SVM plus its frozen encoder
dataio::Checkpoint ocsvm_with_encoder_checkpoint(const models::DeepModel& encoder,
                                                 const oneclass::OcSvmModel& ocsvm);

// Latent features of every sliding window of every scene, capped by a seeded
// uniform subsample to keep the kernel matrix tractable.
std::vector<std::vector<double>> extract_latents(const models::DeepModel& encoder,
                                                 const std::vector<core::Scene>& scenes,
                                                 size_t cap, uint64_t seed);

struct LabeledLatents {
  std::vector<std::vector<double>> features;
  std::vector<int> abnormal;  // 1 = abnormal frame; IGNORE frames are skipped
};

LabeledLatents extract_labeled_latents(const models::DeepModel& encoder,
                                       const std::vector<core::Scene>& labeled_scenes);

}  // namespace maad
