#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maad/core.hpp"

namespace maad::eval {

struct ScoreSeries {
  std::string scene_id;
  std::vector<std::pair<int, double>> entries;  // (frame >= 15, score), frames increasing
};

// Anything that can score one sliding window; scoring is read-only and safe to
// run in parallel across windows and scenes.
class WindowScorer {
 public:
  virtual ~WindowScorer() = default;
  virtual double score_window(const core::Window& window, const core::LaneGraph& lanes) const = 0;
};

// One score per frame from 15 to L-1, each from the window ending there.
ScoreSeries score_scene(const WindowScorer& scorer, const core::Scene& scene);

// (score, is_positive) with abnormal as the positive class
using Pair = std::pair<double, int>;

struct CollectOut {
  std::vector<Pair> pairs;  // IGNORE frames dropped; positive = ABNORMAL
  std::vector<std::string> subclasses;  // abnormal subclass per pair, "" for normals
  int64_t n_abnormal = 0;
  int64_t n_normal = 0;
  int64_t n_ignored = 0;
};

// Joins per-scene scores with per-scene frame labels. Every scored frame must
// carry a label (MissingLabel otherwise).
CollectOut collect(const std::vector<ScoreSeries>& scores,
                   const std::map<std::string, std::vector<core::FrameLabel>>& labels);

// Trapezoidal ROC area; tied scores are swept as one block, which makes it
// equal to the Mann-Whitney statistic with ties counted 1/2.
double auroc(std::span<const Pair> pairs);

// Average precision (step integration over descending-score prefix cuts).
double aupr(std::span<const Pair> pairs);

// Minimum FPR over all thresholds reaching TPR >= 0.95.
double fpr_at_95_tpr(std::span<const Pair> pairs);

struct CurvePoint {
  double x = 0.0;  // recall or FPR
  double y = 0.0;  // precision or TPR
};

struct MetricsReport {
  double aupr_abnormal = 0.0;
  double aupr_normal = 0.0;
  double auroc = 0.0;
  double fpr_at_95_tpr = 0.0;
  int64_t n_abnormal = 0;
  int64_t n_normal = 0;
  int64_t n_ignored = 0;
  std::vector<CurvePoint> pr_abnormal;  // (recall, precision)
  std::vector<CurvePoint> pr_normal;
  std::vector<CurvePoint> roc;          // (fpr, tpr)
  // fraction of each abnormal subclass detected at the 95%-TPR threshold
  std::map<std::string, double> per_subclass_recall;

  nlohmann::ordered_json to_json() const;
};

MetricsReport compute_metrics(const CollectOut& collected);

// Reads <scene_id>.scores.csv files and the matching labels, computes the
// four benchmark metrics and writes metrics.json plus curve CSVs to out_dir.
MetricsReport evaluate(const std::filesystem::path& scores_dir,
                       const std::filesystem::path& labels_dir,
                       const std::filesystem::path& out_dir);

}  // namespace maad::eval
