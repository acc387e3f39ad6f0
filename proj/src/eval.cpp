#include "maad/eval.hpp"

#include <algorithm>
#include <cmath>

#include "maad/dataio.hpp"

namespace maad::eval {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ScoreSeries score_scene(const WindowScorer& scorer, const core::Scene& scene) {
  ScoreSeries series;
  series.scene_id = scene.scene_id;
  for (const core::Window& window : core::window_iter(scene))
    series.entries.emplace_back(window.frame_of_score,
                                scorer.score_window(window, scene.lane_graph));
  return series;
}

CollectOut collect(const std::vector<ScoreSeries>& scores,
                   const std::map<std::string, std::vector<core::FrameLabel>>& labels) {
  CollectOut out;
  for (const auto& series : scores) {
    const auto it = labels.find(series.scene_id);
    if (it == labels.end())
      throw MissingLabel("no labels for scene '" + series.scene_id + "'");
    std::map<int, const core::FrameLabel*> by_frame;
    for (const auto& l : it->second) by_frame[l.frame_index] = &l;
    for (const auto& [frame, score] : series.entries) {
      const auto lit = by_frame.find(frame);
      if (lit == by_frame.end())
        throw MissingLabel("scene '" + series.scene_id + "' frame " + std::to_string(frame) +
                           " has no label");
      const core::FrameLabel& label = *lit->second;
      if (label.category == core::LabelCategory::Ignore) {
        ++out.n_ignored;
        continue;
      }
      const bool abnormal = label.category == core::LabelCategory::Abnormal;
      out.pairs.emplace_back(score, abnormal ? 1 : 0);
      out.subclasses.push_back(abnormal ? label.subclass : std::string());
      abnormal ? ++out.n_abnormal : ++out.n_normal;
    }
  }
  return out;
}

namespace {

struct Block {
  double score;
  int64_t tp;  // positives in this block
  int64_t fp;
};

// descending-score tie blocks
std::vector<Block> make_blocks(std::span<const Pair> pairs) {
  std::vector<Pair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Pair& a, const Pair& b) { return a.first > b.first; });
  std::vector<Block> blocks;
  for (const auto& [score, positive] : sorted) {
    if (blocks.empty() || blocks.back().score != score) blocks.push_back({score, 0, 0});
    positive ? ++blocks.back().tp : ++blocks.back().fp;
  }
  return blocks;
}

std::pair<int64_t, int64_t> class_totals(std::span<const Pair> pairs) {
  int64_t pos = 0, neg = 0;
  for (const auto& [score, positive] : pairs) positive ? ++pos : ++neg;
  return {pos, neg};
}

}  // namespace

double auroc(std::span<const Pair> pairs) {
  const auto [pos, neg] = class_totals(pairs);
  if (pos == 0 || neg == 0) throw SingleClass("AUROC needs both classes");
  double area = 0.0;
  double tpr_prev = 0.0, fpr_prev = 0.0;
  int64_t tp = 0, fp = 0;
  for (const Block& b : make_blocks(pairs)) {
    tp += b.tp;
    fp += b.fp;
    const double tpr = double(tp) / double(pos);
    const double fpr = double(fp) / double(neg);
    area += (fpr - fpr_prev) * (tpr + tpr_prev) * 0.5;
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  return area;
}

double aupr(std::span<const Pair> pairs) {
  const auto [pos, neg] = class_totals(pairs);
  (void)neg;
  if (pos == 0) throw NoPositives("AUPR needs at least one positive");
  double ap = 0.0;
  double recall_prev = 0.0;
  int64_t tp = 0, fp = 0;
  for (const Block& b : make_blocks(pairs)) {
    tp += b.tp;
    fp += b.fp;
    const double recall = double(tp) / double(pos);
    const double precision = double(tp) / double(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
  }
  return ap;
}

double fpr_at_95_tpr(std::span<const Pair> pairs) {
  const auto [pos, neg] = class_totals(pairs);
  if (pos == 0 || neg == 0) throw SingleClass("FPR-95%-TPR needs both classes");
  int64_t tp = 0, fp = 0;
  for (const Block& b : make_blocks(pairs)) {
    tp += b.tp;
    fp += b.fp;
    if (double(tp) / double(pos) >= 0.95) return double(fp) / double(neg);
  }
  return 1.0;  // unreachable: the full cut always has TPR == 1
}

namespace {

std::vector<CurvePoint> pr_curve(std::span<const Pair> pairs) {
  const auto [pos, neg] = class_totals(pairs);
  (void)neg;
  std::vector<CurvePoint> curve;
  curve.push_back({0.0, 1.0});
  int64_t tp = 0, fp = 0;
  for (const Block& b : make_blocks(pairs)) {
    tp += b.tp;
    fp += b.fp;
    curve.push_back({double(tp) / double(pos), double(tp) / double(tp + fp)});
  }
  return curve;
}

std::vector<CurvePoint> roc_curve(std::span<const Pair> pairs) {
  const auto [pos, neg] = class_totals(pairs);
  std::vector<CurvePoint> curve;
  curve.push_back({0.0, 0.0});
  int64_t tp = 0, fp = 0;
  for (const Block& b : make_blocks(pairs)) {
    tp += b.tp;
    fp += b.fp;
    curve.push_back({double(fp) / double(neg), double(tp) / double(pos)});
  }
  return curve;
}

std::vector<Pair> flip_polarity(std::span<const Pair> pairs) {
  std::vector<Pair> flipped;
  flipped.reserve(pairs.size());
  for (const auto& [score, positive] : pairs) flipped.emplace_back(-score, positive ? 0 : 1);
  return flipped;
}

void write_curve(const std::vector<CurvePoint>& curve, const char* xname, const char* yname,
                 const fs::path& path) {
  std::string text = std::string(xname) + "," + yname + "\n";
  for (const auto& p : curve)
    text += dataio::format_real(p.x) + "," + dataio::format_real(p.y) + "\n";
  dataio::write_text_file(path, text);
}

}  // namespace

MetricsReport compute_metrics(const CollectOut& collected) {
  MetricsReport report;
  report.n_abnormal = collected.n_abnormal;
  report.n_normal = collected.n_normal;
  report.n_ignored = collected.n_ignored;
  report.aupr_abnormal = aupr(collected.pairs);
  const std::vector<Pair> flipped = flip_polarity(collected.pairs);
  report.aupr_normal = aupr(flipped);
  report.auroc = auroc(collected.pairs);
  report.fpr_at_95_tpr = fpr_at_95_tpr(collected.pairs);
  report.pr_abnormal = pr_curve(collected.pairs);
  report.pr_normal = pr_curve(flipped);
  report.roc = roc_curve(collected.pairs);

  // operating point of FPR-95: lowest threshold block reaching TPR >= 0.95
  double threshold = -std::numeric_limits<double>::infinity();
  {
    int64_t tp = 0;
    for (const Block& b : make_blocks(collected.pairs)) {
      tp += b.tp;
      if (double(tp) / double(report.n_abnormal) >= 0.95) {
        threshold = b.score;
        break;
      }
    }
  }
  std::map<std::string, std::pair<int64_t, int64_t>> per_class;  // detected, total
  for (size_t i = 0; i < collected.pairs.size(); ++i) {
    if (!collected.pairs[i].second) continue;
    auto& slot = per_class[collected.subclasses[i]];
    ++slot.second;
    if (collected.pairs[i].first >= threshold) ++slot.first;
  }
  for (const auto& [name, slot] : per_class)
    report.per_subclass_recall[name] = double(slot.first) / double(slot.second);
  return report;
}

ordered_json MetricsReport::to_json() const {
  ordered_json j;
  j["aupr_abnormal"] = aupr_abnormal;
  j["aupr_normal"] = aupr_normal;
  j["auroc"] = auroc;
  j["fpr_at_95_tpr"] = fpr_at_95_tpr;
  j["counts"] = {{"abnormal", n_abnormal}, {"normal", n_normal}, {"ignored", n_ignored}};
  ordered_json jp = ordered_json::object();
  for (const auto& [name, recall] : per_subclass_recall) jp[name] = recall;
  j["per_subclass_recall"] = std::move(jp);
  return j;
}

MetricsReport evaluate(const fs::path& scores_dir, const fs::path& labels_dir,
                       const fs::path& out_dir) {
  if (!fs::exists(scores_dir)) throw IoFailure("no such directory '" + scores_dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(scores_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 11 && name.substr(name.size() - 11) == ".scores.csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no *.scores.csv files in '" + scores_dir.string() + "'");

  std::vector<ScoreSeries> all_scores;
  std::map<std::string, std::vector<core::FrameLabel>> labels;
  for (const auto& file : files) {
    std::string id = file.filename().string();
    id = id.substr(0, id.size() - 11);
    ScoreSeries series;
    series.scene_id = id;
    for (const auto& row : dataio::read_scores(file)) series.entries.emplace_back(row.frame, row.score);
    all_scores.push_back(std::move(series));
    const fs::path label_path = labels_dir / (id + ".labels.json");
    if (!fs::exists(label_path))
      throw MissingLabel("no labels file for scene '" + id + "' at '" + label_path.string() + "'");
    labels[id] = dataio::read_labels(label_path);
  }

  const CollectOut collected = collect(all_scores, labels);
  MetricsReport report = compute_metrics(collected);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  dataio::write_json_file(out_dir / "metrics.json", report.to_json());
  write_curve(report.pr_abnormal, "recall", "precision", out_dir / "pr_abnormal.csv");
  write_curve(report.pr_normal, "recall", "precision", out_dir / "pr_normal.csv");
  write_curve(report.roc, "fpr", "tpr", out_dir / "roc.csv");
  return report;
}

}  // namespace maad::eval
