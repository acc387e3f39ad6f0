#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maad/core.hpp"
#include "maad/diffcalc.hpp"

namespace maad::dataio {

// Scene CSV columns follow the Argoverse Motion Forecasting schema so real
// sequences load unmodified: TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y. CITY_NAME is
// accepted and ignored. Exactly one track must be typed AGENT (the target).
core::Scene read_scene(const std::filesystem::path& csv_path,
                       const std::optional<std::filesystem::path>& map_path = std::nullopt,
                       const std::optional<std::filesystem::path>& labels_path = std::nullopt);

struct ScenePaths {
  std::filesystem::path csv;
  std::optional<std::filesystem::path> map;
  std::optional<std::filesystem::path> labels;
};

// Writes <scene_id>.csv, <scene_id>.map.json (if the lane graph is non-empty)
// and <scene_id>.labels.json (if labels are present). Deterministic field and
// row ordering; reals carry 17 significant digits.
ScenePaths write_scene(const core::Scene& scene, const std::filesystem::path& out_dir);

// Reads every scene in a directory (sorted by file name).
std::vector<core::Scene> read_scene_dir(const std::filesystem::path& dir);

core::LaneGraph read_lane_graph(const std::filesystem::path& path);
void write_lane_graph(const core::LaneGraph& graph, const std::filesystem::path& path);

std::vector<core::FrameLabel> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<core::FrameLabel>& labels, const std::filesystem::path& path);

// Model checkpoint container: JSON header + flat little-endian binary section
// holding every named tensor in header order.
struct Checkpoint {
  std::string architecture;  // cvm|lti|seq2seq|stgae|lanegcn_ae|ocsvm
  std::string objective;     // recon|dsvdd|oneclass
  nlohmann::ordered_json dims = nlohmann::ordered_json::object();
  nlohmann::ordered_json norm_stats = nlohmann::ordered_json::object();
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, diffcalc::Tensor>> tensors;

  const diffcalc::Tensor* find(const std::string& name) const;
  const diffcalc::Tensor& require(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct ScoreRow {
  int frame = 0;
  double score = 0.0;
};

void write_scores(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);
std::vector<ScoreRow> read_scores(const std::filesystem::path& path);

// 17-significant-digit representation; round-trips doubles exactly.
std::string format_real(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::ordered_json read_json_file(const std::filesystem::path& path);

}  // namespace maad::dataio
