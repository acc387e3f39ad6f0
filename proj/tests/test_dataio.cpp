#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "maad/dataio.hpp"
#include "maad/models.hpp"
#include "testutil.hpp"

using namespace maad;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static uint64_t counter = 0;
    path = fs::temp_directory_path() / ("maad_dataio_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

core::Scene labeled_scene() {
  core::Scene scene = testutil::make_linear_scene(50, {10.0, -3.0}, {7.5, 0.25}, 2);
  scene.scene_id = "roundtrip";
  scene.trajectories[1].role = core::AgentRole::Ego;
  scene.lane_graph = testutil::make_mini_map();
  for (int k = 0; k < 50; ++k) {
    core::FrameLabel l;
    l.frame_index = k;
    if (k >= 20 && k < 23) {
      l.category = core::LabelCategory::Ignore;
    } else if (k >= 23 && k < 40) {
      l.category = core::LabelCategory::Abnormal;
      l.subclass = "staggering";
    } else {
      l.category = core::LabelCategory::Normal;
      l.subclass = "straight";
    }
    scene.labels.push_back(std::move(l));
  }
  return scene;
}

bool same_scene(const core::Scene& a, const core::Scene& b) {
  if (a.scene_id != b.scene_id || a.length() != b.length()) return false;
  if (a.trajectories.size() != b.trajectories.size()) return false;
  for (size_t i = 0; i < a.trajectories.size(); ++i) {
    const auto& ta = a.trajectories[i];
    const auto& tb = b.trajectories[i];
    if (ta.agent_id != tb.agent_id || ta.role != tb.role) return false;
    for (size_t k = 0; k < ta.states.size(); ++k) {
      if (ta.states[k].valid != tb.states[k].valid) return false;
      if (ta.states[k].x != tb.states[k].x || ta.states[k].y != tb.states[k].y) return false;
    }
  }
  if (a.labels.size() != b.labels.size()) return false;
  for (size_t i = 0; i < a.labels.size(); ++i)
    if (a.labels[i].frame_index != b.labels[i].frame_index ||
        a.labels[i].category != b.labels[i].category ||
        a.labels[i].subclass != b.labels[i].subclass)
      return false;
  if (a.lane_graph.lanes.size() != b.lane_graph.lanes.size()) return false;
  for (size_t i = 0; i < a.lane_graph.lanes.size(); ++i) {
    const auto& la = a.lane_graph.lanes[i];
    const auto& lb = b.lane_graph.lanes[i];
    if (la.id != lb.id || la.successors != lb.successors || la.predecessors != lb.predecessors)
      return false;
    if (la.left_neighbor != lb.left_neighbor || la.right_neighbor != lb.right_neighbor)
      return false;
    if (la.centerline.size() != lb.centerline.size()) return false;
    for (size_t p = 0; p < la.centerline.size(); ++p)
      if (la.centerline[p].x != lb.centerline[p].x || la.centerline[p].y != lb.centerline[p].y)
        return false;
  }
  return true;
}

}  // namespace

TEST_CASE("scene write/read round trip is identity on all fields") {
  TempDir tmp;
  const core::Scene scene = labeled_scene();
  const auto paths = dataio::write_scene(scene, tmp.path);
  REQUIRE(paths.map.has_value());
  REQUIRE(paths.labels.has_value());
  const core::Scene back = dataio::read_scene(paths.csv, paths.map, paths.labels);
  CHECK(same_scene(scene, back));

  // rewrites are byte-identical
  const std::string first = dataio::read_text_file(paths.csv);
  dataio::write_scene(back, tmp.path);
  CHECK(dataio::read_text_file(paths.csv) == first);
}

TEST_CASE("scene with holes round trips the validity mask") {
  TempDir tmp;
  core::Scene scene = testutil::make_linear_scene(30, {0, 0}, {5, 0}, 2);
  scene.scene_id = "holes";
  for (int k = 5; k < 12; ++k) scene.trajectories[1].states[size_t(k)] = {};
  for (int k = 0; k < 8; ++k) scene.trajectories[2].states[size_t(k)] = {};
  const auto paths = dataio::write_scene(scene, tmp.path);
  const core::Scene back = dataio::read_scene(paths.csv);
  CHECK(same_scene(scene, back));
}

TEST_CASE("a 50-frame 3-track file maps directly") {
  TempDir tmp;
  core::Scene scene = testutil::make_linear_scene(50, {2, 2}, {8, 0}, 2);
  scene.scene_id = "simple";
  const auto paths = dataio::write_scene(scene, tmp.path);
  const core::Scene back = dataio::read_scene(paths.csv);
  CHECK(back.length() == 50);
  CHECK(back.trajectories.size() == 3);
  CHECK(back.target() != nullptr);
}

TEST_CASE("two AGENT tracks raise SchemaError") {
  TempDir tmp;
  const fs::path csv = tmp.path / "bad.csv";
  dataio::write_text_file(csv,
                          "TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y\n"
                          "0.0,a,AGENT,0,0\n"
                          "0.0,b,AGENT,1,1\n"
                          "0.1,a,AGENT,0.5,0\n"
                          "0.1,b,AGENT,1.5,1\n");
  CHECK_THROWS_AS(dataio::read_scene(csv), SchemaError);
}

TEST_CASE("missing columns are listed in the SchemaError") {
  TempDir tmp;
  const fs::path csv = tmp.path / "cols.csv";
  dataio::write_text_file(csv, "TIMESTAMP,TRACK_ID,X,Y\n0.0,a,0,0\n");
  try {
    dataio::read_scene(csv);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("OBJECT_TYPE") != std::string::npos);
  }
}

TEST_CASE("bad values carry the row number") {
  TempDir tmp;
  const fs::path csv = tmp.path / "badrow.csv";
  dataio::write_text_file(csv,
                          "TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y\n"
                          "0.0,a,AGENT,0,0\n"
                          "0.1,a,AGENT,oops,0\n");
  try {
    dataio::read_scene(csv);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("off-grid timestamps raise GridError") {
  TempDir tmp;
  const fs::path csv = tmp.path / "grid.csv";
  dataio::write_text_file(csv,
                          "TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y\n"
                          "0.0,a,AGENT,0,0\n"
                          "0.1,a,AGENT,1,0\n"
                          "0.253,a,AGENT,2,0\n");
  CHECK_THROWS_AS(dataio::read_scene(csv), GridError);
}

TEST_CASE("CITY_NAME column is accepted and ignored") {
  TempDir tmp;
  const fs::path csv = tmp.path / "city.csv";
  dataio::write_text_file(csv,
                          "TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y,CITY_NAME\n"
                          "0.0,a,AGENT,0,0,PIT\n"
                          "0.1,a,AGENT,1,0,PIT\n");
  const core::Scene scene = dataio::read_scene(csv);
  CHECK(scene.length() == 2);
}

TEST_CASE("scene without labels omits the labels file") {
  TempDir tmp;
  core::Scene scene = testutil::make_linear_scene(20, {0, 0}, {5, 0});
  scene.scene_id = "nolabels";
  const auto paths = dataio::write_scene(scene, tmp.path);
  CHECK_FALSE(paths.labels.has_value());
  CHECK_FALSE(fs::exists(tmp.path / "nolabels.labels.json"));
}

TEST_CASE("checkpoint round trip is exact") {
  TempDir tmp;
  Rng rng(42);
  dataio::Checkpoint ck;
  ck.architecture = "seq2seq";
  ck.objective = "recon";
  ck.dims = {{"embed", 8}, {"hidden", 16}, {"latent", 16}};
  ck.norm_stats = {{"input_scale", 5.25}};
  ck.extra = {{"note", "test"}};
  ck.tensors.emplace_back("w1", diffcalc::uniform_init(8, 64, rng));
  ck.tensors.emplace_back("b1", diffcalc::Tensor::zeros({1, 64}));
  ck.tensors.emplace_back("w2", diffcalc::uniform_init(16, 2, rng));
  const fs::path path = tmp.path / "model.maad";
  dataio::save_checkpoint(ck, path);
  const dataio::Checkpoint back = dataio::load_checkpoint(path);
  CHECK(back.architecture == "seq2seq");
  CHECK(back.norm_stats.at("input_scale").get<double>() == 5.25);
  REQUIRE(back.tensors.size() == 3);
  for (size_t i = 0; i < ck.tensors.size(); ++i) {
    CHECK(back.tensors[i].first == ck.tensors[i].first);
    CHECK(back.tensors[i].second.shape == ck.tensors[i].second.shape);
    CHECK(back.tensors[i].second.data == ck.tensors[i].second.data);  // max abs diff 0
  }
}

TEST_CASE("truncated or foreign checkpoint files fail cleanly") {
  TempDir tmp;
  const fs::path path = tmp.path / "model.maad";
  dataio::Checkpoint ck;
  ck.architecture = "seq2seq";
  ck.objective = "recon";
  ck.tensors.emplace_back("w", diffcalc::Tensor::zeros({4, 4}));
  dataio::save_checkpoint(ck, path);

  const std::string full = dataio::read_text_file(path);
  dataio::write_text_file(path, full.substr(0, full.size() / 2));
  CHECK_THROWS_AS(dataio::load_checkpoint(path), ParseError);

  dataio::write_text_file(path, "definitely not a checkpoint");
  CHECK_THROWS_AS(dataio::load_checkpoint(path), VersionMismatch);
}

TEST_CASE("checkpoint architecture mismatch") {
  TempDir tmp;
  models::ModelDescriptor desc;
  desc.architecture = models::Architecture::Stgae;
  const models::DeepModel model = models::make_model(desc, 1);
  const fs::path path = tmp.path / "stgae.maad";
  dataio::save_checkpoint(models::to_checkpoint(model), path);
  const dataio::Checkpoint ck = dataio::load_checkpoint(path);
  CHECK_THROWS_AS(models::model_from_checkpoint(ck, models::Architecture::Seq2Seq),
                  ArchitectureMismatch);
  CHECK_NOTHROW(models::model_from_checkpoint(ck, models::Architecture::Stgae));
}

TEST_CASE("scores csv round trip") {
  TempDir tmp;
  std::vector<dataio::ScoreRow> rows;
  Rng rng(3);
  for (int k = 15; k < 60; ++k) rows.push_back({k, rng.normal() * 3.7});
  const fs::path path = tmp.path / "s.scores.csv";
  dataio::write_scores(rows, path);
  const auto back = dataio::read_scores(path);
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].frame == rows[i].frame);
    CHECK(back[i].score == rows[i].score);
  }
}
