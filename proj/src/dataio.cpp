#include "maad/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace maad::dataio {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint binary section assumes a little-endian host");

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + path.string() + "' for writing");
  os << content;
  if (!os) throw IoFailure("failed writing '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

ordered_json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in '" + path.string() + "'");
  return j;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int row, const char* col) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ": bad " + col + " value '" + s + "'");
  }
}

core::AgentRole role_from_string(const std::string& s, int row) {
  if (s == "AGENT") return core::AgentRole::Target;
  if (s == "AV") return core::AgentRole::Ego;
  if (s == "OTHERS") return core::AgentRole::Other;
  throw ParseError("row " + std::to_string(row) + ": unknown OBJECT_TYPE '" + s + "'");
}

std::string role_to_string(core::AgentRole r) {
  switch (r) {
    case core::AgentRole::Target:
      return "AGENT";
    case core::AgentRole::Ego:
      return "AV";
    case core::AgentRole::Other:
      return "OTHERS";
  }
  return "OTHERS";
}

}  // namespace

core::Scene read_scene(const fs::path& csv_path, const std::optional<fs::path>& map_path,
                       const std::optional<fs::path>& labels_path) {
  std::ifstream is(csv_path);
  if (!is) throw IoFailure("cannot open '" + csv_path.string() + "'");

  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty file '" + csv_path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    return -1;
  };
  const int c_time = col("TIMESTAMP"), c_track = col("TRACK_ID"), c_type = col("OBJECT_TYPE");
  const int c_x = col("X"), c_y = col("Y");
  {
    std::string missing;
    if (c_time < 0) missing += " TIMESTAMP";
    if (c_track < 0) missing += " TRACK_ID";
    if (c_type < 0) missing += " OBJECT_TYPE";
    if (c_x < 0) missing += " X";
    if (c_y < 0) missing += " Y";
    if (!missing.empty())
      throw SchemaError("missing columns:" + missing + " in '" + csv_path.string() + "'");
  }

  struct RawRow {
    double t;
    std::string track;
    core::AgentRole role;
    double x, y;
  };
  std::vector<RawRow> rows;
  int row_no = 1;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(is, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (int(fields.size()) < int(header.size()))
      throw ParseError("row " + std::to_string(row_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    RawRow r;
    r.t = parse_double(fields[size_t(c_time)], row_no, "TIMESTAMP");
    r.track = fields[size_t(c_track)];
    r.role = role_from_string(fields[size_t(c_type)], row_no);
    r.x = parse_double(fields[size_t(c_x)], row_no, "X");
    r.y = parse_double(fields[size_t(c_y)], row_no, "Y");
    if (r.t < prev_t - 1e-9)
      throw SchemaError("rows not sorted by TIMESTAMP at row " + std::to_string(row_no));
    prev_t = std::max(prev_t, r.t);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw SchemaError("no data rows in '" + csv_path.string() + "'");

  const double t0 = rows.front().t;
  int max_frame = 0;
  for (const auto& r : rows) {
    const double rel = r.t - t0;
    const int frame = int(std::lround(rel / core::kDt));
    if (std::abs(rel - frame * core::kDt) > 1e-3)
      throw GridError("timestamp " + format_real(r.t) + " deviates from the 10 Hz grid by more than 1 ms");
    max_frame = std::max(max_frame, frame);
  }
  const int length = max_frame + 1;

  // tracks ordered by first appearance
  std::vector<std::string> track_order;
  std::map<std::string, size_t> track_index;
  core::Scene scene;
  scene.scene_id = csv_path.stem().string();
  scene.start_time = t0;
  int agent_tracks = 0;
  for (const auto& r : rows) {
    auto it = track_index.find(r.track);
    if (it == track_index.end()) {
      track_index[r.track] = scene.trajectories.size();
      core::Trajectory traj;
      traj.agent_id = r.track;
      traj.role = r.role;
      traj.states.assign(size_t(length), core::AgentState{});
      scene.trajectories.push_back(std::move(traj));
      if (r.role == core::AgentRole::Target) ++agent_tracks;
      it = track_index.find(r.track);
    } else if (scene.trajectories[it->second].role != r.role) {
      throw SchemaError("track '" + r.track + "' changes OBJECT_TYPE mid-file");
    }
    const int frame = int(std::lround((r.t - t0) / core::kDt));
    auto& state = scene.trajectories[it->second].states[size_t(frame)];
    if (state.valid) throw SchemaError("duplicate observation for track '" + r.track +
                                       "' at frame " + std::to_string(frame));
    state = core::AgentState{r.x, r.y, true};
  }
  if (agent_tracks != 1)
    throw SchemaError("expected exactly one AGENT track, got " + std::to_string(agent_tracks) +
                      " in '" + csv_path.string() + "'");

  if (map_path) scene.lane_graph = read_lane_graph(*map_path);
  if (labels_path) scene.labels = read_labels(*labels_path);
  return scene;
}

ScenePaths write_scene(const core::Scene& scene, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  ScenePaths paths;
  paths.csv = out_dir / (scene.scene_id + ".csv");

  std::ostringstream os;
  os << "TIMESTAMP,TRACK_ID,OBJECT_TYPE,X,Y\n";
  const int length = scene.length();
  for (int frame = 0; frame < length; ++frame) {
    const double t = scene.start_time + frame * core::kDt;
    for (const auto& traj : scene.trajectories) {
      const auto& s = traj.states[size_t(frame)];
      if (!s.valid) continue;
      os << format_real(t) << ',' << traj.agent_id << ',' << role_to_string(traj.role) << ','
         << format_real(s.x) << ',' << format_real(s.y) << '\n';
    }
  }
  write_text_file(paths.csv, os.str());

  if (!scene.lane_graph.empty()) {
    paths.map = out_dir / (scene.scene_id + ".map.json");
    write_lane_graph(scene.lane_graph, *paths.map);
  }
  if (!scene.labels.empty()) {
    paths.labels = out_dir / (scene.scene_id + ".labels.json");
    write_labels(scene.labels, *paths.labels);
  }
  return paths;
}

std::vector<core::Scene> read_scene_dir(const fs::path& dir) {
  if (!fs::exists(dir)) throw IoFailure("no such directory '" + dir.string() + "'");
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
  std::sort(csvs.begin(), csvs.end());
  std::vector<core::Scene> scenes;
  scenes.reserve(csvs.size());
  for (const auto& csv : csvs) {
    const fs::path map = csv.parent_path() / (csv.stem().string() + ".map.json");
    const fs::path labels = csv.parent_path() / (csv.stem().string() + ".labels.json");
    scenes.push_back(read_scene(csv,
                                fs::exists(map) ? std::optional<fs::path>(map) : std::nullopt,
                                fs::exists(labels) ? std::optional<fs::path>(labels) : std::nullopt));
  }
  return scenes;
}

core::LaneGraph read_lane_graph(const fs::path& path) {
  const ordered_json j = read_json_file(path);
  if (!j.contains("lanes") || !j["lanes"].is_array())
    throw SchemaError("map file '" + path.string() + "' has no 'lanes' array");
  core::LaneGraph graph;
  for (const auto& jl : j["lanes"]) {
    core::Lane lane;
    lane.id = jl.at("id").get<std::string>();
    for (const auto& p : jl.at("centerline"))
      lane.centerline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& s : jl.at("successors")) lane.successors.push_back(s.get<std::string>());
    for (const auto& s : jl.at("predecessors")) lane.predecessors.push_back(s.get<std::string>());
    if (jl.contains("left_neighbor") && !jl["left_neighbor"].is_null())
      lane.left_neighbor = jl["left_neighbor"].get<std::string>();
    if (jl.contains("right_neighbor") && !jl["right_neighbor"].is_null())
      lane.right_neighbor = jl["right_neighbor"].get<std::string>();
    graph.lanes.push_back(std::move(lane));
  }
  graph.validate();
  return graph;
}

void write_lane_graph(const core::LaneGraph& graph, const fs::path& path) {
  ordered_json j;
  j["lanes"] = ordered_json::array();
  for (const auto& lane : graph.lanes) {
    ordered_json jl;
    jl["id"] = lane.id;
    ordered_json pts = ordered_json::array();
    for (const auto& p : lane.centerline) pts.push_back({p.x, p.y});
    jl["centerline"] = std::move(pts);
    jl["successors"] = lane.successors;
    jl["predecessors"] = lane.predecessors;
    jl["left_neighbor"] = lane.left_neighbor ? ordered_json(*lane.left_neighbor) : ordered_json();
    jl["right_neighbor"] =
        lane.right_neighbor ? ordered_json(*lane.right_neighbor) : ordered_json();
    j["lanes"].push_back(std::move(jl));
  }
  write_json_file(path, j);
}

std::vector<core::FrameLabel> read_labels(const fs::path& path) {
  const ordered_json j = read_json_file(path);
  if (!j.is_array()) throw SchemaError("labels file '" + path.string() + "' is not an array");
  std::vector<core::FrameLabel> labels;
  for (const auto& jl : j) {
    core::FrameLabel l;
    l.frame_index = jl.at("frame").get<int>();
    l.category = core::label_category_from_string(jl.at("category").get<std::string>());
    l.subclass = jl.at("subclass").get<std::string>();
    if ((l.category == core::LabelCategory::Ignore) != l.subclass.empty())
      throw SchemaError("frame " + std::to_string(l.frame_index) +
                        ": subclass must be empty iff category is IGNORE");
    if (!l.subclass.empty() && !core::is_abnormal_subclass(l.subclass) &&
        !core::is_normal_subclass(l.subclass))
      throw SchemaError("unknown subclass '" + l.subclass + "'");
    labels.push_back(std::move(l));
  }
  return labels;
}

void write_labels(const std::vector<core::FrameLabel>& labels, const fs::path& path) {
  ordered_json j = ordered_json::array();
  for (const auto& l : labels) {
    ordered_json jl;
    jl["frame"] = l.frame_index;
    jl["category"] = core::to_string(l.category);
    jl["subclass"] = l.subclass;
    j.push_back(std::move(jl));
  }
  write_json_file(path, j);
}

namespace {
constexpr char kCheckpointMagic[8] = {'M', 'A', 'A', 'D', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;
}  // namespace

const diffcalc::Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

const diffcalc::Tensor& Checkpoint::require(const std::string& name) const {
  const diffcalc::Tensor* t = find(name);
  if (t == nullptr) throw ParseError("checkpoint is missing tensor '" + name + "'");
  return *t;
}

void save_checkpoint(const Checkpoint& ck, const fs::path& path) {
  ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["architecture"] = ck.architecture;
  header["objective"] = ck.objective;
  header["dims"] = ck.dims;
  header["norm_stats"] = ck.norm_stats;
  header["extra"] = ck.extra;
  ordered_json tensors = ordered_json::array();
  for (const auto& [name, t] : ck.tensors) {
    ordered_json jt;
    jt["name"] = name;
    jt["shape"] = t.shape;
    tensors.push_back(std::move(jt));
  }
  header["tensors"] = std::move(tensors);
  const std::string header_text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + path.string() + "' for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const uint32_t version = kCheckpointVersion;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t header_len = header_text.size();
  os.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  os.write(header_text.data(), std::streamsize(header_text.size()));
  for (const auto& [name, t] : ck.tensors)
    os.write(reinterpret_cast<const char*>(t.data.data()),
             std::streamsize(t.data.size() * sizeof(double)));
  if (!os) throw IoFailure("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("cannot open '" + path.string() + "'");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw VersionMismatch("'" + path.string() + "' is not a maad checkpoint");
  uint32_t version = 0;
  if (!is.read(reinterpret_cast<char*>(&version), sizeof(version)))
    throw ParseError("truncated checkpoint '" + path.string() + "'");
  if (version != kCheckpointVersion)
    throw VersionMismatch("unsupported checkpoint format version " + std::to_string(version));
  uint64_t header_len = 0;
  if (!is.read(reinterpret_cast<char*>(&header_len), sizeof(header_len)))
    throw ParseError("truncated checkpoint '" + path.string() + "'");
  std::string header_text(header_len, '\0');
  if (!is.read(header_text.data(), std::streamsize(header_len)))
    throw ParseError("truncated checkpoint '" + path.string() + "'");
  ordered_json header = ordered_json::parse(header_text, nullptr, false);
  if (header.is_discarded()) throw ParseError("corrupt checkpoint header in '" + path.string() + "'");

  Checkpoint ck;
  ck.architecture = header.at("architecture").get<std::string>();
  ck.objective = header.at("objective").get<std::string>();
  ck.dims = header.value("dims", ordered_json::object());
  ck.norm_stats = header.value("norm_stats", ordered_json::object());
  ck.extra = header.value("extra", ordered_json::object());
  for (const auto& jt : header.at("tensors")) {
    const std::string name = jt.at("name").get<std::string>();
    const std::vector<int> shape = jt.at("shape").get<std::vector<int>>();
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<size_t>(n));
    if (!is.read(reinterpret_cast<char*>(data.data()), std::streamsize(size_t(n) * sizeof(double))))
      throw ParseError("truncated tensor section in '" + path.string() + "'");
    ck.tensors.emplace_back(name, diffcalc::Tensor(shape, std::move(data)));
  }
  return ck;
}

void write_scores(const std::vector<ScoreRow>& rows, const fs::path& path) {
  std::ostringstream os;
  os << "frame,score\n";
  for (const auto& r : rows) os << r.frame << ',' << format_real(r.score) << '\n';
  write_text_file(path, os.str());
}

std::vector<ScoreRow> read_scores(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoFailure("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty scores file '" + path.string() + "'");
  std::vector<ScoreRow> rows;
  int row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw ParseError("row " + std::to_string(row_no) + ": expected 2 fields");
    ScoreRow r;
    r.frame = int(parse_double(fields[0], row_no, "frame"));
    r.score = parse_double(fields[1], row_no, "score");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace maad::dataio
