#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "maad/datagen.hpp"
#include "maad/dataio.hpp"
#include "maad/eval.hpp"
#include "maad/models.hpp"
#include "maad/oneclass.hpp"
#include "maad/scorer_factory.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr size_t kOcsvmFeatureCap = 2000;

void write_run_config(const fs::path& out_dir, ordered_json config) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  maad::dataio::write_json_file(out_dir / "run_config.json", config);
}

int cmd_generate(const std::string& config_path, const std::string& out_dir, uint64_t seed,
                 bool seed_set, int jobs) {
  maad::datagen::DatasetConfig config = maad::datagen::default_dataset_config();
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) throw maad::IoFailure("no such config '" + config_path + "'");
    config = maad::datagen::parse_dataset_config(maad::dataio::read_json_file(config_path));
  }
  const uint64_t effective_seed = seed_set ? seed : config.seed;
  const ordered_json manifest =
      maad::datagen::generate_dataset(config, out_dir, effective_seed, jobs);
  std::cout << "generated " << manifest["splits"]["train"]["scenes"] << " train / "
            << manifest["splits"]["val"]["scenes"] << " val / "
            << manifest["splits"]["test"]["scenes"] << " test scenes into " << out_dir << "\n";
  std::cout << "test label frames: " << manifest["splits"]["test"]["label_frames"].dump() << "\n";
  return 0;
}

int cmd_train(const std::string& model, const std::string& objective, const std::string& data_dir,
              const std::string& val_dir, int epochs, int batch, uint64_t seed,
              const std::string& out_dir) {
  const auto arch = maad::models::architecture_from_string(model);
  if (arch == maad::models::Architecture::Cvm || arch == maad::models::Architecture::Lti)
    throw maad::ConfigError(model + " requires no training");

  maad::models::ModelDescriptor desc;
  desc.architecture = arch;
  desc.objective = maad::models::objective_from_string(objective);

  const auto train_scenes = maad::dataio::read_scene_dir(data_dir);
  if (train_scenes.empty()) throw maad::ConfigError("no scenes in '" + data_dir + "'");
  std::vector<maad::core::Scene> val_scenes;
  if (!val_dir.empty()) val_scenes = maad::dataio::read_scene_dir(val_dir);

  maad::models::TrainOptions opts;
  opts.epochs = epochs;
  opts.batch_size = batch;
  opts.seed = seed;

  maad::log_info("training " + model + "/" + objective + " on " +
                 std::to_string(train_scenes.size()) + " scenes");
  maad::models::TrainResult result;
  try {
    result = maad::models::train(desc, train_scenes, val_scenes, opts);
  } catch (const maad::Error&) {
    throw;
  } catch (const std::exception& e) {
    throw maad::TrainingFailure(e.what());
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  maad::dataio::save_checkpoint(maad::models::to_checkpoint(result.model),
                                fs::path(out_dir) / "checkpoint.maad");
  std::string log = "epoch,lr,train_recon,train_aux,train_total,val_loss\n";
  for (const auto& row : result.log) {
    log += std::to_string(row.epoch) + "," + maad::dataio::format_real(row.lr) + "," +
           maad::dataio::format_real(row.train_recon) + "," +
           maad::dataio::format_real(row.train_aux) + "," +
           maad::dataio::format_real(row.train_total) + "," +
           maad::dataio::format_real(row.val_loss) + "\n";
  }
  maad::dataio::write_text_file(fs::path(out_dir) / "train_log.csv", log);
  write_run_config(out_dir, ordered_json{{"command", "train"},
                                         {"model", model},
                                         {"objective", objective},
                                         {"data", data_dir},
                                         {"val", val_dir},
                                         {"epochs", epochs},
                                         {"batch", batch},
                                         {"seed", seed}});
  std::cout << "best epoch " << result.best_epoch << " (val loss "
            << maad::dataio::format_real(result.log[size_t(result.best_epoch) - 1].val_loss)
            << "), checkpoint written to " << (fs::path(out_dir) / "checkpoint.maad").string()
            << "\n";
  return 0;
}

int cmd_score(const std::string& checkpoint, const std::string& data_dir,
              const std::string& out_dir, int jobs) {
  const auto scorer = maad::make_scorer_from_arg(checkpoint);
  const auto scenes = maad::dataio::read_scene_dir(data_dir);
  if (scenes.empty()) throw maad::ConfigError("no scenes in '" + data_dir + "'");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<maad::eval::ScoreSeries> all(scenes.size());
  maad::parallel_for(int(scenes.size()), jobs, [&](int i) {
    all[size_t(i)] = maad::eval::score_scene(*scorer, scenes[size_t(i)]);
  });
  for (const auto& series : all) {
    std::vector<maad::dataio::ScoreRow> rows;
    rows.reserve(series.entries.size());
    for (const auto& [frame, score] : series.entries) rows.push_back({frame, score});
    maad::dataio::write_scores(rows, fs::path(out_dir) / (series.scene_id + ".scores.csv"));
  }
  write_run_config(out_dir, ordered_json{{"command", "score"},
                                         {"checkpoint", checkpoint},
                                         {"data", data_dir}});
  std::cout << "scored " << scenes.size() << " scenes into " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& scores_dir, const std::string& labels_dir,
             const std::string& out_dir) {
  const maad::eval::MetricsReport report =
      maad::eval::evaluate(scores_dir, labels_dir, out_dir);
  write_run_config(out_dir, ordered_json{{"command", "eval"},
                                         {"scores", scores_dir},
                                         {"labels", labels_dir}});
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

int cmd_gridsearch_ocsvm(const std::string& checkpoint, const std::string& train_dir,
                         const std::string& test_dir, const std::string& labels_dir,
                         double subset_frac, uint64_t seed, const std::string& out_dir) {
  const maad::dataio::Checkpoint enc_ck = maad::dataio::load_checkpoint(checkpoint);
  const maad::models::DeepModel encoder = maad::models::model_from_checkpoint(enc_ck);

  const auto train_scenes = maad::dataio::read_scene_dir(train_dir);
  if (train_scenes.empty()) throw maad::ConfigError("no scenes in '" + train_dir + "'");
  auto test_scenes = maad::dataio::read_scene_dir(test_dir);
  if (test_scenes.empty()) throw maad::ConfigError("no scenes in '" + test_dir + "'");
  if (labels_dir != test_dir) {
    for (auto& scene : test_scenes) {
      const fs::path p = fs::path(labels_dir) / (scene.scene_id + ".labels.json");
      if (!fs::exists(p)) throw maad::MissingLabel("no labels file for '" + scene.scene_id + "'");
      scene.labels = maad::dataio::read_labels(p);
    }
  }

  maad::log_info("extracting latent features");
  const auto features = maad::extract_latents(encoder, train_scenes, kOcsvmFeatureCap, seed);
  const maad::LabeledLatents labeled = maad::extract_labeled_latents(encoder, test_scenes);
  const auto subset = maad::oneclass::draw_subset_indices(labeled.features.size(), subset_frac, seed);
  std::vector<std::vector<double>> sub_features;
  std::vector<int> sub_flags;
  for (const size_t idx : subset) {
    sub_features.push_back(labeled.features[idx]);
    sub_flags.push_back(labeled.abnormal[idx]);
  }

  maad::log_info("grid search over " +
                 std::to_string(maad::oneclass::default_gamma_grid().size() *
                                maad::oneclass::default_nu_grid().size()) +
                 " candidates on " + std::to_string(features.size()) + " features");
  const maad::oneclass::GridSearchResult result =
      maad::oneclass::grid_search(features, sub_features, sub_flags);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  maad::dataio::save_checkpoint(maad::ocsvm_with_encoder_checkpoint(encoder, result.best_model),
                                fs::path(out_dir) / "ocsvm.maad");
  std::string grid = "gamma,nu,aupr_abnormal\n";
  for (const auto& cell : result.cells)
    grid += maad::dataio::format_real(cell.gamma) + "," + maad::dataio::format_real(cell.nu) +
            "," + maad::dataio::format_real(cell.aupr_abnormal) + "\n";
  maad::dataio::write_text_file(fs::path(out_dir) / "grid.csv", grid);
  write_run_config(out_dir, ordered_json{{"command", "gridsearch-ocsvm"},
                                         {"checkpoint", checkpoint},
                                         {"train_data", train_dir},
                                         {"test_data", test_dir},
                                         {"labels", labels_dir},
                                         {"subset_frac", subset_frac},
                                         {"seed", seed}});
  std::cout << "best gamma=" << maad::dataio::format_real(result.best_gamma)
            << " nu=" << maad::dataio::format_real(result.best_nu) << ", model written to "
            << (fs::path(out_dir) / "ocsvm.maad").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent trajectory anomaly detection toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, val_dir, checkpoint, scores_dir, labels_dir,
      train_dir, test_dir, model, objective = "recon";
  uint64_t seed = 0;
  int epochs = 36, batch = 32, jobs = 1;
  double subset_frac = 0.2;

  auto* gen = app.add_subcommand("generate", "generate a synthetic benchmark dataset");
  gen->add_option("--config", config_path, "dataset config JSON (defaults to the built-in 80/80 test set)");
  gen->add_option("--out", out_dir, "output directory")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "overrides the config seed");
  gen->add_option("--jobs", jobs, "parallel scene workers");

  auto* train = app.add_subcommand("train", "train a deep baseline");
  train->add_option("--model", model, "seq2seq|stgae|lanegcn_ae (cvm/lti need no training)")
      ->required();
  train->add_option("--objective", objective, "recon|dsvdd");
  train->add_option("--data", data_dir, "training scene directory")->required();
  train->add_option("--val", val_dir, "validation scene directory");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--out", out_dir, "output directory")->required();

  auto* score = app.add_subcommand("score", "score scenes with a checkpoint");
  score->add_option("--checkpoint", checkpoint, "checkpoint file, or 'cvm' / 'lti'")->required();
  score->add_option("--data", data_dir, "scene directory")->required();
  score->add_option("--out", out_dir, "output directory")->required();
  score->add_option("--jobs", jobs, "parallel scene workers");

  auto* evalc = app.add_subcommand("eval", "compute metrics from scores and labels");
  evalc->add_option("--scores", scores_dir, "directory of *.scores.csv")->required();
  evalc->add_option("--labels", labels_dir, "directory of *.labels.json")->required();
  evalc->add_option("--out", out_dir, "output directory")->required();

  auto* grid = app.add_subcommand("gridsearch-ocsvm", "fit the OC-SVM grid on frozen latents");
  grid->add_option("--checkpoint", checkpoint, "encoder checkpoint")->required();
  grid->add_option("--train-data", train_dir, "unlabeled training scenes")->required();
  grid->add_option("--test-data", test_dir, "labeled test scenes")->required();
  grid->add_option("--labels", labels_dir, "labels directory (defaults to --test-data)");
  grid->add_option("--subset-frac", subset_frac, "labeled validation fraction");
  grid->add_option("--seed", seed, "RNG seed");
  grid->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(config_path, out_dir, seed, !gen_seed->empty(), jobs);
    if (train->parsed())
      return cmd_train(model, objective, data_dir, val_dir, epochs, batch, seed, out_dir);
    if (score->parsed()) return cmd_score(checkpoint, data_dir, out_dir, jobs);
    if (evalc->parsed()) return cmd_eval(scores_dir, labels_dir, out_dir);
    if (grid->parsed())
      return cmd_gridsearch_ocsvm(checkpoint, train_dir, test_dir,
                                  labels_dir.empty() ? test_dir : labels_dir, subset_frac, seed,
                                  out_dir);
  } catch (const maad::Error& e) {
    maad::log_error(e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    maad::log_error(e.what());
    return 4;
  }
  return 0;
}
