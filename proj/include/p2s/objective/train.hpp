#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "p2s/core/adam.hpp"
#include "p2s/objective/losses.hpp"

namespace p2s::objective {

/// Training hyperparameters plus the model shape. Defaults are the desk
/// profile: batch 16, 48x48 images, n_max 96.
struct TrainConfig {
  int batch_size = 16;
  long long pretrain_iterations = 2000;
  long long iterations = 2000;
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  long long checkpoint_every = 0;  // 0 disables periodic checkpoints
  LossWeights weights;
  model::ModelConfig model;

  void validate() const;
  core::AdamState fresh_adam() const;

  /// Ordered key/value view used by the config file and the metrics header.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  static TrainConfig from_pairs(const std::vector<std::pair<std::string, std::string>>& kv);

  /// key=value lines; blank lines and '#' comments are skipped. Keys not
  /// given keep their defaults; unknown keys are an error.
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
  std::string to_text() const;

  bool operator==(const TrainConfig&) const = default;
};

struct StepMetrics {
  long long step = 0;  // steps completed in this stage, counting this one
  std::string stage;
  double sup_sketch = 0, sup_photo = 0, short_sketch = 0, short_photo = 0;
  double l_supervised = 0, l_shortcut = 0, l_kl = 0, l_full = 0;
  double wall_time = 0;  // seconds since the stage started

  std::string to_json() const;
};

/// One forward/backward pass and one Adam update over every parameter.
/// Noise for the four codes comes from `rng`. Throws NumericError naming
/// the first op (or parameter gradient) that went non-finite.
StepMetrics train_step(core::ParameterSet& params, const model::ModelConfig& cfg, core::AdamState& opt,
                       const Batch& batch, const LossWeights& w, Rng& rng);

/// Loss breakdown averaged over `pairs` with zero noise and no update.
StepMetrics evaluate_losses(const core::ParameterSet& params, const model::ModelConfig& cfg,
                            const std::vector<sketch::PhotoSketchPair>& pairs, const LossWeights& w,
                            int batch_size = 16);

enum class Stage : int { Pretrain = 0, Finetune = 1 };
const char* stage_name(Stage s);

struct TrainState {
  model::ModelConfig model;
  core::ParameterSet params;
  core::AdamState adam;
  Stage stage = Stage::Pretrain;
  long long step = 0;
  double offset_std = 1.0;  // data scale, kept so sampled offsets can be mapped back
};

TrainState initial_state(const TrainConfig& cfg);

/// Parameters, Adam moments, stage, step, data scale and model shape in one
/// parameter file.
void save_checkpoint(const std::filesystem::path& path, const TrainState& st);
/// Adam hyperparameters come from `cfg`; moments and counters from the file.
TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg);
/// Parameters and model shape only.
TrainState load_model(const std::filesystem::path& path);

/// Indices of the pairs used at one step: min(batch, n) distinct indices.
std::vector<std::size_t> batch_indices(std::size_t n, int batch, Rng& rng);

struct TrainHooks {
  std::function<void(const StepMetrics&)> on_step;
  std::filesystem::path checkpoint_dir;    // empty: no periodic checkpoints
  std::filesystem::path final_checkpoint;  // written by pretrain_then_finetune when set
};

/// Runs the current stage of `st` until `until` steps are done. Step s of a
/// stage uses the generator derived from (seed, stage, s), so stopping,
/// saving and resuming replays the same trajectory.
void run_stage(TrainState& st, const std::vector<sketch::PhotoSketchPair>& data, const TrainConfig& cfg,
               long long until, const TrainHooks& hooks = {});

/// Switches `st` to fine-tuning: step counter and Adam moments reset.
void begin_finetune(TrainState& st, const TrainConfig& cfg);

/// Pretraining on vector-raster pairs, then fine-tuning on photo-sketch
/// pairs, both with the same loss weights.
TrainState pretrain_then_finetune(const std::vector<sketch::PhotoSketchPair>& pretrain_data,
                                  const std::vector<sketch::PhotoSketchPair>& finetune_data, const TrainConfig& cfg,
                                  const TrainHooks& hooks = {});

/// JSON-lines metrics file: a {"config": {...}} header, then one record per step.
class MetricsLog {
 public:
  MetricsLog(const std::filesystem::path& path, const TrainConfig& cfg, bool append = false);
  ~MetricsLog();
  MetricsLog(const MetricsLog&) = delete;
  MetricsLog& operator=(const MetricsLog&) = delete;

  void write(const StepMetrics& m);

  static TrainConfig read_config(const std::filesystem::path& path);

 private:
  std::unique_ptr<std::ofstream> out_;
};

}  // namespace p2s::objective
