#ifndef AGENTSIM__TRAINING__TRAINER_HPP_
#define AGENTSIM__TRAINING__TRAINER_HPP_

#include "agentsim/model/sim_model.hpp"
#include "agentsim/training/losses.hpp"
#include "agentsim/training/samples.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace agentsim
{
struct TrainConfig
{
  std::size_t epochs = 30;
  double lr = 1e-4;
  double weight_decay = 0.01;
  LossWeights weights;
  double teacher_forcing = 0.5;  //!< Probability of feeding back the ground-truth state.
  std::size_t unroll = 10;       //!< U cap; also capped by the decoder depth and the future length.
  double clip_norm = 1.0;
  std::size_t samples_per_track = 1;
  std::size_t batch_size = 1;  //!< Samples whose mean loss makes one optimizer step.
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json & j);
};

/// Per-timestep loss values of one unroll.
struct StepRecord
{
  double total = 0.0;
  double nll = 0.0;
  double ce = 0.0;
  double vel = 0.0;
  double heading = 0.0;
};

struct UnrollResult
{
  nn::Tensor loss;                 //!< Sum over timesteps, 1 x 1.
  std::vector<StepRecord> trace;   //!< One entry per timestep (length U).
  std::vector<AgentState> states;  //!< Target state fed in at each timestep (length U).
};

/// Builds the closed-loop loss graph for one sample. rng drives teacher forcing only.
UnrollResult closed_loop_unroll(
  const SimModel & model, const Scenario & scenario, const TrainSample & sample, const TrainConfig & config, Rng & rng);

/// Unroll, backward, clip, AdamW. Returns the per-timestep loss trace.
std::vector<StepRecord> closed_loop_train_step(
  SimModel & model, const Scenario & scenario, const TrainSample & sample, const TrainConfig & config, Rng & rng);

/// Position reached by the training loop: next sample `index` of epoch `epoch`, `step` optimizer steps done.
struct TrainProgress
{
  std::size_t epoch = 0;
  std::size_t index = 0;
  std::size_t step = 0;

  nlohmann::json to_json() const { return {{"epoch", epoch}, {"index", index}, {"step", step}}; }
  static TrainProgress from_json(const nlohmann::json & j);
};

struct LogRow
{
  std::size_t epoch = 0;
  std::size_t step = 0;
  StepRecord loss;  //!< Sums over the unroll, averaged over the batch.
};

struct TrainOptions
{
  std::optional<std::filesystem::path> log_csv;         //!< Appended; header written when the file is new.
  std::optional<std::filesystem::path> checkpoint_dir;  //!< ckpt_<step>.bin and latest.bin.
  std::size_t checkpoint_every = 0;                     //!< Optimizer steps; 0 checkpoints at epoch ends only.
  std::size_t stop_after_steps = 0;                     //!< 0 runs to the end.
  TrainProgress resume;                                 //!< Where to pick up (paired with a restored model).
  std::function<void(const LogRow &)> on_step;
};

struct TrainResult
{
  std::vector<LogRow> log;
  std::vector<double> epoch_mean_loss;  //!< Only for epochs run to completion in this call.
  TrainProgress progress;
};

/// Epoch order of the sample list, deterministic in (seed, epoch).
std::vector<TrainSample> epoch_samples(
  const std::vector<Scenario> & corpus, const TrainConfig & config, std::size_t epoch);

TrainResult train(
  SimModel & model, const std::vector<Scenario> & corpus, const TrainConfig & config, const TrainOptions & options = {});

/// Whole-training checkpoint: model, optimizer moments, TrainConfig and progress.
void save_training_checkpoint(const std::filesystem::path & path, const SimModel & model, const TrainConfig & config,
  const TrainProgress & progress);

struct ResumeState
{
  SimModel model;
  TrainConfig config;
  TrainProgress progress;
};
ResumeState load_training_checkpoint(const std::filesystem::path & path);

inline constexpr const char * kTrainLogHeader = "epoch,step,total,nll,vel,heading,ce";
}  // namespace agentsim

#endif  // AGENTSIM__TRAINING__TRAINER_HPP_
