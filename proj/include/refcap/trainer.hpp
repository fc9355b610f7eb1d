#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "refcap/checkpoint.hpp"
#include "refcap/dataset.hpp"
#include "refcap/model.hpp"

namespace refcap {

inline constexpr std::uint64_t kDefaultSeed = 1234;

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 0.002;
  double dropout = 0.5;
  int patience = 12;
  double weight_decay = 0.0;
  double clip_norm = 5.0;  // <= 0 disables clipping
  // Greedy validation decode length; 0 means the data's max_len + 2.
  int val_max_len = 0;
  Split validation_split = Split::kVal;
  std::uint64_t seed = kDefaultSeed;

  // Throws InputError when a field is out of range or patience > epochs.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Patience rule over a per-epoch validation score. Epochs are 1-based.
/// Only strict improvements reset the counter.
class EarlyStopping {
 public:
  EarlyStopping(int patience, int max_epochs);

  // Records the score of `epoch`; returns true when it is a new best.
  bool update(int epoch, double score);
  bool should_stop() const;

  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }
  int last_epoch() const { return last_epoch_; }

 private:
  int patience_;
  int max_epochs_;
  int best_epoch_ = 0;
  int last_epoch_ = 0;
  double best_score_ = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;  // per-token training loss
  double val_bleu4 = 0.0;
  double grad_norm = 0.0;  // last batch, before clipping
  bool improved = false;
};

struct TrainHooks {
  // Replaces the greedy-decode BLEU-4 validation score when set.
  std::function<double(int epoch)> validation_score;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> history;
  int best_epoch = 0;
  double best_bleu = 0.0;
  bool stopped_early = false;
  Checkpoint checkpoint;  // the selected epoch's parameters
};

/// Teacher-forced cross-entropy training with Adamax and BLEU-4 early
/// stopping. On return the model holds the best epoch's parameters; ties in
/// validation BLEU go to the lower training loss. Throws NumericalError on a
/// non-finite loss and InputError on an empty split.
template <typename T>
TrainResult train(const TrainConfig& config, const PreparedDataset& data,
                  CaptionModel<T>& model, const TrainHooks& hooks = {});

/// Corpus BLEU-4 of greedy decodes against the tokenized references.
template <typename T>
double greedy_bleu4(const CaptionModel<T>& model, const PreparedDataset& data,
                    Split split, std::size_t max_len);

}  // namespace refcap
