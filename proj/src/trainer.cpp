#include "refcap/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refcap/errors.hpp"
#include "refcap/inference.hpp"
#include "refcap/metrics.hpp"
#include "refcap/optimizer.hpp"

namespace refcap {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw InputError("train config: " + what); };
  if (epochs < 1) fail("epochs must be positive");
  if (batch_size < 1) fail("batch_size must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (patience < 1) fail("patience must be positive");
  if (patience > epochs) fail("patience must not exceed epochs");
  if (weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (val_max_len < 0) fail("val_max_len must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"dropout", dropout},
          {"patience", patience},
          {"weight_decay", weight_decay},
          {"clip_norm", clip_norm},
          {"val_max_len", val_max_len},
          {"validation_split", std::string(split_name(validation_split))},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.dropout = j.value("dropout", c.dropout);
  c.patience = j.value("patience", c.patience);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.val_max_len = j.value("val_max_len", c.val_max_len);
  if (j.contains("validation_split")) {
    c.validation_split = parse_split(j.at("validation_split").get<std::string>());
  }
  c.seed = j.value("seed", c.seed);
  return c;
}

EarlyStopping::EarlyStopping(int patience, int max_epochs)
    : patience_(patience), max_epochs_(max_epochs) {
  if (patience < 1 || max_epochs < 1) {
    throw std::invalid_argument("patience and max_epochs must be positive");
  }
}

bool EarlyStopping::update(int epoch, double score) {
  last_epoch_ = epoch;
  if (best_epoch_ == 0 || score > best_score_) {
    best_epoch_ = epoch;
    best_score_ = score;
    return true;
  }
  return false;
}

bool EarlyStopping::should_stop() const {
  if (last_epoch_ >= max_epochs_) return true;
  return best_epoch_ > 0 && last_epoch_ - best_epoch_ >= patience_;
}

template <typename T>
double greedy_bleu4(const CaptionModel<T>& model, const PreparedDataset& data,
                    Split split, std::size_t max_len) {
  metrics::EvalCorpus corpus;
  for (const auto* img : data.split(split)) {
    const auto c = greedy_decode(model, data.features.at(img->id), max_len);
    corpus.push_back({decode_tokens(data.vocab, c.ids), img->references});
  }
  if (corpus.empty()) {
    throw InputError("split " + std::string(split_name(split)) + " is empty");
  }
  return 100.0 * metrics::bleu(corpus, 4);
}

namespace {

struct Sample {
  const FeatureRecord* record;
  const EncodedCaption* caption;
};

template <typename T>
std::vector<std::vector<T>> snapshot(const ParameterSet<T>& params) {
  std::vector<std::vector<T>> out;
  for (const auto& [name, t] : params.entries()) {
    out.emplace_back(t.value().begin(), t.value().end());
  }
  return out;
}

template <typename T>
void restore(ParameterSet<T>& params, const std::vector<std::vector<T>>& values) {
  auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), entries[i].second.value().begin());
  }
}

}  // namespace

template <typename T>
TrainResult train(const TrainConfig& config, const PreparedDataset& data,
                  CaptionModel<T>& model, const TrainHooks& hooks) {
  config.validate();
  if (model.config().vocab_size != data.vocab.size()) {
    throw InputError("model vocabulary size " + std::to_string(model.config().vocab_size) +
                     " differs from the data's " + std::to_string(data.vocab.size()));
  }
  std::vector<Sample> samples;
  for (const auto* img : data.split(Split::kTrain)) {
    for (const auto& cap : img->captions) samples.push_back({&data.features.at(img->id), &cap});
  }
  if (samples.empty()) throw InputError("training split has no captions");
  if (!hooks.validation_score && data.split(config.validation_split).empty()) {
    throw InputError("validation split " +
                     std::string(split_name(config.validation_split)) + " is empty");
  }
  const std::size_t val_len = config.val_max_len > 0
                                  ? static_cast<std::size_t>(config.val_max_len)
                                  : static_cast<std::size_t>(data.max_len) + 2;

  model.set_dropout(config.dropout);
  auto& params = model.params();
  Adamax<T> opt(params, {.learning_rate = config.learning_rate});
  Rng shuffle_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng* drop = config.dropout > 0.0 ? &dropout_rng : nullptr;

  EarlyStopping stopper(config.patience, config.epochs);
  TrainResult result;
  std::vector<std::vector<T>> best_values = snapshot(params);
  double best_loss = 0.0;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) {
        batch_tokens += samples[order[i]].caption->true_length - 1;
      }
      params.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = samples[order[i]];
        Graph<T> g;
        auto loss = model.caption_loss(g, *s.record, *s.caption, drop);
        const double value = static_cast<double>(loss.item());
        if (!std::isfinite(value)) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                               " on image \"" + s.record->image_id + "\"");
        }
        loss_sum += value;
        g.backward(g.scale(loss, static_cast<T>(1.0 / static_cast<double>(batch_tokens))));
      }
      token_sum += batch_tokens;
      if (config.weight_decay > 0.0) apply_weight_decay(params, config.weight_decay);
      log.grad_norm = clip_grad_norm(
          params, config.clip_norm > 0.0 ? config.clip_norm
                                         : std::numeric_limits<double>::infinity());
      if (!std::isfinite(log.grad_norm)) {
        throw NumericalError("non-finite gradient norm at epoch " + std::to_string(epoch));
      }
      opt.step();
    }
    log.loss = loss_sum / static_cast<double>(token_sum);

    log.val_bleu4 = hooks.validation_score
                        ? hooks.validation_score(epoch)
                        : greedy_bleu4(model, data, config.validation_split, val_len);
    log.improved = stopper.update(epoch, log.val_bleu4);
    const bool tie = !log.improved && log.val_bleu4 == stopper.best_score() &&
                     log.loss < best_loss;
    if (log.improved || tie) {
      best_values = snapshot(params);
      best_loss = log.loss;
      result.best_epoch = epoch;
      result.best_bleu = log.val_bleu4;
    }
    result.history.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (stopper.should_stop()) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }

  restore(params, best_values);
  params.zero_grad();
  result.checkpoint = make_checkpoint(model, data.vocab, data.max_len);
  result.checkpoint.train = config.to_json();
  result.checkpoint.epoch = result.best_epoch;
  result.checkpoint.best_bleu = result.best_bleu;
  return result;
}

template TrainResult train<float>(const TrainConfig&, const PreparedDataset&,
                                  CaptionModel<float>&, const TrainHooks&);
template TrainResult train<double>(const TrainConfig&, const PreparedDataset&,
                                   CaptionModel<double>&, const TrainHooks&);
template double greedy_bleu4<float>(const CaptionModel<float>&, const PreparedDataset&,
                                    Split, std::size_t);
template double greedy_bleu4<double>(const CaptionModel<double>&, const PreparedDataset&,
                                     Split, std::size_t);

}  // namespace refcap
