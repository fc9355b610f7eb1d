#include "refcap/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "refcap/checkpoint.hpp"
#include "refcap/dataset.hpp"
#include "refcap/errors.hpp"
#include "refcap/inference.hpp"
#include "refcap/metrics.hpp"
#include "refcap/trainer.hpp"

namespace refcap::cli {
namespace {

using nlohmann::json;

// REFCAP_SEED replaces the built-in default; an explicit --seed wins.
std::uint64_t default_seed() {
  if (const char* env = std::getenv("REFCAP_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InputError(std::string("REFCAP_SEED is not an unsigned integer: ") + env);
    }
  }
  return kDefaultSeed;
}

struct Output {
  std::ostream& out;
  bool pretty = false;

  void emit(const json& j) const { out << (pretty ? j.dump(2) : j.dump()) << '\n'; }
};

struct PrepareArgs {
  std::string manifest, features, out;
  int min_count = kDefaultMinCount;
  int max_len = kDefaultMaxLen;
};

struct TrainArgs {
  std::string data, out, variant = "refining";
  TrainConfig train;
  ModelConfig model;
  std::optional<std::uint64_t> seed;
  std::string val_split = "val";
  int precision = 32;
};

struct CaptionArgs {
  std::string checkpoint, features, id, trace;
  std::size_t beam_size = kDefaultBeamSize;
  std::size_t max_len = 0;  // 0: checkpoint max_len + 2
};

struct EvaluateArgs {
  std::string checkpoint, data, split = "test";
  std::size_t beam_size = kDefaultBeamSize;
  std::size_t max_len = 0;
  bool oracle_candidates = false;
};

struct SynthArgs {
  std::string manifest, out;
  std::size_t regions = 49, dim = 2048, global_dim = 2048;
  std::optional<std::uint64_t> seed;
};

std::size_t decode_len(std::size_t requested, const Checkpoint& ckpt) {
  return requested > 0 ? requested : static_cast<std::size_t>(ckpt.max_len) + 2;
}

Caption decode(const CaptionModel<float>& model, const FeatureRecord& record,
               std::size_t beam_size, std::size_t max_len) {
  if (beam_size <= 1) return greedy_decode(model, record, max_len);
  return beam_search(model, record, {.beam_size = beam_size, .max_len = max_len})
      .front();
}

const FeatureRecord& find_record(const FeatureStore& store, const std::string& id) {
  if (!store.contains(id)) throw InputError("unknown image id \"" + id + "\"");
  return store.at(id);
}

int cmd_prepare(const PrepareArgs& a, const Output& o) {
  auto manifest = load_manifest(a.manifest);
  auto data = prepare_dataset(manifest, load_features(a.features), a.min_count, a.max_len);
  save_prepared(data, a.out);
  json splits = json::object();
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    splits[std::string(split_name(s))] = data.split(s).size();
  }
  o.emit({{"event", "prepare"},
          {"vocab_size", data.vocab.size()},
          {"splits", splits},
          {"rejected_captions", data.rejected_captions},
          {"out", a.out}});
  return kExitOk;
}

template <typename T>
TrainResult run_training(const PreparedDataset& data,
                         const ModelConfig& mc, const TrainConfig& tc, const Output& o) {
  CaptionModel<T> model(mc, tc.seed);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& log) {
    if (o.pretty) {
      o.out << "epoch " << std::setw(3) << log.epoch << "  loss " << std::fixed
            << std::setprecision(4) << log.loss << "  val BLEU-4 " << std::setprecision(2)
            << log.val_bleu4 << (log.improved ? "  *" : "") << '\n'
            << std::defaultfloat;
    } else {
      o.emit({{"event", "epoch"},
              {"epoch", log.epoch},
              {"loss", log.loss},
              {"val_bleu4", log.val_bleu4},
              {"grad_norm", log.grad_norm},
              {"improved", log.improved}});
    }
  };
  return train(tc, data, model, hooks);
}

int cmd_train(const TrainArgs& a, const Output& o) {
  const Variant variant = parse_variant(a.variant);
  auto data = load_prepared(a.data);
  ModelConfig mc = a.model;
  mc.apply_variant(variant);
  mc.feature_dim = data.features.dim();
  mc.global_dim = data.features.global_dim();
  mc.vocab_size = data.vocab.size();
  TrainConfig tc = a.train;
  tc.seed = a.seed.value_or(default_seed());
  tc.validation_split = parse_split(a.val_split);
  mc.dropout = tc.dropout;
  mc.validate();
  tc.validate();
  if (a.precision != 32 && a.precision != 64) {
    throw InputError("precision must be 32 or 64");
  }
  o.emit({{"event", "config"},
          {"variant", variant_name(variant)},
          {"model", mc.to_json()},
          {"train", tc.to_json()}});
  auto result = a.precision == 64 ? run_training<double>(data, mc, tc, o)
                                  : run_training<float>(data, mc, tc, o);
  result.checkpoint.train["variant"] = std::string(variant_name(variant));
  save_checkpoint(result.checkpoint, a.out);
  o.emit({{"event", "done"},
          {"epochs_run", result.history.size()},
          {"best_epoch", result.best_epoch},
          {"best_bleu4", result.best_bleu},
          {"stopped_early", result.stopped_early},
          {"checkpoint", a.out}});
  return kExitOk;
}

int cmd_caption(const CaptionArgs& a, const Output& o) {
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto vocab = ckpt.vocabulary();
  const auto model = model_from_checkpoint<float>(ckpt);
  const auto store = load_features(a.features);
  const auto& record = find_record(store, a.id);
  const auto c = decode(model, record, a.beam_size, decode_len(a.max_len, ckpt));
  const auto tokens = decode_tokens(vocab, c.ids);
  if (!a.trace.empty()) make_trace(c, vocab, a.id).save(a.trace);
  o.emit({{"image_id", a.id},
          {"caption", join_tokens(tokens)},
          {"score", c.score},
          {"beam_size", a.beam_size}});
  return kExitOk;
}

int cmd_export_attention(const CaptionArgs& a, const Output& o) {
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto vocab = ckpt.vocabulary();
  const auto model = model_from_checkpoint<float>(ckpt);
  const auto store = load_features(a.features);
  const auto c = decode(model, find_record(store, a.id), a.beam_size,
                        decode_len(a.max_len, ckpt));
  const auto trace = make_trace(c, vocab, a.id);
  trace.save(a.trace);
  o.emit({{"event", "export-attention"},
          {"image_id", a.id},
          {"tokens", trace.tokens.size()},
          {"out", a.trace}});
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, const Output& o) {
  const Split split = parse_split(a.split);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto data = load_prepared(a.data);
  if (data.vocab.fingerprint() != ckpt.vocab_fingerprint) {
    throw InputError("data vocabulary does not match the checkpoint's");
  }
  const auto images = data.split(split);
  if (images.empty()) throw InputError("split " + a.split + " is empty");
  const auto model = model_from_checkpoint<float>(ckpt);
  const std::size_t max_len = decode_len(a.max_len, ckpt);
  metrics::EvalCorpus corpus;
  for (const auto* img : images) {
    metrics::Sentence cand;
    if (a.oracle_candidates) {
      cand = img->references.front();
    } else {
      const auto c = decode(model, data.features.at(img->id), a.beam_size, max_len);
      cand = decode_tokens(data.vocab, c.ids);
    }
    corpus.push_back({std::move(cand), img->references});
  }
  json report = metrics::evaluation_report(corpus);
  o.emit(report);
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, const Output& o) {
  const auto manifest = load_manifest(a.manifest);
  const std::uint64_t seed = a.seed.value_or(default_seed());
  FeatureStore store(a.dim, a.global_dim);
  for (const auto& e : manifest) {
    store.add(synth_features(seed, e.id, a.regions, a.dim, a.global_dim));
  }
  save_features(store, a.out);
  o.emit({{"event", "synth-features"}, {"records", store.size()}, {"out", a.out}});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"refcap: image captioning with feature refining and reflective attention",
               "refcap"};
  app.require_subcommand(1);
  bool pretty = false;
  app.add_flag("--pretty", pretty, "Human-readable output instead of line JSON");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "Build the vocabulary and encode captions");
  p->add_option("--manifest", prep.manifest, "Caption manifest JSON")->required();
  p->add_option("--features", prep.features, "RCF1 feature file")->required();
  p->add_option("--out", prep.out, "Output directory")->required();
  p->add_option("--min-count", prep.min_count, "Minimum train-split token count")
      ->capture_default_str();
  p->add_option("--max-len", prep.max_len, "Maximum caption length in words")
      ->capture_default_str();

  TrainArgs tr;
  std::optional<std::uint64_t> train_seed;
  auto* t = app.add_subcommand("train", "Train a model variant");
  t->add_option("--data", tr.data, "Prepared data directory")->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--variant", tr.variant, "baseline|visatt|visattrefatt|refining")
      ->capture_default_str();
  t->add_option("--epochs", tr.train.epochs)->capture_default_str();
  t->add_option("--batch-size", tr.train.batch_size)->capture_default_str();
  t->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  t->add_option("--dropout", tr.train.dropout)->capture_default_str();
  t->add_option("--patience", tr.train.patience)->capture_default_str();
  t->add_option("--weight-decay", tr.train.weight_decay)->capture_default_str();
  t->add_option("--clip-norm", tr.train.clip_norm, "Gradient clip norm, 0 disables")
      ->capture_default_str();
  t->add_option("--val-split", tr.val_split, "Split scored for early stopping")
      ->capture_default_str();
  t->add_option("--val-max-len", tr.train.val_max_len, "0: data max-len + 2")
      ->capture_default_str();
  t->add_option("--seed", train_seed, "Defaults to REFCAP_SEED or 1234");
  t->add_option("--precision", tr.precision, "32 or 64")->capture_default_str();
  t->add_option("--embed-dim", tr.model.embed_dim)->capture_default_str();
  t->add_option("--hidden-dim", tr.model.hidden_dim)->capture_default_str();
  t->add_option("--visual-att-dim", tr.model.visual_att_dim)->capture_default_str();
  t->add_option("--reflective-att-dim", tr.model.reflective_att_dim)
      ->capture_default_str();
  t->add_option("--heads", tr.model.heads)->capture_default_str();
  t->add_option("--refine-layers", tr.model.refine_layers)->capture_default_str();

  CaptionArgs cap;
  auto* c = app.add_subcommand("caption", "Caption one image");
  c->add_option("--checkpoint", cap.checkpoint)->required();
  c->add_option("--features", cap.features)->required();
  c->add_option("--id", cap.id)->required();
  c->add_option("--beam-size", cap.beam_size)->capture_default_str();
  c->add_option("--max-len", cap.max_len, "0: training max-len + 2")
      ->capture_default_str();
  c->add_option("--trace", cap.trace, "Write the attention trace JSON here");

  CaptionArgs exp;
  auto* x = app.add_subcommand("export-attention", "Write the attention trace of one image");
  x->add_option("--checkpoint", exp.checkpoint)->required();
  x->add_option("--features", exp.features)->required();
  x->add_option("--id", exp.id)->required();
  x->add_option("--out", exp.trace)->required();
  x->add_option("--beam-size", exp.beam_size)->capture_default_str();
  x->add_option("--max-len", exp.max_len)->capture_default_str();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a split with every metric");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--data", ev.data)->required();
  e->add_option("--split", ev.split, "train|val|test")->capture_default_str();
  e->add_option("--beam-size", ev.beam_size)->capture_default_str();
  e->add_option("--max-len", ev.max_len)->capture_default_str();
  e->add_flag("--oracle-candidates", ev.oracle_candidates,
              "Use each image's first reference as its candidate");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth-features",
                               "Write deterministic random features for a manifest");
  s->add_option("--manifest", sy.manifest)->required();
  s->add_option("--out", sy.out)->required();
  s->add_option("--regions", sy.regions)->capture_default_str();
  s->add_option("--dim", sy.dim)->capture_default_str();
  s->add_option("--global-dim", sy.global_dim)->capture_default_str();
  s->add_option("--seed", sy.seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  const Output o{out, pretty};
  try {
    if (*p) return cmd_prepare(prep, o);
    if (*t) {
      tr.seed = train_seed;
      return cmd_train(tr, o);
    }
    if (*c) return cmd_caption(cap, o);
    if (*x) return cmd_export_attention(exp, o);
    if (*e) return cmd_evaluate(ev, o);
    if (*s) return cmd_synth(sy, o);
  } catch (const NumericalError& ex) {
    err << "numerical failure: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& ex) {
    // Bad files, unknown ids, inconsistent shapes and options are all the
    // caller's input.
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace refcap::cli
