#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "refcap/checkpoint.hpp"
#include "refcap/cli.hpp"
#include "refcap/dataset.hpp"
#include "refcap/inference.hpp"
#include "refcap/trace.hpp"
#include "refcap/trainer.hpp"
#include "support.hpp"

using namespace refcap;
using nlohmann::json;
using refcap::cli::kExitInput;
using refcap::cli::kExitNumerical;
using refcap::cli::kExitOk;
using testing_support::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
  std::vector<json> lines() const {
    std::vector<json> v;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) v.push_back(json::parse(line));
    }
    return v;
  }
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = refcap::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Replaces the value of an existing flag or appends the pair.
void set_flag(std::vector<std::string>& args, const std::string& flag, const std::string& value) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == flag) {
      args[i + 1] = value;
      return;
    }
  }
  args.push_back(flag);
  args.push_back(value);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Two training captions, one validation image and one test image.
struct Fixture {
  TempDir dir{"cli"};
  std::string manifest = (dir / "manifest.json").string();
  std::string features = (dir / "features.rcf1").string();
  std::string data = (dir / "data").string();

  explicit Fixture(bool with_test = true) {
    CaptionManifest m = {{"img0", Split::kTrain, {"a dog"}},
                         {"img1", Split::kTrain, {"a cat"}},
                         {"img2", Split::kVal, {"a dog"}}};
    if (with_test) m.push_back({"img3", Split::kTest, {"a cat"}});
    save_manifest(m, manifest);
    save_features(testing_support::synth_store(m, 5, 3, 8, 4), features);
  }

  Result prepare(int min_count = 1) {
    return invoke({"prepare", "--manifest", manifest, "--features", features, "--out", data,
                "--min-count", std::to_string(min_count)});
  }

  std::vector<std::string> train_args(const std::string& out) const {
    return {"train",        "--data",       data, "--out", out, "--epochs", "2",
            "--patience",   "2",            "--batch-size", "2", "--embed-dim", "8",
            "--hidden-dim", "8",            "--visual-att-dim", "6", "--reflective-att-dim",
            "5",            "--heads",      "2"};
  }
};

}  // namespace

TEST_CASE("prepare writes a vocabulary with reserved ids") {
  Fixture f;
  auto r = f.prepare();
  REQUIRE(r.code == kExitOk);
  auto j = r.lines().at(0);
  CHECK(j.at("event") == "prepare");
  CHECK(j.at("vocab_size") == 7);
  CHECK(j.at("splits").at("train") == 2);
  CHECK(j.at("splits").at("val") == 1);
  CHECK(j.at("splits").at("test") == 1);
  auto v = Vocabulary::from_json_file(std::filesystem::path(f.data) / "vocab.json");
  CHECK(v.token(0) == "<pad>");
  CHECK(v.token(1) == "<start>");
  CHECK(v.token(2) == "<end>");
  CHECK(v.token(3) == "<unk>");
  const auto first = slurp(std::filesystem::path(f.data) / "captions.json");
  REQUIRE(f.prepare().code == kExitOk);
  CHECK(slurp(std::filesystem::path(f.data) / "captions.json") == first);
}

TEST_CASE("prepare with min-count 2 keeps only the shared word") {
  Fixture f;
  auto r = f.prepare(2);
  REQUIRE(r.code == kExitOk);
  CHECK(r.lines().at(0).at("vocab_size") == 5);
}

TEST_CASE("prepare input errors exit with code 2") {
  Fixture f;
  save_manifest({{"ghost", Split::kTrain, {"a dog"}}}, f.manifest);
  auto r = f.prepare();
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("ghost") != std::string::npos);

  std::ofstream(f.manifest) << "{ not json";
  CHECK(f.prepare().code == kExitInput);
  CHECK(invoke({"prepare", "--manifest", f.manifest}).code == kExitInput);
  CHECK(invoke({"frobnicate"}).code == kExitInput);
  CHECK(invoke({}).code == kExitInput);
}

TEST_CASE("train smoke run writes a loadable checkpoint") {
  Fixture f;
  REQUIRE(f.prepare().code == kExitOk);
  const auto ckpt = (f.dir / "m.rckp").string();
  auto r = invoke(f.train_args(ckpt));
  REQUIRE(r.code == kExitOk);
  auto lines = r.lines();
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].at("event") == "config");
  CHECK(lines[0].at("variant") == "refining");
  CHECK(lines[0].at("model").at("use_refining") == true);
  CHECK(lines[0].at("model").at("use_global_features") == true);
  CHECK(lines[1].at("event") == "epoch");
  CHECK(lines[2].at("epoch") == 2);
  CHECK(lines[3].at("event") == "done");
  auto loaded = load_checkpoint(ckpt);
  CHECK(loaded.train.at("variant") == "refining");
  CHECK(loaded.model.feature_dim == 8);
  CHECK_NOTHROW(model_from_checkpoint<float>(loaded));
}

TEST_CASE("train rejects bad variants and options") {
  Fixture f;
  REQUIRE(f.prepare().code == kExitOk);
  auto args = f.train_args((f.dir / "m.rckp").string());
  auto bad = args;
  bad.insert(bad.end(), {"--variant", "fancy"});
  CHECK(invoke(bad).code == kExitInput);
  auto heads = args;
  set_flag(heads, "--heads", "3");
  CHECK(invoke(heads).code == kExitInput);
  auto prec = args;
  prec.insert(prec.end(), {"--precision", "16"});
  CHECK(invoke(prec).code == kExitInput);
  CHECK(invoke({"train", "--data", (f.dir / "nowhere").string(), "--out", "x"}).code == kExitInput);
}

TEST_CASE("train aborts with code 3 on a non-finite loss") {
  Fixture f;
  REQUIRE(f.prepare().code == kExitOk);
  auto args = f.train_args((f.dir / "m.rckp").string());
  set_flag(args, "--lr", "1e300");
  set_flag(args, "--clip-norm", "0");
  set_flag(args, "--epochs", "4");
  set_flag(args, "--patience", "4");
  auto r = invoke(args);
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("train defaults follow the reference configuration") {
  const TrainConfig t;
  CHECK(t.epochs == 50);
  CHECK(t.batch_size == 64);
  CHECK(t.learning_rate == 0.002);
  CHECK(t.dropout == 0.5);
  CHECK(t.patience == 12);
  const ModelConfig m;
  CHECK(m.embed_dim == 1000);
  CHECK(m.hidden_dim == 1000);
  CHECK(m.visual_att_dim == 512);
  CHECK(m.reflective_att_dim == 512);
  CHECK(m.heads == 8);
  CHECK(kDefaultBeamSize == 5);
}

TEST_CASE("seed comes from --seed, then REFCAP_SEED, then the default") {
  Fixture f;
  REQUIRE(f.prepare().code == kExitOk);
  auto run = [&](const std::string& name, std::vector<std::string> extra) {
    auto args = f.train_args((f.dir / name).string());
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(invoke(args).code == kExitOk);
    return slurp(f.dir / name);
  };
  ::unsetenv("REFCAP_SEED");
  const auto def = run("a.rckp", {});
  const auto explicit_default = run("b.rckp", {"--seed", "1234"});
  CHECK(def == explicit_default);
  const auto seven = run("c.rckp", {"--seed", "7"});
  CHECK(seven != def);
  ::setenv("REFCAP_SEED", "7", 1);
  CHECK(run("d.rckp", {}) == seven);
  CHECK(run("e.rckp", {"--seed", "1234"}) == def);
  ::setenv("REFCAP_SEED", "seven", 1);
  CHECK(invoke(f.train_args((f.dir / "f.rckp").string())).code == kExitInput);
  ::unsetenv("REFCAP_SEED");
}

TEST_CASE("caption prints json, matches greedy at beam 1 and writes traces") {
  Fixture f;
  REQUIRE(f.prepare().code == kExitOk);
  const auto ckpt = (f.dir / "m.rckp").string();
  REQUIRE(invoke(f.train_args(ckpt)).code == kExitOk);

  auto r = invoke({"caption", "--checkpoint", ckpt, "--features", f.features, "--id", "img0",
                "--beam-size", "1"});
  REQUIRE(r.code == kExitOk);
  auto j = r.lines().at(0);
  for (const char* key : {"image_id", "caption", "score", "beam_size"}) CHECK(j.contains(key));
  CHECK(j.at("beam_size") == 1);

  const auto loaded = load_checkpoint(ckpt);
  const auto model = model_from_checkpoint<float>(loaded);
  const auto store = load_features(f.features);
  const auto g = greedy_decode(model, store.at("img0"), loaded.max_len + 2);
  CHECK(j.at("caption") == join_tokens(decode_tokens(loaded.vocabulary(), g.ids)));
  CHECK(j.at("score").get<double>() == doctest::Approx(g.log_prob));

  const auto trace_path = (f.dir / "trace.json").string();
  r = invoke({"caption", "--checkpoint", ckpt, "--features", f.features, "--id", "img1",
           "--trace", trace_path, "--max-len", "6"});
  REQUIRE(r.code == kExitOk);
  auto t = AttentionTrace::from_json(json::parse(slurp(trace_path)));
  CHECK(t.image_id == "img1");
  CHECK(t.alpha_vis.size() == t.tokens.size());
  for (std::size_t i = 0; i < t.alpha_ref.size(); ++i) {
    CHECK(t.alpha_vis[i].size() == 3);
    CHECK(t.alpha_ref[i].size() == i + 1);
  }

  const auto exported = (f.dir / "exported.json").string();
  r = invoke({"export-attention", "--checkpoint", ckpt, "--features", f.features, "--id", "img1",
           "--out", exported, "--max-len", "6"});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(slurp(exported)) == json::parse(slurp(trace_path)));

  r = invoke({"caption", "--checkpoint", ckpt, "--features", f.features, "--id", "nope"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("nope") != std::string::npos);
  CHECK(invoke({"caption", "--checkpoint", f.features, "--features", f.features, "--id", "img0"})
            .code == kExitInput);
}

TEST_CASE("evaluate emits the report keys and handles edge cases") {
  Fixture f;
  REQUIRE(f.prepare().code == kExitOk);
  const auto ckpt = (f.dir / "m.rckp").string();
  REQUIRE(invoke(f.train_args(ckpt)).code == kExitOk);

  auto r = invoke({"evaluate", "--checkpoint", ckpt, "--data", f.data});
  REQUIRE(r.code == kExitOk);
  auto j = r.lines().at(0);
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  CHECK(keys == std::set<std::string>{"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR",
                                      "ROUGE-L", "CIDEr"});

  r = invoke({"evaluate", "--checkpoint", ckpt, "--data", f.data, "--split", "train",
           "--oracle-candidates"});
  REQUIRE(r.code == kExitOk);
  j = r.lines().at(0);
  for (const char* k : {"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L"}) {
    CAPTURE(k);
    CHECK(j.at(k).get<double>() == 100.0);
  }

  CHECK(invoke({"evaluate", "--checkpoint", ckpt, "--data", f.data, "--split", "dev"}).code ==
        kExitInput);

  Fixture no_test(false);
  REQUIRE(no_test.prepare().code == kExitOk);
  const auto ckpt2 = (no_test.dir / "m.rckp").string();
  REQUIRE(invoke(no_test.train_args(ckpt2)).code == kExitOk);
  r = invoke({"evaluate", "--checkpoint", ckpt2, "--data", no_test.data, "--split", "test"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("empty") != std::string::npos);
}

TEST_CASE("synth-features writes one record per manifest id") {
  Fixture f;
  const auto out = (f.dir / "synth.rcf1").string();
  auto r = invoke({"synth-features", "--manifest", f.manifest, "--out", out, "--regions", "4",
                "--dim", "6", "--global-dim", "3", "--seed", "9"});
  REQUIRE(r.code == kExitOk);
  auto store = load_features(out);
  CHECK(store.size() == 4);
  CHECK(store.at("img2").regions == 4);
  CHECK(store.at("img2").dim == 6);
  CHECK(store.at("img2").global.size() == 3);
  const auto again = (f.dir / "synth2.rcf1").string();
  REQUIRE(invoke({"synth-features", "--manifest", f.manifest, "--out", again, "--regions", "4",
               "--dim", "6", "--global-dim", "3", "--seed", "9"})
              .code == kExitOk);
  CHECK(slurp(out) == slurp(again));
}

TEST_CASE("pretty output is human readable") {
  Fixture f;
  auto r = invoke({"--pretty", "prepare", "--manifest", f.manifest, "--features", f.features,
                "--out", f.data});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find('\n') < r.out.size() - 1);
  CHECK(invoke({"--help"}).code == kExitOk);
}
