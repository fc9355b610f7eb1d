#pragma once

// Fixtures and checkers shared by the unit and acceptance tests.

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracle/reference_model.hpp"
#include "refcap/config.hpp"
#include "refcap/dataset.hpp"
#include "refcap/graph.hpp"
#include "refcap/model.hpp"

namespace testing_support {

using refcap::Graph;
using refcap::Tensor;

/// k=3, D=8, H=2, D_h=8, E=8 with every module enabled.
inline refcap::ModelConfig tiny_config(std::size_t vocab_size = 12) {
  refcap::ModelConfig c;
  c.feature_dim = 8;
  c.global_dim = 4;
  c.vocab_size = vocab_size;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  c.visual_att_dim = 6;
  c.reflective_att_dim = 5;
  c.heads = 2;
  c.dropout = 0.0;
  return c;
}

template <typename T>
oracle::Weights weights_of(const refcap::CaptionModel<T>& model) {
  oracle::Weights w;
  for (const auto& [name, t] : model.params().entries()) {
    oracle::Mat m(t.rank() == 1 ? 1 : t.rows(), t.cols());
    for (std::size_t i = 0; i < t.size(); ++i) m.v[i] = static_cast<double>(t[i]);
    w[name] = m;
  }
  return w;
}

inline oracle::Mat region_matrix(const refcap::FeatureRecord& r) {
  oracle::Mat m(r.regions, r.dim);
  for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = r.spatial[i];
  return m;
}

template <typename T>
Tensor<T> random_tensor(refcap::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                        double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<T> v(refcap::shape_size(shape));
  for (auto& x : v) x = static_cast<T>(u(rng));
  return Tensor<T>::from(std::move(shape), std::move(v), requires_grad);
}

struct GradCheck {
  double worst = 0.0;     // largest per-tensor relative error
  std::string worst_name;
  std::size_t checked = 0;  // scalar entries compared
};

/// Compares backward() against central differences for every entry of
/// every input. The error per tensor is ||a - n|| / (||a|| + ||n||), zero
/// when both norms vanish.
inline GradCheck check_gradients(
    const std::vector<std::pair<std::string, Tensor<double>>>& inputs,
    const std::function<Tensor<double>(Graph<double>&)>& loss_fn, double step = 1e-5) {
  for (const auto& [name, t] : inputs) {
    auto copy = t;
    copy.zero_grad();
  }
  {
    Graph<double> g;
    g.backward(loss_fn(g));
  }
  GradCheck out;
  for (const auto& [name, t] : inputs) {
    auto handle = t;
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < handle.size(); ++i) {
      const double keep = handle[i];
      handle[i] = keep + step;
      Graph<double> gp(false);
      const double up = loss_fn(gp).item();
      handle[i] = keep - step;
      Graph<double> gm(false);
      const double down = loss_fn(gm).item();
      handle[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = handle.grad()[i];
      diff += (analytic - numeric) * (analytic - numeric);
      na += analytic * analytic;
      nn += numeric * numeric;
      ++out.checked;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    const double rel = denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
    if (rel > out.worst) {
      out.worst = rel;
      out.worst_name = name;
    }
  }
  return out;
}

/// Weighted sum with fixed pseudo-random weights, so every output entry
/// contributes a distinct amount to the scalar under test.
inline Tensor<double> probe(Graph<double>& g, const Tensor<double>& x,
                            std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  auto w = random_tensor<double>({x.rows(), x.cols()}, rng, -1.0, 1.0, false);
  return g.sum(g.hadamard(x, w));
}

/// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("refcap_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Ten images with short overlapping captions over 24 distinct words.
inline refcap::CaptionManifest overfit_manifest() {
  const std::vector<std::string> captions = {
      "a dog runs on grass",    "two cats sleep on a bed", "a red car on the road",
      "a man rides a red bike", "two dogs play in water",  "a cat sleeps on grass",
      "the man runs on the road", "a dog plays in water",  "two men play on grass",
      "a cat rides a bike",
  };

  refcap::CaptionManifest m;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    m.push_back({"img" + std::to_string(i), refcap::Split::kTrain, {captions[i]}});
  }
  return m;
}

inline refcap::FeatureStore synth_store(const refcap::CaptionManifest& manifest,
                                        std::uint64_t seed, std::size_t k, std::size_t dim,
                                        std::size_t global_dim) {
  refcap::FeatureStore store(dim, global_dim);
  for (const auto& e : manifest) {
    store.add(refcap::synth_features(seed, e.id, k, dim, global_dim));
  }
  return store;
}

/// Overfit-sized model: every module on, small widths.
inline refcap::ModelConfig overfit_config(std::size_t vocab_size) {
  refcap::ModelConfig c;
  c.feature_dim = 16;
  c.global_dim = 8;
  c.vocab_size = vocab_size;
  c.embed_dim = 24;
  c.hidden_dim = 48;
  c.visual_att_dim = 24;
  c.reflective_att_dim = 24;
  c.heads = 2;
  c.dropout = 0.0;
  return c;
}

/// Region i carries one of `classes` colour words plus a one-hot position
/// code; the caption names the colours in region order. The mean over
/// regions keeps which colours occur but loses their order, so only a model
/// that attends to individual regions can get the order right.
struct AblationTask {
  refcap::CaptionManifest manifest;
  refcap::FeatureStore features;
};

inline AblationTask ablation_task(std::size_t images, std::size_t val_images,
                                  std::uint64_t seed, std::size_t regions = 3) {
  const std::vector<std::string> words = {"red", "green", "blue", "black", "white"};
  const std::size_t classes = words.size();
  const std::size_t dim = classes + regions;
  AblationTask task{{}, refcap::FeatureStore(dim, 4)};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t n = 0; n < images; ++n) {
    refcap::FeatureRecord r;
    r.image_id = "syn" + std::to_string(n);
    r.regions = regions;
    r.dim = dim;
    r.spatial.assign(regions * dim, 0.0F);
    std::string caption;
    for (std::size_t i = 0; i < regions; ++i) {
      const std::size_t c = pick(rng);
      r.spatial[i * dim + c] = 1.0F;
      r.spatial[i * dim + classes + i] = 1.0F;
      caption += (i ? " " : "") + words[c];
    }
    for (auto& v : r.spatial) v += static_cast<float>(noise(rng));
    r.global.assign(4, 0.0F);
    for (auto& v : r.global) v = static_cast<float>(noise(rng));
    const auto split = n < images - val_images ? refcap::Split::kTrain : refcap::Split::kVal;
    task.manifest.push_back({r.image_id, split, {caption}});
    task.features.add(std::move(r));
  }
  return task;
}

}  // namespace testing_support
