#pragma once

// Straight-line reference implementation of the captioning network in plain
// loops over std::vector<double>. It shares no code with the library: no
// Graph, no kernels, no Tensor. Weights are read by parameter name.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Mat {
  std::size_t r = 0, c = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : r(rows), c(cols), v(rows * cols, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * c + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * c + j]; }
};

using Vec = std::vector<double>;
using Weights = std::map<std::string, Mat>;

inline Vec row(const Mat& m, std::size_t i) {
  return Vec(m.v.begin() + static_cast<std::ptrdiff_t>(i * m.c),
             m.v.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.c));
}

// W (out x in) times x (in).
inline Vec mv(const Mat& w, const Vec& x) {
  Vec y(w.r, 0.0);
  for (std::size_t i = 0; i < w.r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.c; ++j) s += w(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Vec plus(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec softmax(const Vec& s) {
  double mx = s[0];
  for (double x : s) mx = std::max(mx, x);
  Vec e(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) z += (e[i] = std::exp(s[i] - mx));
  for (double& x : e) x /= z;
  return e;
}

// Applies W to every row of X: returns X W^T.
inline Mat project(const Mat& x, const Mat& w) {
  Mat y(x.r, w.r);
  for (std::size_t i = 0; i < x.r; ++i) {
    const Vec out = mv(w, row(x, i));
    for (std::size_t j = 0; j < w.r; ++j) y(i, j) = out[j];
  }
  return y;
}

// head_i = softmax(Q_i K_i^T / sqrt(d)) V_i, concatenated over heads.
inline Mat multi_head(const Mat& q, const Mat& k, const Mat& v, std::size_t heads) {
  const std::size_t d = q.c / heads;
  Mat out(q.r, q.c);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < q.r; ++i) {
      Vec s(k.r);
      for (std::size_t j = 0; j < k.r; ++j) {
        double dot = 0.0;
        for (std::size_t x = 0; x < d; ++x) dot += q(i, h * d + x) * k(j, h * d + x);
        s[j] = dot / std::sqrt(static_cast<double>(d));
      }
      const Vec a = softmax(s);
      for (std::size_t x = 0; x < d; ++x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k.r; ++j) acc += a[j] * v(j, h * d + x);
        out(i, h * d + x) = acc;
      }
    }
  }
  return out;
}

// I = Wq Q + Wv V + b; G = sigmoid(Wq' Q + Wv' V + b'); result G * I.
inline Mat aoa(const Mat& attended, const Mat& query, const Weights& w,
               const std::string& p) {
  Mat out(attended.r, attended.c);
  for (std::size_t i = 0; i < attended.r; ++i) {
    const Vec q = row(query, i), v = row(attended, i);
    const Vec info = plus(plus(mv(w.at(p + ".w_info_q"), q), mv(w.at(p + ".w_info_v"), v)),
                          w.at(p + ".b_info").v);
    const Vec gate = plus(plus(mv(w.at(p + ".w_gate_q"), q), mv(w.at(p + ".w_gate_v"), v)),
                          w.at(p + ".b_gate").v);
    for (std::size_t j = 0; j < attended.c; ++j) out(i, j) = sigm(gate[j]) * info[j];
  }
  return out;
}

inline Mat layer_norm(const Mat& x, double eps) {
  Mat y(x.r, x.c);
  for (std::size_t i = 0; i < x.r; ++i) {
    double mu = 0.0, var = 0.0;
    for (std::size_t j = 0; j < x.c; ++j) mu += x(i, j);
    mu /= static_cast<double>(x.c);
    for (std::size_t j = 0; j < x.c; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= static_cast<double>(x.c);
    for (std::size_t j = 0; j < x.c; ++j) y(i, j) = (x(i, j) - mu) / std::sqrt(var + eps);
  }
  return y;
}

inline Mat refine(const Mat& a, const Weights& w, const std::string& p, std::size_t heads,
                  double eps) {
  const Mat q = project(a, w.at(p + ".w_q"));
  const Mat k = project(a, w.at(p + ".w_k"));
  const Mat v = project(a, w.at(p + ".w_v"));
  const Mat gated = aoa(multi_head(q, k, v, heads), q, w, p);
  Mat sum = a;
  for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += gated.v[i];
  return layer_norm(sum, eps);
}

struct Attended {
  Vec context;
  Vec weights;
};

// score_i = w_score . tanh(W_key key_i + W_query query); softmax; weighted sum.
inline Attended additive(const Mat& keys, const Vec& query, const Weights& w,
                         const std::string& p) {
  const Vec qp = mv(w.at(p + ".w_query"), query);
  Vec scores(keys.r);
  for (std::size_t i = 0; i < keys.r; ++i) {
    Vec hidden = plus(mv(w.at(p + ".w_key"), row(keys, i)), qp);
    for (double& x : hidden) x = std::tanh(x);
    scores[i] = mv(w.at(p + ".w_score"), hidden)[0];
  }
  Attended out;
  out.weights = softmax(scores);
  out.context.assign(keys.c, 0.0);
  for (std::size_t i = 0; i < keys.r; ++i) {
    for (std::size_t j = 0; j < keys.c; ++j) out.context[j] += out.weights[i] * keys(i, j);
  }
  return out;
}

struct Lstm {
  Vec h, c;
};

// Gate blocks in order input, forget, candidate, output.
inline Lstm lstm(const Vec& x, const Lstm& s, const Weights& w, const std::string& p) {
  const std::size_t hd = s.h.size();
  const Vec pre = plus(plus(mv(w.at(p + ".w_x"), x), mv(w.at(p + ".w_h"), s.h)),
                       w.at(p + ".b").v);
  Lstm n{Vec(hd), Vec(hd)};
  for (std::size_t j = 0; j < hd; ++j) {
    const double i = sigm(pre[j]), f = sigm(pre[hd + j]);
    const double g = std::tanh(pre[2 * hd + j]), o = sigm(pre[3 * hd + j]);
    n.c[j] = f * s.c[j] + i * g;
    n.h[j] = o * std::tanh(n.c[j]);
  }
  return n;
}

struct Config {
  std::size_t heads = 2;
  std::size_t refine_layers = 1;
  double eps = 1e-5;
  bool refining = true;
  bool visual = true;
  bool reflective = true;
  bool global = true;
};

struct StepTrace {
  Vec logits;
  Vec alpha_vis;
  Vec alpha_ref;
};

/// Teacher-forced pass of the full two-layer decoder; feeds ids[0..n-2].
inline std::vector<StepTrace> forward(const Mat& regions, const Vec& global,
                                      const std::vector<long>& ids, const Weights& w,
                                      const Config& cfg) {
  Mat a = regions;
  if (cfg.refining) {
    for (std::size_t l = 0; l < cfg.refine_layers; ++l) {
      a = refine(a, w, "refiner." + std::to_string(l), cfg.heads, cfg.eps);
    }
  }
  Vec mean(a.c, 0.0);
  for (std::size_t i = 0; i < a.r; ++i) {
    for (std::size_t j = 0; j < a.c; ++j) mean[j] += a(i, j) / static_cast<double>(a.r);
  }
  const std::size_t hd = w.at("lstm1.w_h").c;
  Lstm s1{Vec(hd, 0.0), Vec(hd, 0.0)}, s2 = s1;
  Mat history(0, hd);
  const Mat& embed = w.at("embed");
  std::vector<StepTrace> out;
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    Vec x1;
    if (cfg.global) x1.insert(x1.end(), global.begin(), global.end());
    x1.insert(x1.end(), mean.begin(), mean.end());
    const Vec word = row(embed, static_cast<std::size_t>(ids[t]));
    x1.insert(x1.end(), word.begin(), word.end());
    x1.insert(x1.end(), s2.h.begin(), s2.h.end());
    s1 = lstm(x1, s1, w, "lstm1");

    StepTrace st;
    Vec att = mean;
    if (cfg.visual) {
      const auto v = additive(a, s1.h, w, "visual");
      att = v.context;
      st.alpha_vis = v.weights;
    }
    Vec x2 = att;
    x2.insert(x2.end(), s1.h.begin(), s1.h.end());
    s2 = lstm(x2, s2, w, "lstm2");

    Vec top = s2.h;
    if (cfg.reflective) {
      history.r += 1;
      history.v.insert(history.v.end(), s2.h.begin(), s2.h.end());
      const auto r = additive(history, s1.h, w, "reflective");
      top = r.context;
      st.alpha_ref = r.weights;
    }
    st.logits = plus(mv(w.at("head.w"), top), w.at("head.b").v);
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace oracle
