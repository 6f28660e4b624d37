#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "reachlab/common.hpp"
#include "reachlab/rng.hpp"

namespace reachlab {

enum class Activation { identity, tanh };

// Dense MLP: tanh on hidden layers, configurable output activation
// (identity by default; tanh is used by the feature-extractor branch).
struct MlpSpec {
  std::vector<int> widths;  // input, hidden..., output
  Activation output_activation = Activation::identity;

  void validate() const {
    check(widths.size() >= 2, "MlpSpec: need at least input and output width");
    for (int w : widths) check(w >= 1, "MlpSpec: widths must be >= 1");
  }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }
};

struct MlpLayer {
  Vec w;  // row-major [out][in]
  Vec b;  // [out]
};

struct MlpParams {
  MlpSpec spec;
  std::vector<MlpLayer> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }
};

// Gradients share the MlpParams layout.
using MlpGrads = MlpParams;

inline MlpParams make_zero_params(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  p.spec = spec;
  p.layers.resize(spec.layer_count());
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const int in = spec.widths[i];
    const int out = spec.widths[i + 1];
    p.layers[i].w.assign(static_cast<std::size_t>(in) * out, 0.0);
    p.layers[i].b.assign(out, 0.0);
  }
  return p;
}

inline void zero_grads(MlpGrads& g) {
  for (auto& l : g.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

// Orthogonal init (modified Gram-Schmidt on a Gaussian draw), gain-scaled.
// With MGS the diagonal of R is positive, so no sign correction is needed.
inline void orthogonal_init(Vec& w, int out, int in, double gain, Rng& rng) {
  const int n = std::max(out, in);
  const int m = std::min(out, in);
  std::vector<Vec> q(m, Vec(n));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) q[j][i] = rng.normal();
    for (int i = 0; i < j; ++i) {
      const double proj = dot(q[i], q[j]);
      for (int k = 0; k < n; ++k) q[j][k] -= proj * q[i][k];
    }
    const double nrm = std::sqrt(dot(q[j], q[j]));
    for (int k = 0; k < n; ++k) q[j][k] /= nrm;
  }
  // q holds m orthonormal columns of length n; map onto the out x in matrix
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < in; ++i)
      w[static_cast<std::size_t>(o) * in + i] =
          gain * (out >= in ? q[i][o] : q[o][i]);
}

// gain per layer: sqrt(2) is the usual hidden-layer choice; callers override
// the output head (0.01 for policy means, 1.0 elsewhere).
inline MlpParams init_mlp(const MlpSpec& spec, Rng& rng,
                          double hidden_gain = std::sqrt(2.0),
                          double output_gain = 1.0) {
  MlpParams p = make_zero_params(spec);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const int in = spec.widths[i];
    const int out = spec.widths[i + 1];
    const bool last = (i + 1 == p.layers.size());
    orthogonal_init(p.layers[i].w, out, in, last ? output_gain : hidden_gain, rng);
    // biases stay zero
  }
  return p;
}

// Post-activation values per layer; acts[0] is the input. Kept around so
// backward() can rebuild tanh' from the activations alone.
struct MlpWorkspace {
  std::vector<Vec> acts;
};

inline const Vec& mlp_forward(const MlpParams& p, const Vec& input, MlpWorkspace& ws) {
  check(static_cast<int>(input.size()) == p.spec.input_width(),
        "mlp_forward: input width mismatch");
  ws.acts.resize(p.layers.size() + 1);
  ws.acts[0] = input;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const int in = p.spec.widths[li];
    const int out = p.spec.widths[li + 1];
    const Vec& x = ws.acts[li];
    Vec& y = ws.acts[li + 1];
    y.assign(out, 0.0);
    const double* w = p.layers[li].w.data();
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      double s = p.layers[li].b[o];
      for (int i = 0; i < in; ++i) s += row[i] * x[i];
      y[o] = s;
    }
    const bool last = (li + 1 == p.layers.size());
    if (!last || p.spec.output_activation == Activation::tanh)
      for (int o = 0; o < out; ++o) y[o] = std::tanh(y[o]);
  }
  return ws.acts.back();
}

inline Vec mlp_forward(const MlpParams& p, const Vec& input) {
  MlpWorkspace ws;
  return mlp_forward(p, input, ws);
}

// Reverse-mode gradients of the forward map. Accumulates into `grads`
// (callers zero it once per minibatch) and returns the input gradient.
inline Vec mlp_backward(const MlpParams& p, const MlpWorkspace& ws,
                        const Vec& output_grad, MlpGrads& grads) {
  check(static_cast<int>(output_grad.size()) == p.spec.output_width(),
        "mlp_backward: output grad width mismatch");
  Vec g = output_grad;
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const int in = p.spec.widths[li];
    const int out = p.spec.widths[li + 1];
    const Vec& x = ws.acts[li];
    const Vec& y = ws.acts[li + 1];
    const bool last = (li + 1 == p.layers.size());
    if (!last || p.spec.output_activation == Activation::tanh)
      for (int o = 0; o < out; ++o) g[o] *= 1.0 - y[o] * y[o];
    Vec gin(in, 0.0);
    const double* w = p.layers[li].w.data();
    double* dw = grads.layers[li].w.data();
    for (int o = 0; o < out; ++o) {
      const double go = g[o];
      grads.layers[li].b[o] += go;
      const double* row = w + static_cast<std::size_t>(o) * in;
      double* drow = dw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        drow[i] += go * x[i];
        gin[i] += row[i] * go;
      }
    }
    g = std::move(gin);
  }
  return g;
}

// --- Adam ---

struct AdamConfig {
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamArray {
  Vec m, v;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<AdamArray> w_state;
  std::vector<AdamArray> b_state;
  long step = 0;
};

inline AdamState make_adam_state(const MlpParams& p, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.w_state.resize(p.layers.size());
  s.b_state.resize(p.layers.size());
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    s.w_state[i].m.assign(p.layers[i].w.size(), 0.0);
    s.w_state[i].v.assign(p.layers[i].w.size(), 0.0);
    s.b_state[i].m.assign(p.layers[i].b.size(), 0.0);
    s.b_state[i].v.assign(p.layers[i].b.size(), 0.0);
  }
  return s;
}

// One bias-corrected Adam update of a flat array. `bc1`/`bc2` are the
// 1-beta^t corrections shared by every array in the same step.
inline void adam_update_array(Vec& p, const Vec& g, AdamArray& st,
                              const AdamConfig& cfg, double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

inline void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s) {
  for (const auto& l : g.layers)
    check(all_finite(l.w) && all_finite(l.b), "adam_step: non-finite gradient");
  s.step += 1;
  const double bc1 = 1.0 - std::pow(s.cfg.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.cfg.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    adam_update_array(p.layers[i].w, g.layers[i].w, s.w_state[i], s.cfg, bc1, bc2);
    adam_update_array(p.layers[i].b, g.layers[i].b, s.b_state[i], s.cfg, bc1, bc2);
  }
}

}  // namespace reachlab
