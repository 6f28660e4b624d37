#pragma once

#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachlab/common.hpp"
#include "reachlab/env.hpp"
#include "reachlab/filters.hpp"
#include "reachlab/nn.hpp"
#include "reachlab/rng.hpp"
#include "reachlab/trajlog.hpp"

namespace reachlab {

struct DobConfig {
  int window = 1;   // L, the plant's nominal inherent delay
  int horizon = 14; // H; the estimate window holds H+1 entries
  double qfilter_cutoff_hz = 1.0;
  double sample_time = 0.02;
  int batch_size = 128;
  int epochs = 5;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;
  bool shuffle = true;
  std::vector<int> hidden = {64, 64};

  void validate() const {
    check(window >= 1, "dob: window must be >= 1");
    check(horizon >= 0, "dob: horizon must be >= 0");
    check(batch_size >= 1 && epochs >= 1, "dob: bad training hyperparameters");
    check(val_fraction > 0.0 && val_fraction < 1.0, "dob: bad val_fraction");
  }
  int input_dim() const { return (window + 1) * 5; }
};

// Supervised pairs (Y_{[k,L]}, u_{k-L}) with the observation window stacked
// newest-first. Stored flat, row-major.
struct InverseDataset {
  int input_dim = 10;
  int label_dim = 2;
  int window = 1;
  Vec inputs;
  Vec labels;

  std::size_t size() const {
    return input_dim == 0 ? 0 : inputs.size() / static_cast<std::size_t>(input_dim);
  }

  void save(const std::string& path) const {
    nlohmann::json header{{"version", 1},
                          {"count", size()},
                          {"input_dim", input_dim},
                          {"label_dim", label_dim},
                          {"window", window}};
    std::ofstream out(path, std::ios::binary);
    check(out.good(), "dataset: cannot open for write: " + path);
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(inputs.data()),
              static_cast<std::streamsize>(inputs.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size() * sizeof(double)));
    check(out.good(), "dataset: write failed: " + path);
  }

  static InverseDataset load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "dataset: cannot open: " + path);
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    check(header.at("version").get<int>() == 1, "dataset: unsupported version");
    InverseDataset d;
    d.input_dim = header.at("input_dim").get<int>();
    d.label_dim = header.at("label_dim").get<int>();
    d.window = header.at("window").get<int>();
    const auto count = header.at("count").get<std::size_t>();
    d.inputs.resize(count * static_cast<std::size_t>(d.input_dim));
    d.labels.resize(count * static_cast<std::size_t>(d.label_dim));
    in.read(reinterpret_cast<char*>(d.inputs.data()),
            static_cast<std::streamsize>(d.inputs.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(d.labels.data()),
            static_cast<std::streamsize>(d.labels.size() * sizeof(double)));
    check(in.good(), "dataset: truncated file: " + path);
    return d;
  }
};

// One sample per k >= L within each episode; episodes shorter than L+1
// observations contribute nothing. Episode boundaries are never straddled.
inline InverseDataset build_inverse_dataset(const std::vector<Episode>& episodes, int L) {
  check(L >= 1, "dataset: L must be >= 1");
  InverseDataset d;
  d.window = L;
  d.input_dim = (L + 1) * 5;
  d.label_dim = 2;
  for (const auto& ep : episodes) {
    const int n = static_cast<int>(ep.observations.size());
    if (n < L + 1) continue;
    for (int k = L; k < n; ++k) {
      for (int j = 0; j <= L; ++j)
        for (double x : ep.observations[static_cast<std::size_t>(k - j)])
          d.inputs.push_back(x);
      const Vec2& u = ep.actions[static_cast<std::size_t>(k - L)];
      d.labels.push_back(u[0]);
      d.labels.push_back(u[1]);
    }
  }
  return d;
}

struct InverseTrainingResult {
  MlpParams model;
  std::vector<double> train_loss;  // mean minibatch MSE per epoch
  std::vector<double> val_loss;    // full validation MSE per epoch
  std::size_t train_count = 0;
  std::size_t val_count = 0;

  double final_val_mse() const { return val_loss.empty() ? 0.0 : val_loss.back(); }
  double final_val_rmse() const { return std::sqrt(final_val_mse()); }
};

inline double dataset_mse(const MlpParams& model, const InverseDataset& d,
                          const std::vector<std::size_t>& idx) {
  MlpWorkspace ws;
  double se = 0.0;
  Vec input(static_cast<std::size_t>(d.input_dim));
  for (std::size_t i : idx) {
    const double* in = d.inputs.data() + i * static_cast<std::size_t>(d.input_dim);
    std::copy(in, in + d.input_dim, input.begin());
    const Vec& pred = mlp_forward(model, input, ws);
    const double* lab = d.labels.data() + i * static_cast<std::size_t>(d.label_dim);
    for (int j = 0; j < d.label_dim; ++j) {
      const double e = pred[static_cast<std::size_t>(j)] - lab[j];
      se += e * e;
    }
  }
  return idx.empty() ? 0.0 : se / (static_cast<double>(idx.size()) * d.label_dim);
}

// MSE regression with the configured minibatch Adam schedule. Train/val
// split is drawn once from the given seed; epoch order reshuffles unless
// cfg.shuffle is off.
inline InverseTrainingResult train_inverse_model(const InverseDataset& d,
                                                 const DobConfig& cfg,
                                                 std::uint64_t seed) {
  cfg.validate();
  check(d.size() > 0, "train_inverse_model: empty dataset");
  check(d.input_dim == cfg.input_dim(), "train_inverse_model: window mismatch");

  Rng rng(substream_seed(seed, "dob-train"));
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(i)]);

  const auto val_count = static_cast<std::size_t>(
      static_cast<double>(d.size()) * cfg.val_fraction);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
  check(!train_idx.empty(), "train_inverse_model: no training samples after split");

  MlpSpec spec;
  spec.widths.push_back(d.input_dim);
  for (int h : cfg.hidden) spec.widths.push_back(h);
  spec.widths.push_back(d.label_dim);

  InverseTrainingResult res;
  res.model = init_mlp(spec, rng, std::sqrt(2.0), 1.0);
  res.train_count = train_idx.size();
  res.val_count = val_idx.size();

  AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  AdamState adam = make_adam_state(res.model, acfg);
  MlpGrads grads = make_zero_params(spec);
  MlpWorkspace ws;
  Vec input(static_cast<std::size_t>(d.input_dim));
  Vec out_grad(static_cast<std::size_t>(d.label_dim));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle)
      for (std::size_t i = train_idx.size(); i > 1; --i)
        std::swap(train_idx[i - 1], train_idx[rng.uniform_int(i)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / (static_cast<double>(end - start) * d.label_dim);
      zero_grads(grads);
      double batch_loss = 0.0;
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t i = train_idx[bi];
        const double* in = d.inputs.data() + i * static_cast<std::size_t>(d.input_dim);
        std::copy(in, in + d.input_dim, input.begin());
        const Vec& pred = mlp_forward(res.model, input, ws);
        const double* lab = d.labels.data() + i * static_cast<std::size_t>(d.label_dim);
        for (int j = 0; j < d.label_dim; ++j) {
          const double e = pred[static_cast<std::size_t>(j)] - lab[j];
          batch_loss += e * e * inv;
          out_grad[static_cast<std::size_t>(j)] = 2.0 * e * inv;
        }
        mlp_backward(res.model, ws, out_grad, grads);
      }
      check(std::isfinite(batch_loss),
            "train_inverse_model: non-finite loss at epoch " + std::to_string(epoch) +
                " batch " + std::to_string(batches));
      adam_step(res.model, grads, adam);
      epoch_loss += batch_loss;
      ++batches;
    }
    res.train_loss.push_back(epoch_loss / static_cast<double>(batches));
    res.val_loss.push_back(dataset_mse(res.model, d, val_idx));
  }
  return res;
}

// Online delay-resolved observer: the inverse model recovers the input the
// plant actually received from a window of recent observations; subtracting
// the commanded input and Q-filtering the residual gives the estimate.
class DisturbanceObserver {
 public:
  DisturbanceObserver(const MlpParams* inverse_model, const DobConfig& cfg)
      : model_(inverse_model),
        cfg_(cfg),
        qfilter_(cfg.qfilter_cutoff_hz, cfg.sample_time, LowPass2::Init::zero),
        obs_line_(cfg.window + 1),
        act_line_(cfg.window),
        estimates_(cfg.horizon + 1, 2),
        input_(static_cast<std::size_t>(cfg.input_dim())) {
    check(model_ != nullptr, "observer: inverse model required");
    check(model_->spec.input_width() == cfg.input_dim(),
          "observer: inverse model input width mismatch");
    check(model_->spec.output_width() == 2, "observer: inverse model output width != 2");
  }

  void begin_episode(const Obs5& first_obs) {
    qfilter_.reset();
    obs_line_.clear();
    obs_line_.push(first_obs);
    act_line_.clear();
    estimates_.clear();
  }

  // Called once per transition with the newly received observation and the
  // action the agent committed on the previous decision step. Missing
  // history early in the episode is zero-order held (observations) or zero
  // (actions).
  Vec2 update(const Obs5& obs, const Vec2& commanded_prev) {
    obs_line_.push(obs);
    act_line_.push(commanded_prev);
    for (int j = 0; j <= cfg_.window; ++j) {
      const Obs5& o = obs_line_.read_delayed(j);
      std::copy(o.begin(), o.end(), input_.begin() + static_cast<std::size_t>(j) * 5);
    }
    const Vec& pred = mlp_forward(*model_, input_, ws_);
    Vec2 commanded = {0.0, 0.0};
    if (act_line_.size() >= cfg_.window) commanded = act_line_.read_delayed(cfg_.window - 1);
    const Vec2 residual = {pred[0] - commanded[0], pred[1] - commanded[1]};
    const Vec2 estimate = qfilter_.apply(residual);
    estimates_.push(std::span<const double>(estimate.data(), 2));
    return estimate;
  }

  // Flattened newest-first window [d_k, d_{k-1}, ..., d_{k-H}], 2(H+1) wide.
  Vec disturbance_window() const { return estimates_.flattened(); }
  void disturbance_window_into(double* out) const { estimates_.flatten_into(out); }

  int window_dim() const { return 2 * (cfg_.horizon + 1); }

 private:
  const MlpParams* model_;
  DobConfig cfg_;
  LowPass2 qfilter_;
  DelayLine<Obs5> obs_line_;
  DelayLine<Vec2> act_line_;
  HistoryWindow estimates_;
  Vec input_;
  MlpWorkspace ws_;
};

}  // namespace reachlab
