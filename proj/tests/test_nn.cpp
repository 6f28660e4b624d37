#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>

#include "reachlab/checkpoint.hpp"
#include "reachlab/nn.hpp"

using namespace reachlab;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// independent straight-line forward pass used as the oracle
Vec naive_forward(const MlpParams& p, const Vec& input) {
  Vec x = input;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const int in = p.spec.widths[li];
    const int out = p.spec.widths[li + 1];
    Vec y(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double s = p.layers[li].b[static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i)
        s += p.layers[li].w[static_cast<std::size_t>(o * in + i)] *
             x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = s;
    }
    if (li + 1 < p.layers.size() || p.spec.output_activation == Activation::tanh)
      for (auto& v : y) v = std::tanh(v);
    x = std::move(y);
  }
  return x;
}

MlpParams random_net(const MlpSpec& spec, Rng& rng, double scale = 0.7) {
  MlpParams p = make_zero_params(spec);
  for (auto& l : p.layers) {
    for (auto& w : l.w) w = rng.uniform(-scale, scale);
    for (auto& b : l.b) b = rng.uniform(-scale, scale);
  }
  return p;
}

}  // namespace

TEST_CASE("forward: all-zero parameters give zero output") {
  MlpParams p = make_zero_params({{4, 8, 3}});
  const Vec out = mlp_forward(p, {0.3, -0.7, 1.0, 0.2});
  for (double v : out) REQUIRE(v == 0.0);
}

TEST_CASE("forward: single affine unit passes bias through") {
  MlpParams p = make_zero_params({{1, 1}});
  p.layers[0].b[0] = 0.5;
  REQUIRE(mlp_forward(p, {0.0})[0] == 0.5);
}

TEST_CASE("forward matches an independent re-implementation") {
  Rng rng(42);
  const MlpSpec spec{{5, 7, 6, 2}};
  const MlpParams p = random_net(spec, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Vec input(5);
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);
    const Vec a = mlp_forward(p, input);
    const Vec b = naive_forward(p, input);
    for (std::size_t i = 0; i < a.size(); ++i)
      REQUIRE(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("forward is deterministic and validates input width") {
  Rng rng(7);
  const MlpParams p = random_net({{3, 4, 2}}, rng);
  const Vec x = {0.1, -0.2, 0.3};
  REQUIRE(mlp_forward(p, x) == mlp_forward(p, x));
  REQUIRE_THROWS_AS(mlp_forward(p, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("hidden activations stay inside (-1, 1)") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const MlpParams p = random_net({{4, 8, 8, 1}}, rng, 2.0);
    Vec input(4);
    for (auto& v : input) v = rng.uniform(-3.0, 3.0);
    MlpWorkspace ws;
    mlp_forward(p, input, ws);
    for (std::size_t li = 1; li + 1 < ws.acts.size(); ++li)
      for (double a : ws.acts[li]) {
        REQUIRE(a > -1.0);
        REQUIRE(a < 1.0);
      }
  }
}

TEST_CASE("backward: zero output gradient gives zero gradients") {
  Rng rng(3);
  const MlpParams p = random_net({{3, 5, 2}}, rng);
  MlpWorkspace ws;
  mlp_forward(p, {0.5, -0.5, 0.25}, ws);
  MlpGrads g = make_zero_params(p.spec);
  const Vec gin = mlp_backward(p, ws, {0.0, 0.0}, g);
  for (const auto& l : g.layers) {
    for (double v : l.w) REQUIRE(v == 0.0);
    for (double v : l.b) REQUIRE(v == 0.0);
  }
  for (double v : gin) REQUIRE(v == 0.0);
}

TEST_CASE("backward: hand-checked linear unit under squared loss") {
  // y = w x + b with w=1, b=0, x=2, target 0: dL/dw = 2 y x = 8, dL/db = 4
  MlpParams p = make_zero_params({{1, 1}});
  p.layers[0].w[0] = 1.0;
  MlpWorkspace ws;
  const Vec y = mlp_forward(p, {2.0}, ws);
  REQUIRE(y[0] == 2.0);
  MlpGrads g = make_zero_params(p.spec);
  mlp_backward(p, ws, {2.0 * y[0]}, g);
  REQUIRE(g.layers[0].w[0] == 8.0);
  REQUIRE(g.layers[0].b[0] == 4.0);
}

TEST_CASE("backward matches central finite differences on sampled nets") {
  Rng rng(1234);
  const std::vector<MlpSpec> specs = {
      {{2, 3, 1}}, {{4, 8, 8, 2}}, {{3, 5, 4}}, {{6, 7, 3}, Activation::tanh}};
  for (const auto& spec : specs) {
    MlpParams p = random_net(spec, rng);
    Vec input(static_cast<std::size_t>(spec.input_width()));
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);
    Vec cvec(static_cast<std::size_t>(spec.output_width()));
    for (auto& v : cvec) v = rng.uniform(-1.0, 1.0);
    // scalar functional L = c . f(x)
    auto loss = [&]() {
      const Vec out = mlp_forward(p, input);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += cvec[i] * out[i];
      return s;
    };
    MlpWorkspace ws;
    mlp_forward(p, input, ws);
    MlpGrads g = make_zero_params(spec);
    const Vec gin = mlp_backward(p, ws, cvec, g);
    const double h = 1e-5;
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
      auto check_array = [&](Vec& arr, const Vec& garr) {
        for (std::size_t i = 0; i < arr.size(); ++i) {
          const double keep = arr[i];
          arr[i] = keep + h;
          const double lp = loss();
          arr[i] = keep - h;
          const double lm = loss();
          arr[i] = keep;
          REQUIRE(rel_err((lp - lm) / (2 * h), garr[i]) < 1e-4);
        }
      };
      check_array(p.layers[li].w, g.layers[li].w);
      check_array(p.layers[li].b, g.layers[li].b);
    }
    // input gradient too
    for (std::size_t i = 0; i < input.size(); ++i) {
      const double keep = input[i];
      input[i] = keep + h;
      const double lp = loss();
      input[i] = keep - h;
      const double lm = loss();
      input[i] = keep;
      REQUIRE(rel_err((lp - lm) / (2 * h), gin[i]) < 1e-4);
    }
  }
}

TEST_CASE("orthogonal init produces gain-scaled orthonormal maps") {
  Rng rng(5);
  const int out = 8, in = 5;
  Vec w(static_cast<std::size_t>(out * in));
  orthogonal_init(w, out, in, std::sqrt(2.0), rng);
  // columns orthonormal up to the gain when out >= in
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < in; ++j) {
      double s = 0.0;
      for (int o = 0; o < out; ++o) s += w[static_cast<std::size_t>(o * in + i)] *
                                          w[static_cast<std::size_t>(o * in + j)];
      REQUIRE(std::abs(s - (i == j ? 2.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("adam: zero gradients leave parameters and moments untouched") {
  Rng rng(9);
  MlpParams p = random_net({{2, 3, 1}}, rng);
  const MlpParams before = p;
  AdamState s = make_adam_state(p, {});
  MlpGrads g = make_zero_params(p.spec);
  adam_step(p, g, s);
  REQUIRE(s.step == 1);
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    REQUIRE(p.layers[li].w == before.layers[li].w);
    REQUIRE(p.layers[li].b == before.layers[li].b);
    for (double m : s.w_state[li].m) REQUIRE(m == 0.0);
    for (double v : s.w_state[li].v) REQUIRE(v == 0.0);
  }
}

TEST_CASE("adam: bias-corrected first step moves by about -lr*sign(g)") {
  MlpParams p = make_zero_params({{1, 1}});
  AdamState s = make_adam_state(p, {});
  MlpGrads g = make_zero_params(p.spec);
  g.layers[0].w[0] = 0.37;
  adam_step(p, g, s);
  REQUIRE(std::abs(p.layers[0].w[0] + s.cfg.learning_rate) < 1e-6 * s.cfg.learning_rate);
  // moments become nonzero exactly when a nonzero gradient is applied
  REQUIRE(s.w_state[0].m[0] != 0.0);
  REQUIRE(s.w_state[0].v[0] != 0.0);
}

TEST_CASE("adam: identical runs produce bit-identical trajectories") {
  auto run = [] {
    Rng rng(77);
    MlpParams p = random_net({{3, 6, 2}}, rng);
    AdamState s = make_adam_state(p, {});
    MlpGrads g = make_zero_params(p.spec);
    MlpWorkspace ws;
    for (int step = 0; step < 25; ++step) {
      Vec input = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Vec& out = mlp_forward(p, input, ws);
      zero_grads(g);
      mlp_backward(p, ws, {2.0 * out[0], 2.0 * out[1]}, g);
      adam_step(p, g, s);
    }
    return p;
  };
  const MlpParams a = run();
  const MlpParams b = run();
  for (std::size_t li = 0; li < a.layers.size(); ++li) {
    REQUIRE(a.layers[li].w == b.layers[li].w);
    REQUIRE(a.layers[li].b == b.layers[li].b);
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  MlpParams p = make_zero_params({{1, 1}});
  AdamState s = make_adam_state(p, {});
  MlpGrads g = make_zero_params(p.spec);
  g.layers[0].w[0] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(adam_step(p, g, s), std::invalid_argument);
}

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
  Rng rng(21);
  const auto dir = std::filesystem::temp_directory_path() / "reachlab_nn_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "net.ckpt").string();

  Checkpoint c;
  c.mlps["net"] = random_net({{4, 6, 2}, Activation::tanh}, rng);
  c.vectors["log_std"] = {0.25, -0.5};
  c.strings["kind"] = "test";
  c.save(path);
  const Checkpoint d = Checkpoint::load(path);
  REQUIRE(d.string("kind") == "test");
  REQUIRE(d.vector("log_std") == c.vector("log_std"));
  REQUIRE(d.mlp("net").spec.widths == c.mlp("net").spec.widths);
  REQUIRE(d.mlp("net").spec.output_activation == Activation::tanh);
  for (std::size_t li = 0; li < 2; ++li) {
    REQUIRE(d.mlp("net").layers[li].w == c.mlp("net").layers[li].w);
    REQUIRE(d.mlp("net").layers[li].b == c.mlp("net").layers[li].b);
  }

  // identical content, identical bytes
  const std::string path2 = (dir / "net2.ckpt").string();
  c.save(path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  REQUIRE(b1 == b2);
}
