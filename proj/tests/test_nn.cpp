#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sacap/error.hpp"
#include "sacap/nn.hpp"

#include "test_util.hpp"

using namespace sacap;

TEST_CASE("single identity layer passes the input through") {
  RngStream rng(0);
  Mlp net = Mlp::create({3, 3}, rng);
  test_util::zero_params(net);
  // weights = identity, bias = 0
  for (int i = 0; i < 3; ++i) net.params[static_cast<std::size_t>(i) * 3 + i] = 1.0;
  const std::vector<double> x{0.5, -2.0, 3.25};
  CHECK(forward(net, x) == x);
}

TEST_CASE("all-zero parameters give zero output") {
  RngStream rng(0);
  Mlp net = Mlp::create({4, 8, 2}, rng);
  test_util::zero_params(net);
  CHECK(forward(net, {1.0, -1.0, 2.0, 0.5}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("two-layer forward matches a hand composition") {
  // dims {2, 2, 1}: y = w2 . tanh(W1 x + b1) + b2, evaluated independently.
  RngStream rng(0);
  Mlp net = Mlp::create({2, 2, 1}, rng);
  net.params = {0.3, -0.2,   // W1 row 0
                0.5, 0.7,    // W1 row 1
                0.1, -0.4,   // b1
                1.5, -2.0,   // W2
                0.25};       // b2
  const double h0 = std::tanh(0.3 * 1.0 + (-0.2) * 0.0 + 0.1);
  const double h1 = std::tanh(0.5 * 1.0 + 0.7 * 0.0 + (-0.4));
  const double expected = 1.5 * h0 + (-2.0) * h1 + 0.25;
  CHECK(forward(net, {1.0, 0.0})[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("forward rejects shape mismatches") {
  RngStream rng(0);
  Mlp net = Mlp::create({3, 2}, rng);
  CHECK_THROWS_AS(forward(net, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(backward(net, {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("linear net gradient is the closed form g x^T") {
  RngStream rng(3);
  Mlp net = Mlp::create({3, 2}, rng);
  const std::vector<double> x{0.5, -1.5, 2.0};
  const std::vector<double> g{2.0, -0.25};
  const BackwardResult grad = backward(net, x, g);
  // dL/dW[o][i] = g[o] * x[i], dL/db[o] = g[o]
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i) {
      CHECK(grad.param_grad[static_cast<std::size_t>(o) * 3 + i] == g[o] * x[i]);
    }
    CHECK(grad.param_grad[6 + o] == g[o]);
  }
  // dL/dx = W^T g
  for (int i = 0; i < 3; ++i) {
    double expected = 0.0;
    for (int o = 0; o < 2; ++o) expected += net.params[static_cast<std::size_t>(o) * 3 + i] * g[o];
    CHECK(grad.input_grad[i] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("tanh derivative at zero is one") {
  // 1-1-1 net, zero params except unit weights: y = tanh(x * 1 + 0) * w2;
  // at x = 0 the hidden derivative is exactly 1.
  RngStream rng(0);
  Mlp net = Mlp::create({1, 1, 1}, rng);
  net.params = {1.0, 0.0, 1.0, 0.0};  // w1, b1, w2, b2
  const BackwardResult grad = backward(net, {0.0}, {1.0});
  CHECK(grad.input_grad[0] == 1.0);
}

TEST_CASE("gradient check meets the finite-difference tolerances") {
  RngStream rng(11);
  SUBCASE("random three-layer net") {
    Mlp net = Mlp::create({6, 64, 64, 4}, rng);
    RngStream check_rng(12);
    CHECK(gradient_check(net, 3, check_rng) < 1e-4);
  }
  SUBCASE("linear net is exact up to float noise") {
    Mlp net = Mlp::create({5, 3}, rng);
    RngStream check_rng(13);
    CHECK(gradient_check(net, 3, check_rng) < 1e-8);
  }
  SUBCASE("error is monotone in the number of trials") {
    Mlp net = Mlp::create({4, 16, 2}, rng);
    RngStream rng_few(14);
    RngStream rng_many(14);
    const double few = gradient_check(net, 1, rng_few);
    const double many = gradient_check(net, 20, rng_many);
    CHECK(many >= few);
  }
}

TEST_CASE("adam first step moves a zero parameter to -lr") {
  std::vector<double> params{0.0};
  AdamState state = AdamState::create(1, 0.001);
  adam_update(params, {1.0}, state);
  // Bias-corrected m_hat = 1, v_hat = 1: step = lr / (1 + eps).
  CHECK(params[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(state.step_count == 1);
}

TEST_CASE("adam with zero gradients changes nothing but the step count") {
  std::vector<double> params{0.5, -0.25};
  AdamState state = AdamState::create(2, 0.01);
  adam_update(params, {0.0, 0.0}, state);
  CHECK(params == std::vector<double>{0.5, -0.25});
  CHECK(state.step_count == 1);
}

TEST_CASE("adam is a pure function of parameters, gradient and state") {
  std::vector<double> params_a{0.3, 0.7};
  std::vector<double> params_b{0.3, 0.7};
  AdamState state_a = AdamState::create(2, 0.005);
  AdamState state_b = AdamState::create(2, 0.005);
  adam_update(params_a, {0.2, -0.4}, state_a);
  adam_update(params_b, {0.2, -0.4}, state_b);
  CHECK(params_a == params_b);
  CHECK(state_a.first_moment == state_b.first_moment);
}

TEST_CASE("adam rejects non-finite gradients") {
  std::vector<double> params{0.0};
  AdamState state = AdamState::create(1, 0.001);
  CHECK_THROWS_AS(adam_update(params, {std::nan("")}, state), Error);
}

TEST_CASE("parameter text format round-trips and validates shapes") {
  RngStream rng(21);
  Mlp net = Mlp::create({3, 8, 2}, rng);
  const Mlp loaded = load_mlp(save_mlp(net));
  CHECK(loaded.dims == net.dims);
  CHECK(loaded.params == net.params);

  CHECK_THROWS_AS(load_mlp("garbage"), Error);
  // Truncated payload: drop the last parameter line.
  std::string text = save_mlp(net);
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  CHECK_THROWS_AS(load_mlp(text), Error);
}
