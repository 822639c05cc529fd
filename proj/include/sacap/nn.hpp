#pragma once

#include <string>
#include <vector>

#include "sacap/rng.hpp"

namespace sacap {

// Dense multilayer perceptron with tanh hidden activations and an identity
// output layer. Parameters live in one flat vector (per layer: a row-major
// out x in weight matrix, then the bias vector), which makes the optimizer,
// finite-difference checks, and persistence uniform.
struct Mlp {
  std::vector<int> dims;       // layer widths, dims.size() >= 2
  std::vector<double> params;  // flat parameters, see layout above

  static Mlp create(const std::vector<int>& dims, RngStream& rng);

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int num_layers() const { return static_cast<int>(dims.size()) - 1; }
  std::size_t param_count() const;

  // Offset of layer i's weight block in params; biases follow the weights.
  std::size_t layer_offset(int layer) const;
};

std::vector<double> forward(const Mlp& net, const std::vector<double>& input);

struct BackwardResult {
  std::vector<double> param_grad;  // same layout as Mlp::params
  std::vector<double> input_grad;
};

// Exact reverse-mode gradients of output . output_grad with respect to all
// parameters and the input.
BackwardResult backward(const Mlp& net, const std::vector<double>& input,
                        const std::vector<double>& output_grad);

// Accumulating variant used by the training loops: adds into param_grad
// (which must already have the right size) and returns the input gradient.
std::vector<double> backward_accumulate(const Mlp& net, const std::vector<double>& input,
                                        const std::vector<double>& output_grad,
                                        std::vector<double>& param_grad);

// Input gradient only; the net's parameters are treated as constants.
std::vector<double> backward_input_only(const Mlp& net, const std::vector<double>& input,
                                        const std::vector<double>& output_grad);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long long step_count = 0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState create(std::size_t param_count, double learning_rate);
};

// Standard bias-corrected Adam step, in place. Non-finite gradients abort
// training with an error.
void adam_update(std::vector<double>& params, const std::vector<double>& grad, AdamState& state);

// Worst relative error between backward() and central finite differences
// (h = 1e-5) over `trials` random inputs and output gradients on `net`.
double gradient_check(const Mlp& net, int trials, RngStream& rng);

// Versioned flat text round-trip; loading validates the shape header.
std::string save_mlp(const Mlp& net);
Mlp load_mlp(const std::string& text);

}  // namespace sacap
