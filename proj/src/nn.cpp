#include "sacap/nn.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sacap/error.hpp"

namespace sacap {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw validation_error("mlp needs at least input and output dims");
  for (int d : dims) {
    if (d < 1) throw validation_error("mlp layer widths must be >= 1");
  }
}

}  // namespace

Mlp Mlp::create(const std::vector<int>& dims, RngStream& rng) {
  check_dims(dims);
  Mlp net;
  net.dims = dims;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    count += static_cast<std::size_t>(dims[i + 1]) * dims[i] + dims[i + 1];
  }
  net.params.resize(count);
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    const std::size_t block = static_cast<std::size_t>(dims[i + 1]) * dims[i] + dims[i + 1];
    for (std::size_t j = 0; j < block; ++j) net.params[k++] = rng.uniform(-bound, bound);
  }
  return net;
}

std::size_t Mlp::param_count() const { return params.size(); }

std::size_t Mlp::layer_offset(int layer) const {
  std::size_t offset = 0;
  for (int i = 0; i < layer; ++i) {
    offset += static_cast<std::size_t>(dims[i + 1]) * dims[i] + dims[i + 1];
  }
  return offset;
}

std::vector<double> forward(const Mlp& net, const std::vector<double>& input) {
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw validation_error("mlp input has length " + std::to_string(input.size()) +
                           ", expected " + std::to_string(net.input_dim()));
  }
  std::vector<double> activation = input;
  std::vector<double> next;
  std::size_t offset = 0;
  const int layers = net.num_layers();
  for (int layer = 0; layer < layers; ++layer) {
    const int in = net.dims[layer];
    const int out = net.dims[layer + 1];
    next.assign(out, 0.0);
    const double* w = net.params.data() + offset;
    const double* b = w + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      double sum = b[o];
      for (int i = 0; i < in; ++i) sum += row[i] * activation[i];
      next[o] = (layer + 1 < layers) ? std::tanh(sum) : sum;
    }
    activation.swap(next);
    offset += static_cast<std::size_t>(out) * in + out;
  }
  return activation;
}

std::vector<double> backward_accumulate(const Mlp& net, const std::vector<double>& input,
                                        const std::vector<double>& output_grad,
                                        std::vector<double>& param_grad) {
  if (static_cast<int>(output_grad.size()) != net.output_dim()) {
    throw validation_error("output gradient has wrong length");
  }
  if (param_grad.size() != net.param_count()) {
    throw validation_error("parameter gradient buffer has wrong size");
  }
  const int layers = net.num_layers();

  // Forward pass, keeping each layer's post-activation values.
  std::vector<std::vector<double>> acts(layers + 1);
  acts[0] = input;
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw validation_error("mlp input has wrong length");
  }
  std::size_t offset = 0;
  for (int layer = 0; layer < layers; ++layer) {
    const int in = net.dims[layer];
    const int out = net.dims[layer + 1];
    acts[layer + 1].assign(out, 0.0);
    const double* w = net.params.data() + offset;
    const double* b = w + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      double sum = b[o];
      for (int i = 0; i < in; ++i) sum += row[i] * acts[layer][i];
      acts[layer + 1][o] = (layer + 1 < layers) ? std::tanh(sum) : sum;
    }
    offset += static_cast<std::size_t>(out) * in + out;
  }

  // Reverse pass. delta holds dL/d(pre-activation) of the current layer.
  std::vector<double> delta = output_grad;
  for (int layer = layers - 1; layer >= 0; --layer) {
    const int in = net.dims[layer];
    const int out = net.dims[layer + 1];
    offset -= static_cast<std::size_t>(out) * in + out;
    const double* w = net.params.data() + offset;
    double* wg = param_grad.data() + offset;
    double* bg = wg + static_cast<std::size_t>(out) * in;

    if (layer + 1 < layers) {
      // tanh'(x) = 1 - tanh(x)^2, and acts holds tanh(x).
      for (int o = 0; o < out; ++o) {
        const double a = acts[layer + 1][o];
        delta[o] *= 1.0 - a * a;
      }
    }

    std::vector<double> prev_delta(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      double* grow = wg + static_cast<std::size_t>(o) * in;
      bg[o] += d;
      for (int i = 0; i < in; ++i) {
        grow[i] += d * acts[layer][i];
        prev_delta[i] += d * row[i];
      }
    }
    delta.swap(prev_delta);
  }
  return delta;  // gradient with respect to the input
}

BackwardResult backward(const Mlp& net, const std::vector<double>& input,
                        const std::vector<double>& output_grad) {
  BackwardResult result;
  result.param_grad.assign(net.param_count(), 0.0);
  result.input_grad = backward_accumulate(net, input, output_grad, result.param_grad);
  return result;
}

std::vector<double> backward_input_only(const Mlp& net, const std::vector<double>& input,
                                        const std::vector<double>& output_grad) {
  if (static_cast<int>(output_grad.size()) != net.output_dim()) {
    throw validation_error("output gradient has wrong length");
  }
  const int layers = net.num_layers();
  std::vector<std::vector<double>> acts(layers + 1);
  acts[0] = input;
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw validation_error("mlp input has wrong length");
  }
  std::size_t offset = 0;
  for (int layer = 0; layer < layers; ++layer) {
    const int in = net.dims[layer];
    const int out = net.dims[layer + 1];
    acts[layer + 1].assign(out, 0.0);
    const double* w = net.params.data() + offset;
    const double* b = w + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      double sum = b[o];
      for (int i = 0; i < in; ++i) sum += row[i] * acts[layer][i];
      acts[layer + 1][o] = (layer + 1 < layers) ? std::tanh(sum) : sum;
    }
    offset += static_cast<std::size_t>(out) * in + out;
  }

  std::vector<double> delta = output_grad;
  for (int layer = layers - 1; layer >= 0; --layer) {
    const int in = net.dims[layer];
    const int out = net.dims[layer + 1];
    offset -= static_cast<std::size_t>(out) * in + out;
    const double* w = net.params.data() + offset;
    if (layer + 1 < layers) {
      for (int o = 0; o < out; ++o) {
        const double a = acts[layer + 1][o];
        delta[o] *= 1.0 - a * a;
      }
    }
    std::vector<double> prev_delta(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev_delta[i] += d * row[i];
    }
    delta.swap(prev_delta);
  }
  return delta;
}

AdamState AdamState::create(std::size_t param_count, double learning_rate) {
  AdamState st;
  st.first_moment.assign(param_count, 0.0);
  st.second_moment.assign(param_count, 0.0);
  st.learning_rate = learning_rate;
  return st;
}

void adam_update(std::vector<double>& params, const std::vector<double>& grad, AdamState& state) {
  if (params.size() != grad.size() || params.size() != state.first_moment.size()) {
    throw validation_error("adam_update shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw internal_error("non-finite gradient; aborting training");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grad[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

double gradient_check(const Mlp& net, int trials, RngStream& rng) {
  if (trials < 1) throw validation_error("gradient_check needs trials >= 1");
  constexpr double kStep = 1e-5;
  Mlp probe = net;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> input(net.input_dim());
    for (double& x : input) x = rng.uniform(-1.0, 1.0);
    std::vector<double> output_grad(net.output_dim());
    for (double& g : output_grad) g = rng.uniform(-1.0, 1.0);

    const BackwardResult analytic = backward(probe, input, output_grad);

    // Scalar objective: output . output_grad. Check a subset of coordinates
    // per trial to keep the check fast on larger nets.
    const std::size_t count = probe.param_count();
    const std::size_t stride = count > 64 ? count / 64 : 1;
    const std::size_t phase = static_cast<std::size_t>(rng.uniform_int(static_cast<long long>(stride)));
    for (std::size_t i = phase; i < count; i += stride) {
      const double saved = probe.params[i];
      probe.params[i] = saved + kStep;
      const std::vector<double> up = forward(probe, input);
      probe.params[i] = saved - kStep;
      const std::vector<double> down = forward(probe, input);
      probe.params[i] = saved;
      double fd = 0.0;
      for (int o = 0; o < probe.output_dim(); ++o) {
        fd += (up[o] - down[o]) * output_grad[o];
      }
      fd /= 2.0 * kStep;
      const double a = analytic.param_grad[i];
      const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
      worst = std::max(worst, rel);
    }

    // Input gradient path.
    for (std::size_t i = 0; i < input.size(); ++i) {
      const double saved = input[i];
      input[i] = saved + kStep;
      const std::vector<double> up = forward(probe, input);
      input[i] = saved - kStep;
      const std::vector<double> down = forward(probe, input);
      input[i] = saved;
      double fd = 0.0;
      for (int o = 0; o < probe.output_dim(); ++o) {
        fd += (up[o] - down[o]) * output_grad[o];
      }
      fd /= 2.0 * kStep;
      const double a = analytic.input_grad[i];
      const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

std::string save_mlp(const Mlp& net) {
  std::ostringstream out;
  out << "mlp-v1\n";
  for (std::size_t i = 0; i < net.dims.size(); ++i) {
    out << net.dims[i] << (i + 1 < net.dims.size() ? ' ' : '\n');
  }
  char buf[40];
  for (double p : net.params) {
    std::snprintf(buf, sizeof(buf), "%.17g", p);
    out << buf << "\n";
  }
  return out.str();
}

Mlp load_mlp(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  if (!(in >> magic) || magic != "mlp-v1") throw parse_error("bad mlp header");
  std::string line;
  std::getline(in, line);  // rest of header line
  if (!std::getline(in, line)) throw parse_error("missing mlp dims line");
  std::istringstream dims_in(line);
  Mlp net;
  int d;
  while (dims_in >> d) net.dims.push_back(d);
  check_dims(net.dims);
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < net.dims.size(); ++i) {
    count += static_cast<std::size_t>(net.dims[i + 1]) * net.dims[i] + net.dims[i + 1];
  }
  net.params.reserve(count);
  double value;
  while (in >> value) net.params.push_back(value);
  if (net.params.size() != count) {
    throw parse_error("mlp parameter count " + std::to_string(net.params.size()) +
                      " does not match dims (expected " + std::to_string(count) + ")");
  }
  for (double p : net.params) {
    if (!std::isfinite(p)) throw parse_error("mlp parameters must be finite");
  }
  return net;
}

}  // namespace sacap
