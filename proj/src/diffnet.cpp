#include "rlop/diffnet.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rlop::nn {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "tanh";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void ResNetConfig::validate() const {
  if (input_dim < 1 || latent_dim < 1 || output_dim < 1 || blocks < 0 || layers_per_block < 1) {
    throw std::invalid_argument("ResNetConfig: dimensions must be positive");
  }
}

double activate(Activation act, double z) {
  switch (act) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::identity: return z;
  }
  return z;
}

double activate_derivative(Activation act, double z) {
  switch (act) {
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ResNet::ResNet(const ResNetConfig& config) : config_(config) {
  config_.validate();
  std::size_t offset = 0;
  auto add = [&](int in, int out) {
    AffineLayout layer{in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = layer.bias + static_cast<std::size_t>(out);
    layers_.push_back(layer);
  };
  add(config.input_dim, config.latent_dim);
  for (int k = 0; k < config.blocks; ++k) {
    for (int l = 0; l < config.layers_per_block; ++l) add(config.latent_dim, config.latent_dim);
  }
  add(config.latent_dim, config.output_dim);
  params_.assign(offset, 0.0);
}

ResNet ResNet::random(const ResNetConfig& config, Rng& rng) {
  ResNet net(config);
  for (const auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t i = 0; i < static_cast<std::size_t>(layer.in) * layer.out; ++i) {
      net.params_[layer.weight + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  return net;
}

std::vector<std::string> ResNet::layer_names() const {
  std::vector<std::string> names{"lift"};
  for (int k = 0; k < config_.blocks; ++k) {
    for (int l = 0; l < config_.layers_per_block; ++l) {
      names.push_back("block" + std::to_string(k) + "." + std::to_string(l));
    }
  }
  names.push_back("project");
  return names;
}

const AffineLayout& ResNet::block_layer(int block, int layer) const {
  return layers_.at(1 + static_cast<std::size_t>(block * config_.layers_per_block + layer));
}

void ResNet::apply_affine(const AffineLayout& layer, std::span<const double> in,
                          std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(layer.out));
  const double* w = params_.data() + layer.weight;
  const double* b = params_.data() + layer.bias;
  for (int i = 0; i < layer.out; ++i) {
    double acc = b[i];
    const double* row = w + static_cast<std::size_t>(i) * layer.in;
    for (int j = 0; j < layer.in; ++j) acc += row[j] * in[j];
    out[i] = acc;
  }
}

std::vector<double> ResNet::forward(std::span<const double> x) const {
  Cache scratch;
  return forward(x, scratch);
}

std::vector<double> ResNet::forward(std::span<const double> x, Cache& cache) const {
  if (static_cast<int>(x.size()) != config_.input_dim) {
    throw std::invalid_argument("ResNet::forward: feature length does not match input_dim");
  }
  const Activation act = config_.activation;
  const std::size_t hidden_layers = layers_.size() - 1;
  cache.input.assign(x.begin(), x.end());
  cache.pre.resize(hidden_layers);
  cache.post.resize(hidden_layers);
  cache.block_sum.resize(static_cast<std::size_t>(config_.blocks));
  cache.block_out.resize(static_cast<std::size_t>(config_.blocks));

  auto activate_into = [act](const std::vector<double>& z, std::vector<double>& a) {
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = activate(act, z[i]);
  };

  apply_affine(layers_[0], x, cache.pre[0]);
  activate_into(cache.pre[0], cache.post[0]);
  const std::vector<double>* h = &cache.post[0];

  std::size_t idx = 1;
  for (int k = 0; k < config_.blocks; ++k) {
    const std::vector<double>* in = h;
    for (int l = 0; l < config_.layers_per_block; ++l, ++idx) {
      apply_affine(layers_[idx], *in, cache.pre[idx]);
      activate_into(cache.pre[idx], cache.post[idx]);
      in = &cache.post[idx];
    }
    // The last affine of a block feeds the residual sum, not an activation.
    auto& sum = cache.block_sum[static_cast<std::size_t>(k)];
    const auto& last = cache.pre[idx - 1];
    sum.resize(last.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = (*h)[i] + last[i];
    activate_into(sum, cache.block_out[static_cast<std::size_t>(k)]);
    h = &cache.block_out[static_cast<std::size_t>(k)];
  }

  std::vector<double> out;
  apply_affine(layers_.back(), *h, out);
  return out;
}

std::vector<double> ResNet::backward(const Cache& cache, std::span<const double> upstream,
                                     std::span<double> param_grad) const {
  if (static_cast<int>(upstream.size()) != config_.output_dim) {
    throw std::invalid_argument("ResNet::backward: upstream length does not match output_dim");
  }
  if (param_grad.size() != params_.size()) {
    throw std::invalid_argument("ResNet::backward: gradient buffer has the wrong size");
  }
  if (cache.input.size() != static_cast<std::size_t>(config_.input_dim)) {
    throw std::invalid_argument("ResNet::backward: cache does not come from this network");
  }
  const Activation act = config_.activation;

  // Accumulates weight/bias gradients for `layer` and returns W^T g.
  auto affine_back = [&](const AffineLayout& layer, std::span<const double> in,
                         std::span<const double> g) {
    std::vector<double> g_in(static_cast<std::size_t>(layer.in), 0.0);
    const double* w = params_.data() + layer.weight;
    double* gw = param_grad.data() + layer.weight;
    double* gb = param_grad.data() + layer.bias;
    for (int i = 0; i < layer.out; ++i) {
      const double gi = g[i];
      gb[i] += gi;
      const std::size_t row = static_cast<std::size_t>(i) * layer.in;
      for (int j = 0; j < layer.in; ++j) {
        gw[row + j] += gi * in[j];
        g_in[j] += w[row + j] * gi;
      }
    }
    return g_in;
  };

  const std::vector<double>& top =
      config_.blocks > 0 ? cache.block_out.back() : cache.post[0];
  std::vector<double> g_h = affine_back(layers_.back(), top, upstream);

  std::size_t idx = layers_.size() - 1;  // one past the last block layer
  for (int k = config_.blocks - 1; k >= 0; --k) {
    const auto& sum = cache.block_sum[static_cast<std::size_t>(k)];
    const std::vector<double>& block_in =
        k > 0 ? cache.block_out[static_cast<std::size_t>(k - 1)] : cache.post[0];
    std::vector<double> g_sum(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) g_sum[i] = g_h[i] * activate_derivative(act, sum[i]);

    std::vector<double> g_z = g_sum;
    for (int l = config_.layers_per_block - 1; l >= 0; --l) {
      --idx;
      const std::vector<double>& in = l > 0 ? cache.post[idx - 1] : block_in;
      std::vector<double> g_in = affine_back(layers_[idx], in, g_z);
      if (l > 0) {
        const auto& z_prev = cache.pre[idx - 1];
        for (std::size_t i = 0; i < g_in.size(); ++i) g_in[i] *= activate_derivative(act, z_prev[i]);
      }
      g_z = std::move(g_in);
    }
    for (std::size_t i = 0; i < g_sum.size(); ++i) g_sum[i] += g_z[i];
    g_h = std::move(g_sum);
  }

  for (std::size_t i = 0; i < g_h.size(); ++i) g_h[i] *= activate_derivative(act, cache.pre[0][i]);
  return affine_back(layers_.front(), cache.input, g_h);
}

GaussianPolicy GaussianPolicy::random(const ResNetConfig& config, Rng& rng) {
  ResNetConfig head = config;
  head.output_dim = 1;
  GaussianPolicy policy;
  policy.mean_net = ResNet::random(head, rng);
  policy.std_net = ResNet::random(head, rng);
  return policy;
}

GaussianPolicy::Head GaussianPolicy::evaluate(std::span<const double> features) const {
  const double mean = mean_net.forward(features).front();
  const double raw = std_net.forward(features).front();
  if (!std::isfinite(mean) || !std::isfinite(raw)) {
    throw std::domain_error("GaussianPolicy: non-finite network output");
  }
  return {mean, softplus(raw) + kStdFloor, raw};
}

double gaussian_log_density(double action, double mean, double std) {
  const double z = (action - mean) / std;
  return -0.5 * z * z - std::log(std) - 0.5 * std::log(2.0 * std::numbers::pi);
}

ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> features,
                           Rng& rng) {
  const auto head = policy.evaluate(features);
  const double action = head.mean + head.std * rng.normal();
  return {action, gaussian_log_density(action, head.mean, head.std)};
}

double log_prob(const GaussianPolicy& policy, std::span<const double> features, double action) {
  const auto head = policy.evaluate(features);
  return gaussian_log_density(action, head.mean, head.std);
}

void log_prob_gradients(const GaussianPolicy& policy, std::span<const double> features,
                        double action, double advantage, PolicyGradients& grads) {
  ResNet::Cache mean_cache;
  ResNet::Cache std_cache;
  const double mean = policy.mean_net.forward(features, mean_cache).front();
  const double raw = policy.std_net.forward(features, std_cache).front();
  if (!std::isfinite(mean) || !std::isfinite(raw)) {
    throw std::domain_error("GaussianPolicy: non-finite network output");
  }
  const double std = softplus(raw) + kStdFloor;
  const double diff = action - mean;
  const double d_mean = advantage * diff / (std * std);
  const double d_std = advantage * (diff * diff / (std * std * std) - 1.0 / std);
  const double d_raw = d_std * sigmoid(raw);
  const double up_mean[1] = {d_mean};
  const double up_std[1] = {d_raw};
  policy.mean_net.backward(mean_cache, up_mean, grads.mean);
  policy.std_net.backward(std_cache, up_std, grads.std);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace rlop::nn
