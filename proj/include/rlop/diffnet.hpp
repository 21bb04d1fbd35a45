#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlop/random.hpp"

namespace rlop::nn {

enum class Activation { tanh, relu, identity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct ResNetConfig {
  int input_dim = 8;
  int latent_dim = 10;
  int blocks = 2;
  int layers_per_block = 2;
  int output_dim = 1;
  Activation activation = Activation::tanh;

  void validate() const;
  friend bool operator==(const ResNetConfig&, const ResNetConfig&) = default;
};

// Affine map out x in, row-major weight followed by bias in the flat buffer.
struct AffineLayout {
  int in = 0;
  int out = 0;
  std::size_t weight = 0;
  std::size_t bias = 0;
  friend bool operator==(const AffineLayout&, const AffineLayout&) = default;
};

// Lift / residual blocks / project network:
//   project . B_K . ... . B_1 . act(lift x)
//   B_k(h) = act(h + Z_n(act(Z_{n-1}(... act(Z_1 h)))))
// All parameters live in one contiguous buffer; layers() gives the layout in
// manifest order: lift, block0.0 .. block0.{n-1}, block1.0, ..., project.
class ResNet {
 public:
  struct Cache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // pre-activation per affine layer (project excluded)
    std::vector<std::vector<double>> post;  // activation of pre, same indexing
    std::vector<std::vector<double>> block_sum;  // h + Z_n(...) per block
    std::vector<std::vector<double>> block_out;  // act(block_sum)
  };

  ResNet() = default;
  // Zero-initialized parameters.
  explicit ResNet(const ResNetConfig& config);
  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static ResNet random(const ResNetConfig& config, Rng& rng);

  const ResNetConfig& config() const { return config_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const AffineLayout> layers() const { return layers_; }
  std::vector<std::string> layer_names() const;

  const AffineLayout& lift() const { return layers_.front(); }
  const AffineLayout& block_layer(int block, int layer) const;
  const AffineLayout& project() const { return layers_.back(); }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Cache& cache) const;

  // Reverse pass for the output cotangent `upstream`; parameter gradients are
  // accumulated into `param_grad` (size parameter_count()). Returns the
  // gradient with respect to the input.
  std::vector<double> backward(const Cache& cache, std::span<const double> upstream,
                               std::span<double> param_grad) const;

  friend bool operator==(const ResNet&, const ResNet&) = default;

 private:
  void apply_affine(const AffineLayout& layer, std::span<const double> in,
                    std::vector<double>& out) const;

  ResNetConfig config_;
  std::vector<AffineLayout> layers_;
  std::vector<double> params_;
};

double activate(Activation act, double z);
double activate_derivative(Activation act, double z);

// Positive map for the std head: softplus(raw) + floor.
inline constexpr double kStdFloor = 1e-3;
double softplus(double z);
double sigmoid(double z);

// N(mean_net(f), std_map(std_net(f))).
struct GaussianPolicy {
  ResNet mean_net;
  ResNet std_net;

  static GaussianPolicy random(const ResNetConfig& config, Rng& rng);

  struct Head {
    double mean;
    double std;
    double std_raw;  // std_net output before the positive map
  };
  // Throws std::domain_error when a network output is not finite.
  Head evaluate(std::span<const double> features) const;

  friend bool operator==(const GaussianPolicy&, const GaussianPolicy&) = default;
};

struct ActionSample {
  double action;
  double log_prob;
};

double gaussian_log_density(double action, double mean, double std);

ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> features,
                           Rng& rng);

double log_prob(const GaussianPolicy& policy, std::span<const double> features, double action);

struct PolicyGradients {
  std::vector<double> mean;
  std::vector<double> std;

  explicit PolicyGradients(const GaussianPolicy& policy)
      : mean(policy.mean_net.parameter_count(), 0.0),
        std(policy.std_net.parameter_count(), 0.0) {}
};

// Accumulates advantage * grad log pi(action | features) into `grads`.
void log_prob_gradients(const GaussianPolicy& policy, std::span<const double> features,
                        double action, double advantage, PolicyGradients& grads);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr)
      : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam descent step on `params`.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace rlop::nn
