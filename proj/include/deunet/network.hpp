#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "deunet/deu_kernel.hpp"
#include "deunet/tensor.hpp"

namespace deunet {

enum class ActivationKind { Deu, Relu, Prelu, Swish };

const char* to_string(ActivationKind k);
std::optional<ActivationKind> activation_kind_from_string(std::string_view s);

/// Per-layer activation description; exactly the member matching `kind` is
/// populated, one entry per unit.
struct ActivationDescriptor {
  ActivationKind kind = ActivationKind::Relu;
  std::vector<DeuNeuron> deu;
  std::vector<double> prelu_alpha;
  std::vector<double> swish_beta;

  int params_per_unit() const;
  int width() const;
  void validate(int layer_width) const;
};

struct BatchNormState {
  std::vector<double> gamma, beta, running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormState identity(int width);
  int width() const { return static_cast<int>(gamma.size()); }
};

struct DenseLayer {
  Tensor2D w;  // out x in
  std::vector<double> bias;
  std::optional<BatchNormState> batch_norm;         // applied to pre-activations
  std::optional<ActivationDescriptor> activation;   // nullopt on the output layer

  int in_width() const { return w.cols; }
  int out_width() const { return w.rows; }
};

struct Network {
  std::vector<DenseLayer> layers;
  KernelConfig kernel_cfg;

  std::vector<int> arch() const;
  long learnable_param_count() const;
  void validate() const;
};

enum class Mode { Train, Infer };

struct BatchNormCache {
  Tensor2D z_hat;
  std::vector<double> mean, inv_std;
};

/// Activation values plus whatever partials backward needs.
/// dparam panels: Deu -> [da, db, dc, dc1, dc2]; Prelu -> [dalpha];
/// Swish -> [dbeta]; Relu -> none.
struct ActivationGrid {
  Tensor2D y, dy_dt;
  std::vector<Tensor2D> dparam;
};

struct LayerCache {
  Tensor2D input;
  Tensor2D z;
  std::optional<BatchNormCache> bn;
  Tensor2D t_act;
  std::optional<ActivationGrid> act;
};

struct ForwardCache {
  Mode mode = Mode::Infer;
  std::vector<LayerCache> layers;
};

/// Per layer: z = x W^T + bias, optional batch norm, then the activation.
/// The output layer is linear. Train mode updates batch-norm running
/// statistics and (when cache != nullptr) records everything backward needs.
Tensor2D forward(Network& net, const Tensor2D& x, Mode mode, ForwardCache* cache = nullptr);

/// Read-only inference pass; safe to call concurrently.
Tensor2D forward_infer(const Network& net, const Tensor2D& x);

struct LayerGrads {
  Tensor2D dw;
  std::vector<double> dbias, dgamma, dbeta;
  std::vector<double> dact;  // per unit, params_per_unit entries each
};

struct Gradients {
  std::vector<LayerGrads> layers;
};

/// Exact gradients for every weight, bias, batch-norm and activation
/// parameter. Activation coefficients are treated as unit-weight biases;
/// frozen coefficients receive zero gradient.
Gradients backward(const Network& net, const ForwardCache& cache,
                   const Tensor2D& dloss_dlogits);

/// Mean cross-entropy with log-sum-exp stabilization.
/// Gradient is (softmax - one_hot) / batch_size.
std::pair<double, Tensor2D> softmax_cross_entropy(const Tensor2D& logits,
                                                  std::span<const int> labels);

Tensor2D batchnorm_forward(BatchNormState& state, const Tensor2D& z, Mode mode,
                           BatchNormCache* cache = nullptr);

struct BatchNormGrads {
  Tensor2D dz;
  std::vector<double> dgamma, dbeta;
};

BatchNormGrads batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache,
                                  const Tensor2D& dout);

/// Argmax class per row in infer mode; ties break toward the lowest index.
std::vector<int> predict(const Network& net, const Tensor2D& x);

/// Uniform He-style weights in +-sqrt(6/fan_in); DEU coefficients a, b, c
/// drawn uniformly from (epsilon, 1) with c1 = c2 = 0 and then resolved;
/// PReLU alpha = 0.25; Swish beta = 1. Fully determined by the seed.
Network init_network(std::span<const int> widths, ActivationKind kind, std::uint64_t seed,
                     const KernelConfig& cfg, bool batch_norm = true);

}  // namespace deunet
