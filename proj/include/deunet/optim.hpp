#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "deunet/network.hpp"

namespace deunet {

struct OptimizerConfig {
  double lr_weights = 1e-3;
  double lr_deu_scale = 0.1;  // activation LR = lr_weights * lr_deu_scale; 0 freezes the group
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::optional<double> clip_deu_grad_norm = 5.0;  // activation group only

  void validate() const;
};

enum class ParamGroup { Weights, Activation };

/// Per-tensor first/second moment buffers plus one step counter per group.
struct AdamState {
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Slot> w, bias, gamma, beta, act;  // one entry per layer
  long step_weights = 0;
  long step_activation = 0;
  bool initialized = false;

  void init_for(const Network& net);
};

/// Bias-corrected Adam over one parameter group. Frozen entries keep their
/// value and moments. For the activation group, the concatenated gradient
/// vector is rescaled to clip_deu_grad_norm when it exceeds it, and every DEU
/// unit is re-resolved afterwards so no unfrozen coefficient is left with
/// magnitude in (0, epsilon). Non-finite gradients reject the step before any
/// state changes.
void adam_step(Network& net, const Gradients& grads, AdamState& state,
               const OptimizerConfig& cfg, ParamGroup group);

/// Single-slot Adam update used by adam_step; exposed for direct testing.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<const std::uint8_t> frozen, AdamState::Slot& slot, long step,
                 double lr, double beta1, double beta2, double eps);

/// Applies resolve_subspace to every DEU unit in the network. Idempotent.
Network& resolve_all(Network& net, const KernelConfig& cfg);

/// Count of DEU units per structural subspace, indexed by Structural.
std::array<long, 7> subspace_census(const Network& net);

}  // namespace deunet
