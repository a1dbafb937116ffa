#include "deunet/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deunet {

namespace {

void check_finite(std::span<const double> grads, const std::string& where) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::invalid_argument("non-finite-gradient: " + where + "[" + std::to_string(i) +
                                  "]");
    }
  }
}

/// Gathers the five coefficients of each DEU unit into a flat buffer
/// ([a, b, c, c1, c2] per unit) and scatters updates back.
std::vector<double> gather_act_params(const ActivationDescriptor& act) {
  std::vector<double> out;
  switch (act.kind) {
    case ActivationKind::Deu:
      out.reserve(act.deu.size() * 5);
      for (const auto& u : act.deu) {
        out.push_back(u.params.a);
        out.push_back(u.params.b);
        out.push_back(u.params.c);
        out.push_back(u.params.c1);
        out.push_back(u.params.c2);
      }
      break;
    case ActivationKind::Prelu:
      out = act.prelu_alpha;
      break;
    case ActivationKind::Swish:
      out = act.swish_beta;
      break;
    case ActivationKind::Relu:
      break;
  }
  return out;
}

void scatter_act_params(ActivationDescriptor& act, std::span<const double> flat) {
  switch (act.kind) {
    case ActivationKind::Deu:
      for (std::size_t j = 0; j < act.deu.size(); ++j) {
        DeuParams& p = act.deu[j].params;
        p.a = flat[j * 5 + 0];
        p.b = flat[j * 5 + 1];
        p.c = flat[j * 5 + 2];
        p.c1 = flat[j * 5 + 3];
        p.c2 = flat[j * 5 + 4];
      }
      break;
    case ActivationKind::Prelu:
      act.prelu_alpha.assign(flat.begin(), flat.end());
      break;
    case ActivationKind::Swish:
      act.swish_beta.assign(flat.begin(), flat.end());
      break;
    case ActivationKind::Relu:
      break;
  }
}

std::vector<std::uint8_t> frozen_mask(const ActivationDescriptor& act) {
  std::vector<std::uint8_t> mask;
  if (act.kind == ActivationKind::Deu) {
    mask.reserve(act.deu.size() * 5);
    for (const auto& u : act.deu) {
      mask.push_back(u.params.frozen_a ? 1 : 0);
      mask.push_back(u.params.frozen_b ? 1 : 0);
      mask.push_back(u.params.frozen_c ? 1 : 0);
      mask.push_back(0);
      mask.push_back(0);
    }
  }
  return mask;
}

void ensure_slot(AdamState::Slot& slot, std::size_t n) {
  if (slot.m.size() != n) {
    slot.m.assign(n, 0.0);
    slot.v.assign(n, 0.0);
  }
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(lr_weights > 0.0)) throw std::invalid_argument("optimizer: lr_weights must be positive");
  if (!(lr_deu_scale >= 0.0)) {
    throw std::invalid_argument("optimizer: lr_deu_scale must be non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optimizer: betas must be in [0, 1)");
  }
  if (!(eps_adam > 0.0)) throw std::invalid_argument("optimizer: eps_adam must be positive");
  if (clip_deu_grad_norm && !(*clip_deu_grad_norm > 0.0)) {
    throw std::invalid_argument("optimizer: clip_deu_grad_norm must be positive when set");
  }
}

void AdamState::init_for(const Network& net) {
  const std::size_t n = net.layers.size();
  w.assign(n, {});
  bias.assign(n, {});
  gamma.assign(n, {});
  beta.assign(n, {});
  act.assign(n, {});
  step_weights = 0;
  step_activation = 0;
  initialized = true;
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<const std::uint8_t> frozen, AdamState::Slot& slot, long step,
                 double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam-update: parameter/gradient size mismatch");
  }
  ensure_slot(slot, params.size());
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!frozen.empty() && frozen[i]) continue;
    const double g = grads[i];
    slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g;
    slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g * g;
    const double mhat = slot.m[i] / bc1;
    const double vhat = slot.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void adam_step(Network& net, const Gradients& grads, AdamState& state,
               const OptimizerConfig& cfg, ParamGroup group) {
  cfg.validate();
  if (grads.layers.size() != net.layers.size()) {
    throw std::invalid_argument("adam-step: gradient/network layer count mismatch");
  }
  if (!state.initialized) state.init_for(net);

  if (group == ParamGroup::Weights) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      const LayerGrads& lg = grads.layers[li];
      check_finite(lg.dw.data, "layer " + std::to_string(li) + " w");
      check_finite(lg.dbias, "layer " + std::to_string(li) + " bias");
      check_finite(lg.dgamma, "layer " + std::to_string(li) + " gamma");
      check_finite(lg.dbeta, "layer " + std::to_string(li) + " beta");
    }
    const long step = ++state.step_weights;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      DenseLayer& layer = net.layers[li];
      const LayerGrads& lg = grads.layers[li];
      adam_update(layer.w.data, lg.dw.data, {}, state.w[li], step, cfg.lr_weights,
                  cfg.beta1, cfg.beta2, cfg.eps_adam);
      adam_update(layer.bias, lg.dbias, {}, state.bias[li], step, cfg.lr_weights, cfg.beta1,
                  cfg.beta2, cfg.eps_adam);
      if (layer.batch_norm) {
        adam_update(layer.batch_norm->gamma, lg.dgamma, {}, state.gamma[li], step,
                    cfg.lr_weights, cfg.beta1, cfg.beta2, cfg.eps_adam);
        adam_update(layer.batch_norm->beta, lg.dbeta, {}, state.beta[li], step,
                    cfg.lr_weights, cfg.beta1, cfg.beta2, cfg.eps_adam);
      }
    }
    return;
  }

  // Activation group.
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    check_finite(grads.layers[li].dact, "layer " + std::to_string(li) + " act");
  }

  double scale = 1.0;
  if (cfg.clip_deu_grad_norm) {
    double sq = 0.0;
    for (const auto& lg : grads.layers) {
      for (double g : lg.dact) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > *cfg.clip_deu_grad_norm) scale = *cfg.clip_deu_grad_norm / norm;
  }

  const long step = ++state.step_activation;
  const double lr = cfg.lr_weights * cfg.lr_deu_scale;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& layer = net.layers[li];
    if (!layer.activation || grads.layers[li].dact.empty()) continue;
    ActivationDescriptor& act = *layer.activation;

    std::vector<double> params = gather_act_params(act);
    std::vector<double> g = grads.layers[li].dact;
    if (params.size() != g.size()) {
      throw std::invalid_argument("adam-step: activation gradient size mismatch");
    }
    if (scale != 1.0) {
      for (double& x : g) x *= scale;
    }
    const std::vector<std::uint8_t> mask = frozen_mask(act);
    adam_update(params, g, mask, state.act[li], step, lr, cfg.beta1, cfg.beta2,
                cfg.eps_adam);
    scatter_act_params(act, params);
  }
  resolve_all(net, net.kernel_cfg);
}

Network& resolve_all(Network& net, const KernelConfig& cfg) {
  for (auto& layer : net.layers) {
    if (!layer.activation || layer.activation->kind != ActivationKind::Deu) continue;
    for (auto& unit : layer.activation->deu) {
      auto [p, id] = resolve_subspace(unit.params, cfg);
      unit.params = p;
      unit.id = id;
    }
  }
  return net;
}

std::array<long, 7> subspace_census(const Network& net) {
  std::array<long, 7> counts{};
  for (const auto& layer : net.layers) {
    if (!layer.activation || layer.activation->kind != ActivationKind::Deu) continue;
    for (const auto& unit : layer.activation->deu) {
      counts[static_cast<int>(unit.id.structural)]++;
    }
  }
  return counts;
}

}  // namespace deunet
