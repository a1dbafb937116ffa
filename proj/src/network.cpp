#include "deunet/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "deunet/parallel.hpp"
#include "deunet/rng.hpp"

namespace deunet {

namespace {

// z = x * w^T + bias; x: n x in, w: out x in.
Tensor2D affine_forward(const Tensor2D& x, const Tensor2D& w, std::span<const double> bias) {
  Tensor2D z(x.rows, w.rows);
  parallel_for(x.rows, [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      const double* xr = x.row(r);
      double* zr = z.row(r);
      for (int o = 0; o < w.rows; ++o) {
        const double* wo = w.row(o);
        double acc = bias[o];
        for (int i = 0; i < w.cols; ++i) acc += xr[i] * wo[i];
        zr[o] = acc;
      }
    }
  });
  return z;
}

// dx = dz * w; dz: n x out, w: out x in.
Tensor2D matmul_nn(const Tensor2D& dz, const Tensor2D& w) {
  Tensor2D dx(dz.rows, w.cols, 0.0);
  parallel_for(dz.rows, [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      const double* dzr = dz.row(r);
      double* dxr = dx.row(r);
      for (int o = 0; o < w.rows; ++o) {
        const double g = dzr[o];
        if (g == 0.0) continue;
        const double* wo = w.row(o);
        for (int i = 0; i < w.cols; ++i) dxr[i] += g * wo[i];
      }
    }
  });
  return dx;
}

// dw = dz^T * x; dz: n x out, x: n x in -> out x in.
Tensor2D matmul_tn(const Tensor2D& dz, const Tensor2D& x) {
  Tensor2D dw(dz.cols, x.cols, 0.0);
  parallel_for(dz.cols, [&](int begin, int end) {
    for (int o = begin; o < end; ++o) {
      double* dwo = dw.row(o);
      for (int n = 0; n < dz.rows; ++n) {
        const double g = dz(n, o);
        if (g == 0.0) continue;
        const double* xn = x.row(n);
        for (int i = 0; i < x.cols; ++i) dwo[i] += g * xn[i];
      }
    }
  });
  return dw;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_finite_input(double t) {
  if (!std::isfinite(t)) {
    throw std::runtime_error("non-finite-activation: pre-activation is not finite");
  }
}

/// Applies the activation elementwise. Fills grid partials when grid != nullptr.
void apply_activation(const ActivationDescriptor& act, const Tensor2D& t_act,
                      const KernelConfig& kcfg, Tensor2D& y, ActivationGrid* grid) {
  const int rows = t_act.rows, cols = t_act.cols;
  switch (act.kind) {
    case ActivationKind::Deu: {
      if (grid != nullptr) {
        EvalGrid g = eval_batch(act.deu, t_act, kcfg);
        y = g.y;
        grid->y = std::move(g.y);
        grid->dy_dt = std::move(g.dy_dt);
        grid->dparam.clear();
        grid->dparam.push_back(std::move(g.dy_da));
        grid->dparam.push_back(std::move(g.dy_db));
        grid->dparam.push_back(std::move(g.dy_dc));
        grid->dparam.push_back(std::move(g.dy_dc1));
        grid->dparam.push_back(std::move(g.dy_dc2));
        y = grid->y;
      } else {
        y = Tensor2D(rows, cols);
        eval_batch_values(act.deu, t_act, kcfg, y);
      }
      return;
    }
    case ActivationKind::Relu: {
      y = Tensor2D(rows, cols);
      if (grid != nullptr) grid->dy_dt = Tensor2D(rows, cols);
      parallel_for(rows, [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
          for (int j = 0; j < cols; ++j) {
            const double t = t_act(r, j);
            check_finite_input(t);
            y(r, j) = t > 0.0 ? t : 0.0;
            if (grid != nullptr) grid->dy_dt(r, j) = t > 0.0 ? 1.0 : 0.0;
          }
        }
      });
      break;
    }
    case ActivationKind::Prelu: {
      y = Tensor2D(rows, cols);
      if (grid != nullptr) {
        grid->dy_dt = Tensor2D(rows, cols);
        grid->dparam.assign(1, Tensor2D(rows, cols));
      }
      parallel_for(rows, [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
          for (int j = 0; j < cols; ++j) {
            const double t = t_act(r, j);
            check_finite_input(t);
            const double alpha = act.prelu_alpha[j];
            y(r, j) = t > 0.0 ? t : alpha * t;
            if (grid != nullptr) {
              grid->dy_dt(r, j) = t > 0.0 ? 1.0 : alpha;
              grid->dparam[0](r, j) = t > 0.0 ? 0.0 : t;
            }
          }
        }
      });
      break;
    }
    case ActivationKind::Swish: {
      y = Tensor2D(rows, cols);
      if (grid != nullptr) {
        grid->dy_dt = Tensor2D(rows, cols);
        grid->dparam.assign(1, Tensor2D(rows, cols));
      }
      parallel_for(rows, [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
          for (int j = 0; j < cols; ++j) {
            const double t = t_act(r, j);
            check_finite_input(t);
            const double beta = act.swish_beta[j];
            const double s = sigmoid(beta * t);
            y(r, j) = t * s;
            if (grid != nullptr) {
              grid->dy_dt(r, j) = s + beta * t * s * (1.0 - s);
              grid->dparam[0](r, j) = t * t * s * (1.0 - s);
            }
          }
        }
      });
      break;
    }
  }
  if (grid != nullptr) grid->y = y;
}

}  // namespace

const char* to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Deu:   return "deu";
    case ActivationKind::Relu:  return "relu";
    case ActivationKind::Prelu: return "prelu";
    case ActivationKind::Swish: return "swish";
  }
  return "?";
}

std::optional<ActivationKind> activation_kind_from_string(std::string_view s) {
  if (s == "deu") return ActivationKind::Deu;
  if (s == "relu") return ActivationKind::Relu;
  if (s == "prelu") return ActivationKind::Prelu;
  if (s == "swish") return ActivationKind::Swish;
  return std::nullopt;
}

int ActivationDescriptor::params_per_unit() const {
  switch (kind) {
    case ActivationKind::Deu:   return 5;
    case ActivationKind::Relu:  return 0;
    case ActivationKind::Prelu: return 1;
    case ActivationKind::Swish: return 1;
  }
  return 0;
}

int ActivationDescriptor::width() const {
  switch (kind) {
    case ActivationKind::Deu:   return static_cast<int>(deu.size());
    case ActivationKind::Relu:  return -1;  // width-free
    case ActivationKind::Prelu: return static_cast<int>(prelu_alpha.size());
    case ActivationKind::Swish: return static_cast<int>(swish_beta.size());
  }
  return -1;
}

void ActivationDescriptor::validate(int layer_width) const {
  const auto expect_empty = [&](bool deu_e, bool prelu_e, bool swish_e) {
    if (deu_e != deu.empty() || prelu_e != prelu_alpha.empty() ||
        swish_e != swish_beta.empty()) {
      throw std::invalid_argument("activation-descriptor: fields do not match kind");
    }
  };
  switch (kind) {
    case ActivationKind::Deu:   expect_empty(false, true, true); break;
    case ActivationKind::Relu:  expect_empty(true, true, true); break;
    case ActivationKind::Prelu: expect_empty(true, false, true); break;
    case ActivationKind::Swish: expect_empty(true, true, false); break;
  }
  const int w = width();
  if (w >= 0 && w != layer_width) {
    throw std::invalid_argument("activation-descriptor: unit count " + std::to_string(w) +
                                " does not match layer width " + std::to_string(layer_width));
  }
}

BatchNormState BatchNormState::identity(int width) {
  BatchNormState s;
  s.gamma.assign(width, 1.0);
  s.beta.assign(width, 0.0);
  s.running_mean.assign(width, 0.0);
  s.running_var.assign(width, 1.0);
  return s;
}

std::vector<int> Network::arch() const {
  std::vector<int> widths;
  if (layers.empty()) return widths;
  widths.push_back(layers.front().in_width());
  for (const auto& l : layers) widths.push_back(l.out_width());
  return widths;
}

long Network::learnable_param_count() const {
  long n = 0;
  for (const auto& l : layers) {
    n += static_cast<long>(l.w.size()) + static_cast<long>(l.bias.size());
    if (l.batch_norm) n += 2L * l.batch_norm->width();
    if (l.activation) n += static_cast<long>(l.activation->params_per_unit()) * l.out_width();
  }
  return n;
}

void Network::validate() const {
  kernel_cfg.validate();
  if (layers.empty()) throw std::invalid_argument("network: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.w.rows <= 0 || l.w.cols <= 0) throw std::invalid_argument("network: empty layer");
    if (static_cast<int>(l.bias.size()) != l.out_width()) {
      throw std::invalid_argument("network: bias width mismatch");
    }
    if (i + 1 < layers.size() && layers[i + 1].in_width() != l.out_width()) {
      throw std::invalid_argument("network: consecutive layer width mismatch");
    }
    if (l.batch_norm && l.batch_norm->width() != l.out_width()) {
      throw std::invalid_argument("network: batch-norm width mismatch");
    }
    if (l.activation) l.activation->validate(l.out_width());
  }
}

Tensor2D batchnorm_forward(BatchNormState& state, const Tensor2D& z, Mode mode,
                           BatchNormCache* cache) {
  const int n = z.rows, width = z.cols;
  if (width != state.width()) throw std::invalid_argument("batch-norm: width mismatch");
  Tensor2D out(n, width);

  if (mode == Mode::Train) {
    if (n < 2) {
      throw std::invalid_argument(
          "bn-batch-size: training batch must have at least 2 samples (variance undefined)");
    }
    std::vector<double> mean(width, 0.0), var(width, 0.0), inv_std(width, 0.0);
    for (int j = 0; j < width; ++j) {
      double m = 0.0;
      for (int r = 0; r < n; ++r) m += z(r, j);
      m /= n;
      double v = 0.0;
      for (int r = 0; r < n; ++r) {
        const double d = z(r, j) - m;
        v += d * d;
      }
      v /= n;
      mean[j] = m;
      var[j] = v;
      inv_std[j] = 1.0 / std::sqrt(v + state.eps);
      state.running_mean[j] = (1.0 - state.momentum) * state.running_mean[j] + state.momentum * m;
      state.running_var[j] = (1.0 - state.momentum) * state.running_var[j] + state.momentum * v;
    }
    Tensor2D z_hat(n, width);
    for (int r = 0; r < n; ++r) {
      for (int j = 0; j < width; ++j) {
        const double zh = (z(r, j) - mean[j]) * inv_std[j];
        z_hat(r, j) = zh;
        out(r, j) = state.gamma[j] * zh + state.beta[j];
      }
    }
    if (cache != nullptr) {
      cache->z_hat = std::move(z_hat);
      cache->mean = std::move(mean);
      cache->inv_std = std::move(inv_std);
    }
    return out;
  }

  for (int j = 0; j < width; ++j) {
    const double inv = 1.0 / std::sqrt(state.running_var[j] + state.eps);
    for (int r = 0; r < n; ++r) {
      out(r, j) = state.gamma[j] * ((z(r, j) - state.running_mean[j]) * inv) + state.beta[j];
    }
  }
  return out;
}

BatchNormGrads batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache,
                                  const Tensor2D& dout) {
  const int n = dout.rows, width = dout.cols;
  if (width != state.width() || !cache.z_hat.same_shape(dout)) {
    throw std::invalid_argument("batch-norm-backward: cache/gradient shape mismatch");
  }
  BatchNormGrads g;
  g.dz = Tensor2D(n, width);
  g.dgamma.assign(width, 0.0);
  g.dbeta.assign(width, 0.0);
  for (int j = 0; j < width; ++j) {
    double sum_d = 0.0, sum_dzh = 0.0;
    for (int r = 0; r < n; ++r) {
      sum_d += dout(r, j);
      sum_dzh += dout(r, j) * cache.z_hat(r, j);
    }
    g.dbeta[j] = sum_d;
    g.dgamma[j] = sum_dzh;
    const double m1 = sum_d / n;
    const double m2 = sum_dzh / n;
    const double k = state.gamma[j] * cache.inv_std[j];
    for (int r = 0; r < n; ++r) {
      g.dz(r, j) = k * (dout(r, j) - m1 - cache.z_hat(r, j) * m2);
    }
  }
  return g;
}

Tensor2D forward(Network& net, const Tensor2D& x, Mode mode, ForwardCache* cache) {
  net.validate();
  if (x.cols != net.layers.front().in_width()) {
    throw std::invalid_argument("forward: input width " + std::to_string(x.cols) +
                                " does not match network input " +
                                std::to_string(net.layers.front().in_width()));
  }
  if (cache != nullptr) {
    cache->mode = mode;
    cache->layers.clear();
    cache->layers.resize(net.layers.size());
  }

  Tensor2D cur = x;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& layer = net.layers[li];
    LayerCache* lc = cache != nullptr ? &cache->layers[li] : nullptr;
    if (lc != nullptr) lc->input = cur;

    Tensor2D z = affine_forward(cur, layer.w, layer.bias);
    Tensor2D t_act;
    if (layer.batch_norm) {
      BatchNormCache bn_cache;
      t_act = batchnorm_forward(*layer.batch_norm, z, mode,
                                lc != nullptr ? &bn_cache : nullptr);
      if (lc != nullptr) lc->bn = std::move(bn_cache);
    } else {
      t_act = z;
    }
    if (lc != nullptr) {
      lc->z = std::move(z);
      lc->t_act = t_act;
    }

    if (layer.activation) {
      Tensor2D y;
      if (lc != nullptr && mode == Mode::Train) {
        ActivationGrid grid;
        apply_activation(*layer.activation, t_act, net.kernel_cfg, y, &grid);
        lc->act = std::move(grid);
      } else {
        apply_activation(*layer.activation, t_act, net.kernel_cfg, y, nullptr);
      }
      cur = std::move(y);
    } else {
      cur = std::move(t_act);
    }
  }
  return cur;
}

Tensor2D forward_infer(const Network& net, const Tensor2D& x) {
  // Infer mode touches no mutable state, so the cast is safe.
  return forward(const_cast<Network&>(net), x, Mode::Infer, nullptr);
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Tensor2D& dloss_dlogits) {
  if (cache.mode != Mode::Train) {
    throw std::invalid_argument("backward: cache was not produced by a train-mode forward");
  }
  if (cache.layers.size() != net.layers.size()) {
    throw std::invalid_argument("backward: stale cache (layer count mismatch)");
  }
  const auto& last = net.layers.back();
  if (dloss_dlogits.cols != last.out_width() ||
      dloss_dlogits.rows != cache.layers.back().t_act.rows) {
    throw std::invalid_argument("backward: dloss shape does not match cached logits");
  }

  Gradients grads;
  grads.layers.resize(net.layers.size());

  Tensor2D dcur = dloss_dlogits;
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const DenseLayer& layer = net.layers[li];
    const LayerCache& lc = cache.layers[li];
    LayerGrads& lg = grads.layers[li];
    if (!lc.t_act.same_shape(dcur)) {
      throw std::invalid_argument("backward: stale cache (activation shape mismatch)");
    }

    Tensor2D d_t;
    if (layer.activation) {
      if (!lc.act) throw std::invalid_argument("backward: cache is missing activation grid");
      const ActivationGrid& grid = *lc.act;
      d_t = Tensor2D(dcur.rows, dcur.cols);
      for (int r = 0; r < dcur.rows; ++r) {
        for (int j = 0; j < dcur.cols; ++j) {
          d_t(r, j) = dcur(r, j) * grid.dy_dt(r, j);
        }
      }
      const int ppu = layer.activation->params_per_unit();
      lg.dact.assign(static_cast<std::size_t>(ppu) * layer.out_width(), 0.0);
      for (int k = 0; k < ppu; ++k) {
        const Tensor2D& panel = grid.dparam[k];
        for (int j = 0; j < dcur.cols; ++j) {
          double acc = 0.0;
          for (int r = 0; r < dcur.rows; ++r) acc += dcur(r, j) * panel(r, j);
          lg.dact[static_cast<std::size_t>(j) * ppu + k] = acc;
        }
      }
    } else {
      d_t = dcur;
    }

    Tensor2D dz;
    if (layer.batch_norm) {
      if (!lc.bn) throw std::invalid_argument("backward: cache is missing batch-norm state");
      BatchNormGrads bn = batchnorm_backward(*layer.batch_norm, *lc.bn, d_t);
      dz = std::move(bn.dz);
      lg.dgamma = std::move(bn.dgamma);
      lg.dbeta = std::move(bn.dbeta);
    } else {
      dz = std::move(d_t);
    }

    lg.dw = matmul_tn(dz, lc.input);
    lg.dbias.assign(layer.out_width(), 0.0);
    for (int r = 0; r < dz.rows; ++r) {
      for (int o = 0; o < dz.cols; ++o) lg.dbias[o] += dz(r, o);
    }
    if (li > 0) dcur = matmul_nn(dz, layer.w);
  }
  return grads;
}

std::pair<double, Tensor2D> softmax_cross_entropy(const Tensor2D& logits,
                                                  std::span<const int> labels) {
  const int n = logits.rows, k = logits.cols;
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("cross-entropy: one label per row required");
  }
  Tensor2D dlogits(n, k);
  double loss = 0.0;
  for (int r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || label >= k) {
      throw std::invalid_argument("cross-entropy: label " + std::to_string(label) +
                                  " out of range [0, " + std::to_string(k) + ")");
    }
    const double* row = logits.row(r);
    double m = row[0];
    for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
    if (!std::isfinite(m)) {
      throw std::runtime_error("non-finite-loss: logits are not finite");
    }
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(row[j] - m);
    const double lse = m + std::log(sum);
    loss += lse - row[label];
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - m) / sum;
      dlogits(r, j) = (p - (j == label ? 1.0 : 0.0)) / n;
    }
  }
  loss /= n;
  if (!std::isfinite(loss)) throw std::runtime_error("non-finite-loss: loss is not finite");
  return {loss, std::move(dlogits)};
}

std::vector<int> predict(const Network& net, const Tensor2D& x) {
  const Tensor2D logits = forward_infer(net, x);
  std::vector<int> out(logits.rows);
  for (int r = 0; r < logits.rows; ++r) {
    const double* row = logits.row(r);
    int best = 0;
    for (int j = 1; j < logits.cols; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[r] = best;
  }
  return out;
}

Network init_network(std::span<const int> widths, ActivationKind kind, std::uint64_t seed,
                     const KernelConfig& cfg, bool batch_norm) {
  cfg.validate();
  if (widths.size() < 3) {
    throw std::invalid_argument("init-network: need at least one hidden layer");
  }
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("init-network: widths must be positive");
  }

  Rng rng(seed);
  Network net;
  net.kernel_cfg = cfg;
  const double eps_open = std::nextafter(cfg.epsilon, 1.0);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    DenseLayer layer;
    layer.w = Tensor2D(out, in);
    const double bound = std::sqrt(6.0 / in);
    for (int o = 0; o < out; ++o) {
      for (int i = 0; i < in; ++i) layer.w(o, i) = rng.uniform(-bound, bound);
    }
    layer.bias.assign(out, 0.0);

    const bool hidden = l + 2 < widths.size();
    if (hidden) {
      if (batch_norm) layer.batch_norm = BatchNormState::identity(out);
      ActivationDescriptor act;
      act.kind = kind;
      switch (kind) {
        case ActivationKind::Deu: {
          act.deu.reserve(out);
          for (int j = 0; j < out; ++j) {
            DeuParams p;
            p.a = rng.uniform(eps_open, 1.0);
            p.b = rng.uniform(eps_open, 1.0);
            p.c = rng.uniform(eps_open, 1.0);
            p.c1 = 0.0;
            p.c2 = 0.0;
            auto [rp, id] = resolve_subspace(p, cfg);
            act.deu.push_back(DeuNeuron{rp, id});
          }
          break;
        }
        case ActivationKind::Prelu:
          act.prelu_alpha.assign(out, 0.25);
          break;
        case ActivationKind::Swish:
          act.swish_beta.assign(out, 1.0);
          break;
        case ActivationKind::Relu:
          break;
      }
      layer.activation = std::move(act);
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

}  // namespace deunet
