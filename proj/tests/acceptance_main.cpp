// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria needing the MNIST/Fashion-MNIST IDX files skip honestly
// when the files are absent (no dataset downloading here); point
// DEUNET_MNIST_DIR / DEUNET_FASHION_DIR at directories holding the standard
// train/t10k files (raw or .gz) to enable them.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "deunet/checkpoint.hpp"
#include "deunet/data_io.hpp"
#include "deunet/network.hpp"
#include "deunet/optim.hpp"
#include "deunet/rng.hpp"
#include "deunet/train.hpp"
#include "deunet/verify.hpp"

using namespace deunet;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

Outcome pass(std::string detail) { return {Status::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Status::Fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Status::Skip, std::move(detail)}; }

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

const KernelConfig kDefaults{};

// Clamps parked far outside the probed region: finite differences are only a
// valid reference where the surface is smooth (see the gradient-check notes
// in the unit tests).
const KernelConfig kGradCheckCfg{1e-3, 60.0, 1e9};

// ---------------------------------------------------------------------------
// Dataset discovery
// ---------------------------------------------------------------------------

std::optional<std::string> find_file(const fs::path& dir, const std::string& stem) {
  for (const auto& name : {stem, stem + ".gz"}) {
    if (fs::exists(dir / name)) return (dir / name).string();
  }
  return std::nullopt;
}

struct IdxPair {
  std::string train_images, train_labels, test_images, test_labels;
};

std::optional<IdxPair> find_idx_dataset(const char* env_var, const std::string& fallback) {
  std::vector<fs::path> candidates;
  if (const char* env = std::getenv(env_var); env != nullptr && *env != '\0') {
    candidates.emplace_back(env);
  }
  for (const auto& root : {".", "..", "../..", "../../.."}) {
    candidates.emplace_back(fs::path(root) / "data" / fallback);
  }
  for (const auto& dir : candidates) {
    const auto ti = find_file(dir, "train-images-idx3-ubyte");
    const auto tl = find_file(dir, "train-labels-idx1-ubyte");
    const auto ei = find_file(dir, "t10k-images-idx3-ubyte");
    const auto el = find_file(dir, "t10k-labels-idx1-ubyte");
    if (ti && tl && ei && el) return IdxPair{*ti, *tl, *ei, *el};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

verify::Report run_kernel_report() {
  verify::VerifyOptions opts;
  opts.draws = 1000;
  opts.grad_draws = 500;
  opts.seed = 42;
  return verify::run_verification(opts);
}

struct MnistResults {
  double deu_acc = 0.0, relu_acc = 0.0, fashion_acc = 0.0, seconds = 0.0;
  Network deu_net;
  bool ran = false;
};

MnistResults g_mnist;
verify::Report g_report;

TrainConfig mnist_config(ActivationKind kind) {
  TrainConfig cfg;
  cfg.arch = {784, 256, 10};
  cfg.kind = kind;
  cfg.epochs = 10;
  cfg.batch_size = 128;
  cfg.optim.lr_weights = 1e-3;
  cfg.optim.lr_deu_scale = 0.1;
  cfg.kernel = kDefaults;
  cfg.batch_norm = true;
  cfg.seed = 42;
  cfg.verbose = true;
  return cfg;
}

TrainConfig spirals_config() {
  TrainConfig cfg;
  cfg.arch = {2, 32, 32, 2};
  cfg.kind = ActivationKind::Deu;
  cfg.epochs = 300;
  cfg.batch_size = 64;
  cfg.optim.lr_weights = 1e-3;
  cfg.optim.lr_deu_scale = 0.1;
  cfg.kernel.epsilon = 1e-3;
  cfg.kernel.exp_arg_clamp = 8.0;  // keeps unit amplitudes classifier-friendly
  cfg.kernel.output_clamp = 50.0;
  cfg.batch_norm = true;
  return cfg;
}

DeuNeuron pinned_relu_unit() {
  DeuParams p;
  p.b = 1.0;
  auto [rp, id] = resolve_subspace(p, kDefaults);
  return DeuNeuron{rp, id};
}

// Five-point network gradient check (see unit tests for the FD-safety rules).
struct NetGradCheck {
  double worst = 0.0;
  bool safe_seed_found = false;
};

double net_loss(Network net, const Tensor2D& x, const std::vector<int>& labels) {
  ForwardCache cache;
  const Tensor2D logits = forward(net, x, Mode::Train, &cache);
  return softmax_cross_entropy(logits, labels).first;
}

double deu_unit_rate(const DeuParams& p, const SubspaceId& id) {
  switch (id.structural) {
    case Structural::Full: {
      if (id.regime == Regime::Overdamped) {
        const double sq = std::sqrt(p.b * p.b - 4.0 * p.a * p.c);
        return std::max(std::abs((-p.b + sq) / (2.0 * p.a)),
                        std::abs((-p.b - sq) / (2.0 * p.a)));
      }
      return std::abs(p.b / (2.0 * p.a));
    }
    case Structural::NoDamping:
      return p.a * p.c < 0.0 ? std::sqrt(-(p.c / p.a)) : 0.0;
    case Structural::NoStiffness: return std::abs(p.b / p.a);
    case Structural::NoMass:      return std::abs(p.c / p.b);
    default:                      return 0.0;
  }
}

bool fd_safe_net(Network net, const Tensor2D& x, double h) {
  ForwardCache cache;
  forward(net, x, Mode::Train, &cache);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerCache& lc = cache.layers[li];
    for (double t : lc.t_act.data) {
      if (std::abs(t) < 50.0 * h) return false;
    }
    const auto& act = net.layers[li].activation;
    if (!act || act->kind != ActivationKind::Deu) continue;
    for (double y : lc.act->y.data) {
      if (std::abs(y) > 0.5 * net.kernel_cfg.output_clamp) return false;
    }
    for (int j = 0; j < net.layers[li].out_width(); ++j) {
      double tmax = 0.0;
      for (int r = 0; r < lc.t_act.rows; ++r) tmax = std::max(tmax, std::abs(lc.t_act(r, j)));
      const DeuParams& p = act->deu[j].params;
      if (deu_unit_rate(p, act->deu[j].id) * (tmax + 1.0) > 20.0) return false;
      for (double coeff : {p.a, p.b, p.c}) {
        if (coeff != 0.0 && std::abs(coeff) < net.kernel_cfg.epsilon + 1e-3) return false;
      }
      if (act->deu[j].id.structural == Structural::Full) {
        const double disc = p.b * p.b - 4.0 * p.a * p.c;
        if (std::abs(std::abs(disc) - net.kernel_cfg.epsilon) < 1e-3) return false;
      }
    }
  }
  return true;
}

NetGradCheck network_gradient_check() {
  Rng rng(88);
  Tensor2D x(16, 2);
  std::vector<int> labels(16);
  for (auto& v : x.data) v = rng.uniform(-1.5, 1.5);
  for (auto& l : labels) l = static_cast<int>(rng.next_u64() % 2);
  const double h = 1e-5;

  NetGradCheck result;
  Network net;
  for (std::uint64_t seed = 200; seed < 264; ++seed) {
    net = init_network(std::vector<int>{2, 8, 8, 2}, ActivationKind::Deu, seed, kGradCheckCfg);
    if (fd_safe_net(net, x, h)) {
      result.safe_seed_found = true;
      break;
    }
  }
  if (!result.safe_seed_found) return result;

  ForwardCache cache;
  const Tensor2D logits = forward(net, x, Mode::Train, &cache);
  const auto [loss, dlogits] = softmax_cross_entropy(logits, labels);
  (void)loss;
  const Gradients grads = backward(net, cache, dlogits);

  auto fd = [&](auto&& bump) {
    auto at = [&](double d) {
      Network copy = net;
      bump(copy, d);
      return net_loss(std::move(copy), x, labels);
    };
    return (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
  };
  auto consider = [&](double analytic, double numeric) {
    const double err =
        std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-3});
    result.worst = std::max(result.worst, err);
  };

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const DenseLayer& layer = net.layers[li];
    const LayerGrads& lg = grads.layers[li];
    for (std::size_t k = 0; k < layer.w.data.size(); ++k) {
      consider(lg.dw.data[k], fd([&](Network& n, double d) { n.layers[li].w.data[k] += d; }));
    }
    for (std::size_t k = 0; k < layer.bias.size(); ++k) {
      consider(lg.dbias[k], fd([&](Network& n, double d) { n.layers[li].bias[k] += d; }));
    }
    if (layer.batch_norm) {
      for (std::size_t k = 0; k < layer.batch_norm->gamma.size(); ++k) {
        consider(lg.dgamma[k],
                 fd([&](Network& n, double d) { n.layers[li].batch_norm->gamma[k] += d; }));
        consider(lg.dbeta[k],
                 fd([&](Network& n, double d) { n.layers[li].batch_norm->beta[k] += d; }));
      }
    }
    if (!layer.activation) continue;
    for (int j = 0; j < layer.out_width(); ++j) {
      for (int f = 0; f < 5; ++f) {
        consider(lg.dact[static_cast<std::size_t>(j) * 5 + f],
                 fd([&](Network& n, double d) {
                   DeuParams& p = n.layers[li].activation->deu[j].params;
                   if (f == 0) p.a += d;
                   if (f == 1) p.b += d;
                   if (f == 2) p.c += d;
                   if (f == 3) p.c1 += d;
                   if (f == 4) p.c2 += d;
                 }));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome criterion_kernel_oracle() {
  g_report = run_kernel_report();
  double worst_res = 0.0, worst_rk4 = 0.0;
  for (const auto& cr : g_report.classes) {
    worst_res = std::max(worst_res, cr.max_residual);
    worst_rk4 = std::max(worst_rk4, cr.max_rk4_err);
  }
  const bool ok = worst_res < 1e-3 && worst_rk4 < 1e-5 && g_report.seconds < 120.0;
  const std::string detail = "1000 draws, all 7 subspaces + damping regimes; worst residual " +
                             fmt(worst_res, 2) + " (<1e-3), worst rk4 " + fmt(worst_rk4, 2) +
                             " (<1e-5), " + fmt(g_report.seconds, 3) + "s (<120s)";
  return ok ? pass(detail) : fail(detail);
}

Outcome criterion_gradients() {
  double worst_kernel = 0.0;
  for (const auto& cr : g_report.classes) worst_kernel = std::max(worst_kernel, cr.max_grad_err);
  const NetGradCheck net_check = network_gradient_check();
  if (!net_check.safe_seed_found) return fail("no finite-difference-safe init found");
  const bool ok = worst_kernel < 1e-4 && net_check.worst < 1e-4;
  const std::string detail = "500 kernel draws worst rel err " + fmt(worst_kernel, 2) +
                             ", 2-8-8-2 net worst rel err " + fmt(net_check.worst, 2) +
                             " (<1e-4)";
  return ok ? pass(detail) : fail(detail);
}

Outcome criterion_paper_formulas() {
  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    // b = 0, a*c > 0: sin/cos solution with the forced (1 - cos)/c part.
    DeuParams p;
    p.a = rng.uniform(0.5, 2.0);
    p.c = rng.uniform(0.5, 2.0);
    p.c1 = rng.uniform(-2.0, 2.0);
    p.c2 = rng.uniform(-2.0, 2.0);
    auto [rp, id] = resolve_subspace(p, kDefaults);
    const double t = rng.uniform(-3.0, 3.0);
    const double w = std::sqrt(rp.c) * t / std::sqrt(rp.a);
    const double u = t > 0.0 ? 1.0 : 0.0;
    const double reference =
        std::sin(w) * rp.c2 + std::cos(w) * rp.c1 - (u / rp.c) * (std::cos(w) - 1.0);
    worst = std::max(worst, std::abs(eval(rp, id, t, kDefaults).y - reference));
  }
  for (int i = 0; i < 100; ++i) {
    // b = c = 0: half-quadratic with the affine homogeneous part.
    DeuParams p;
    p.a = rng.uniform(0.5, 2.0);
    p.c1 = rng.uniform(-2.0, 2.0);
    p.c2 = rng.uniform(-2.0, 2.0);
    auto [rp, id] = resolve_subspace(p, kDefaults);
    const double t = rng.uniform(-3.0, 3.0);
    const double u = t > 0.0 ? 1.0 : 0.0;
    const double reference = 0.5 * (u * t * t) / rp.a + rp.c1 * t + rp.c2;
    worst = std::max(worst, std::abs(eval(rp, id, t, kDefaults).y - reference));
  }
  const std::string detail =
      "printed oscillatory and half-quadratic solutions, 100 points each, worst abs err " +
      fmt(worst, 2) + " (<1e-12)";
  return worst < 1e-12 ? pass(detail) : fail(detail);
}

Outcome criterion_relu_recovery() {
  const DeuNeuron unit = pinned_relu_unit();
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(-100.0, 100.0);
    if (t == 0.0) continue;
    if (eval(unit.params, unit.id, t, kDefaults).y != std::max(0.0, t)) {
      return fail("kernel mismatch vs max(0,t) at t=" + fmt(t, 17));
    }
  }

  Network relu_net = init_network(std::vector<int>{6, 24, 12, 4}, ActivationKind::Relu, 404,
                                  kDefaults);
  Network deu_net = relu_net;
  for (auto& layer : deu_net.layers) {
    if (!layer.activation) continue;
    ActivationDescriptor act;
    act.kind = ActivationKind::Deu;
    act.deu.assign(layer.out_width(), unit);
    layer.activation = std::move(act);
  }
  Tensor2D x(64, 6);
  for (auto& v : x.data) v = rng.uniform(-2.0, 2.0);
  const Tensor2D a = forward_infer(relu_net, x);
  const Tensor2D b = forward_infer(deu_net, x);
  const bool same =
      std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
  if (!same) return fail("pinned DEU network is not bit-identical to the relu network");
  return pass("max(0,t) exact on 1000 points; pinned network forward bit-identical to relu");
}

Outcome criterion_mnist() {
  const auto mnist = find_idx_dataset("DEUNET_MNIST_DIR", "mnist");
  const auto fashion = find_idx_dataset("DEUNET_FASHION_DIR", "fashion-mnist");
  if (!mnist || !fashion) {
    return skip("IDX files not found (set DEUNET_MNIST_DIR / DEUNET_FASHION_DIR or place "
                "them under ./data/{mnist,fashion-mnist}); no downloading by design");
  }
  const auto started = std::chrono::steady_clock::now();
  const Dataset train = load_idx(mnist->train_images, mnist->train_labels);
  const Dataset test = load_idx(mnist->test_images, mnist->test_labels);

  TrainConfig deu_cfg = mnist_config(ActivationKind::Deu);
  const TrainResult deu = train_model(deu_cfg, train, test);
  g_mnist.deu_acc = deu.records.back().test_acc;
  g_mnist.deu_net = deu.net;
  g_mnist.ran = true;

  const TrainResult relu = train_model(mnist_config(ActivationKind::Relu), train, test);
  g_mnist.relu_acc = relu.records.back().test_acc;

  const Dataset ftrain = load_idx(fashion->train_images, fashion->train_labels);
  const Dataset ftest = load_idx(fashion->test_images, fashion->test_labels);
  const TrainResult fashion_deu = train_model(mnist_config(ActivationKind::Deu), ftrain, ftest);
  g_mnist.fashion_acc = fashion_deu.records.back().test_acc;

  g_mnist.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const bool ok = g_mnist.deu_acc >= 0.97 &&
                  std::abs(g_mnist.deu_acc - g_mnist.relu_acc) <= 0.010 &&
                  g_mnist.fashion_acc >= 0.86 && g_mnist.seconds <= 45.0 * 60.0;
  const std::string detail = "784-256-10, 10 epochs: deu " + fmt(g_mnist.deu_acc) +
                             " (>=0.97), relu " + fmt(g_mnist.relu_acc) +
                             " (|diff|<=0.01), fashion deu " + fmt(g_mnist.fashion_acc) +
                             " (>=0.86), " + fmt(g_mnist.seconds / 60.0, 3) + " min (<=45)";
  return ok ? pass(detail) : fail(detail);
}

Outcome criterion_spirals_compare() {
  const Dataset train = make_synthetic(SyntheticKind::Spirals, 2000, 0.08, 7);
  const Dataset test = make_synthetic(SyntheticKind::Spirals, 2000, 0.08, 7 + 0x51e7aa5dULL);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const std::vector<ActivationKind> kinds{ActivationKind::Deu, ActivationKind::Relu,
                                          ActivationKind::Prelu, ActivationKind::Swish};
  const auto rows = run_compare(spirals_config(), kinds, seeds, train, test);
  std::cout << format_compare_table(rows, seeds);
  write_compare_csv(rows, seeds, "acceptance_compare.csv");

  const double deu_median = rows[0].median_accuracy;
  const double relu_median = rows[1].median_accuracy;
  const bool ok = deu_median >= relu_median - 0.010;
  const std::string detail = "spirals 2-32-32-2, 3 seeds: median deu " + fmt(deu_median) +
                             " vs relu " + fmt(relu_median) +
                             " (deu >= relu - 0.01); table in acceptance_compare.csv";
  return ok ? pass(detail) : fail(detail);
}

struct ProjectionWatch {
  bool violated = false;
  std::string detail;
  std::vector<std::vector<std::array<bool, 3>>> frozen;  // [layer][unit][coeff]
  long steps = 0;

  void observe(const Network& net) {
    std::size_t li_deu = 0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      const auto& layer = net.layers[li];
      if (!layer.activation || layer.activation->kind != ActivationKind::Deu) continue;
      if (frozen.size() <= li_deu) frozen.emplace_back(layer.activation->deu.size());
      auto& layer_frozen = frozen[li_deu++];
      for (std::size_t j = 0; j < layer.activation->deu.size(); ++j) {
        const DeuParams& p = layer.activation->deu[j].params;
        const double eps = net.kernel_cfg.epsilon;
        for (double coeff : {p.a, p.b, p.c}) {
          if (coeff != 0.0 && std::abs(coeff) < eps) {
            violated = true;
            detail = "unfrozen coefficient inside (0, epsilon) at step " + std::to_string(steps);
          }
        }
        if (p.a == 0.0 && p.b == 0.0 && p.c == 0.0) {
          violated = true;
          detail = "unit with a=b=c=0 at step " + std::to_string(steps);
        }
        const std::array<bool, 3> now{p.frozen_a, p.frozen_b, p.frozen_c};
        const std::array<double, 3> vals{p.a, p.b, p.c};
        for (int k = 0; k < 3; ++k) {
          if (layer_frozen[j][k] && !now[k]) {
            violated = true;
            detail = "coefficient un-froze at step " + std::to_string(steps);
          }
          if (now[k] && vals[k] != 0.0) {
            violated = true;
            detail = "frozen coefficient moved off zero at step " + std::to_string(steps);
          }
          layer_frozen[j][k] = layer_frozen[j][k] || now[k];
        }
      }
    }
    ++steps;
  }
};

Outcome run_projection_watch(const TrainConfig& cfg, const Dataset& train,
                             const Dataset& test, const std::string& label) {
  ProjectionWatch watch;
  TrainHooks hooks;
  hooks.after_step = [&watch](const Network& net, long) { watch.observe(net); };
  train_model(cfg, train, test, hooks);
  if (watch.violated) return fail(label + ": " + watch.detail);
  return pass(label + ": " + std::to_string(watch.steps) +
              " optimizer steps, projection/freeze invariants held");
}

Outcome criterion_projection() {
  const auto mnist = find_idx_dataset("DEUNET_MNIST_DIR", "mnist");
  if (!mnist) {
    // Run the same instrumented assertions on synthetic data as evidence,
    // then report the criterion itself as skipped.
    const Dataset train = make_synthetic(SyntheticKind::Spirals, 1000, 0.08, 31);
    const Dataset test = make_synthetic(SyntheticKind::Spirals, 500, 0.08, 32);
    TrainConfig cfg = spirals_config();
    cfg.epochs = 20;
    const Outcome sub = run_projection_watch(cfg, train, test, "synthetic fallback");
    if (sub.status == Status::Fail) return sub;
    return skip("MNIST files not found; " + sub.detail);
  }
  const Dataset train = load_idx(mnist->train_images, mnist->train_labels);
  const Dataset test = load_idx(mnist->test_images, mnist->test_labels);
  TrainConfig cfg = mnist_config(ActivationKind::Deu);
  cfg.epochs = 1;
  return run_projection_watch(cfg, train, test, "mnist 1 epoch");
}

double first_layer_diversity(const Network& net) {
  const auto& deu = net.layers.front().activation->deu;
  double worst = 0.0;
  for (std::size_t i = 0; i < deu.size(); ++i) {
    for (std::size_t j = i + 1; j < deu.size(); ++j) {
      const DeuParams& p = deu[i].params;
      const DeuParams& q = deu[j].params;
      const double linf =
          std::max({std::abs(p.a - q.a), std::abs(p.b - q.b), std::abs(p.c - q.c),
                    std::abs(p.c1 - q.c1), std::abs(p.c2 - q.c2)});
      worst = std::max(worst, linf);
    }
  }
  return worst;
}

Outcome criterion_diversity() {
  if (!g_mnist.ran) {
    const Dataset train = make_synthetic(SyntheticKind::Spirals, 1000, 0.08, 31);
    const Dataset test = make_synthetic(SyntheticKind::Spirals, 500, 0.08, 32);
    TrainConfig cfg = spirals_config();
    cfg.epochs = 20;
    const TrainResult res = train_model(cfg, train, test);
    const double d = first_layer_diversity(res.net);
    if (d <= 1e-3) return fail("synthetic fallback diversity " + fmt(d, 3) + " <= 1e-3");
    return skip("MNIST files not found; synthetic fallback max pairwise Linf " + fmt(d, 3) +
                " > 1e-3");
  }
  const double d = first_layer_diversity(g_mnist.deu_net);
  const std::string detail =
      "first hidden layer max pairwise Linf distance " + fmt(d, 4) + " (>1e-3)";
  return d > 1e-3 ? pass(detail) : fail(detail);
}

Outcome criterion_determinism() {
  const Dataset train = make_synthetic(SyntheticKind::Spirals, 600, 0.08, 51);
  const Dataset test = make_synthetic(SyntheticKind::Spirals, 300, 0.08, 52);
  TrainConfig cfg = spirals_config();
  cfg.epochs = 4;
  cfg.seed = 7;

  auto run_once = [&](const std::string& metrics, const std::string& ckpt) {
    TrainConfig c = cfg;
    c.metrics_out = metrics;
    c.checkpoint_out = ckpt;
    return train_model(c, train, test);
  };
  const TrainResult r1 = run_once("acceptance_m1.jsonl", "acceptance_c1.json");
  run_once("acceptance_m2.jsonl", "acceptance_c2.json");

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (slurp("acceptance_m1.jsonl") != slurp("acceptance_m2.jsonl")) {
    return fail("same-seed metrics files differ");
  }
  if (slurp("acceptance_m1.jsonl").empty()) return fail("metrics file is empty");

  const LoadedCheckpoint loaded = load_checkpoint("acceptance_c1.json");
  const Tensor2D before = forward_infer(r1.net, test.features);
  const Tensor2D after = forward_infer(loaded.net, test.features);
  if (std::memcmp(before.data.data(), after.data.data(),
                  before.data.size() * sizeof(double)) != 0) {
    return fail("checkpoint round-trip changed inference outputs");
  }
  return pass("same-seed metrics byte-identical; checkpoint round-trip evaluation bit-identical");
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "kernel-oracle", criterion_kernel_oracle},
      {2, "gradient-suite", criterion_gradients},
      {3, "printed-formula-spot-checks", criterion_paper_formulas},
      {4, "relu-recovery", criterion_relu_recovery},
      {5, "mnist-desk-scale", criterion_mnist},
      {6, "spirals-activation-comparison", criterion_spirals_compare},
      {7, "projection-during-training", criterion_projection},
      {8, "activation-diversity", criterion_diversity},
      {9, "determinism-and-persistence", criterion_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.status == Status::Pass ? "[PASS]"
                      : outcome.status == Status::Skip ? "[SKIP]"
                                                       : "[FAIL]";
    std::cout << tag << " " << c.number << ". " << c.name << ": " << outcome.detail
              << std::endl;
    if (outcome.status == Status::Fail) ++failures;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  return 0;
}
