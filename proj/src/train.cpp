#include "deunet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "deunet/checkpoint.hpp"
#include "json.hpp"

namespace deunet {

namespace {

Evaluation evaluate_chunked(const Network& net, const Dataset& ds, int chunk_rows) {
  double loss_sum = 0.0;
  long correct = 0;
  const int n = ds.size();
  for (int begin = 0; begin < n; begin += chunk_rows) {
    const int count = std::min(chunk_rows, n - begin);
    Tensor2D x(count, ds.features.cols);
    std::copy(ds.features.row(begin), ds.features.row(begin) + std::size_t(count) * ds.features.cols,
              x.data.begin());
    const Tensor2D logits = forward_infer(net, x);
    const std::span<const int> labels(ds.labels.data() + begin, count);
    const auto [loss, grad] = softmax_cross_entropy(logits, labels);
    (void)grad;
    loss_sum += loss * count;
    for (int r = 0; r < count; ++r) {
      const double* row = logits.row(r);
      int best = 0;
      for (int j = 1; j < logits.cols; ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (best == labels[r]) ++correct;
    }
  }
  return Evaluation{loss_sum / n, static_cast<double>(correct) / n};
}

}  // namespace

std::vector<int> parse_arch(const std::string& s) {
  std::vector<int> widths;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '-')) {
    if (part.empty()) throw std::invalid_argument("arch-parse: empty segment in '" + s + "'");
    std::size_t used = 0;
    int w = 0;
    try {
      w = std::stoi(part, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("arch-parse: '" + part + "' is not an integer");
    }
    if (used != part.size() || w <= 0) {
      throw std::invalid_argument("arch-parse: '" + part + "' is not a positive integer");
    }
    widths.push_back(w);
  }
  if (widths.size() < 2) {
    throw std::invalid_argument("arch-parse: need at least two widths in '" + s + "'");
  }
  return widths;
}

std::string record_to_json_line(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_acc"] = r.train_acc;
  j["test_acc"] = r.test_acc;
  if (r.subspace_counts) {
    nlohmann::ordered_json counts;
    for (int s = 0; s < 7; ++s) {
      counts[to_string(static_cast<Structural>(s))] = (*r.subspace_counts)[s];
    }
    j["subspace_counts"] = std::move(counts);
  }
  return j.dump();
}

Evaluation evaluate_dataset(const Network& net, const Dataset& ds, int chunk_rows) {
  ds.validate();
  if (ds.features.cols != net.layers.front().in_width()) {
    throw std::invalid_argument("evaluate: dataset width does not match network input");
  }
  if (ds.num_classes != net.layers.back().out_width()) {
    throw std::invalid_argument("evaluate: class count does not match network output");
  }
  return evaluate_chunked(net, ds, chunk_rows);
}

TrainResult train_model(const TrainConfig& cfg, const Dataset& train, const Dataset& test,
                        const TrainHooks& hooks) {
  cfg.kernel.validate();
  cfg.optim.validate();
  if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  train.validate();
  test.validate();
  if (cfg.arch.size() < 3) throw std::invalid_argument("train: arch needs a hidden layer");
  if (cfg.arch.front() != train.features.cols) {
    throw std::invalid_argument("train: arch input width " + std::to_string(cfg.arch.front()) +
                                " does not match dataset features " +
                                std::to_string(train.features.cols));
  }
  if (cfg.arch.back() != train.num_classes) {
    throw std::invalid_argument("train: arch output width " + std::to_string(cfg.arch.back()) +
                                " does not match class count " +
                                std::to_string(train.num_classes));
  }
  if (test.features.cols != train.features.cols || test.num_classes > train.num_classes) {
    throw std::invalid_argument("train: test dataset is incompatible with the train dataset");
  }

  TrainResult result;
  result.net = init_network(cfg.arch, cfg.kind, cfg.seed, cfg.kernel, cfg.batch_norm);

  std::ofstream metrics;
  if (!cfg.metrics_out.empty()) {
    metrics.open(cfg.metrics_out, std::ios::trunc);
    if (!metrics) throw std::runtime_error("file-open: cannot write " + cfg.metrics_out);
  }

  const bool deu = cfg.kind == ActivationKind::Deu;
  auto emit_record = [&](int epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    if (epoch == 0) {
      const Evaluation tr = evaluate_chunked(result.net, train, 512);
      rec.train_loss = tr.loss;
      rec.train_acc = tr.accuracy;
    }
    return rec;
  };

  auto finish_record = [&](EpochRecord& rec) {
    const Evaluation te = evaluate_chunked(result.net, test, 512);
    rec.test_acc = te.accuracy;
    if (deu) rec.subspace_counts = subspace_census(result.net);
    if (metrics.is_open()) {
      metrics << record_to_json_line(rec) << "\n";
      metrics.flush();
    }
    if (!cfg.checkpoint_out.empty()) {
      save_checkpoint(result.net, CheckpointMeta{1, cfg.seed, rec.epoch}, cfg.checkpoint_out);
    }
    result.records.push_back(rec);
    if (hooks.after_epoch) hooks.after_epoch(rec);
  };

  {
    EpochRecord rec0 = emit_record(0);
    finish_record(rec0);
  }

  AdamState adam;
  adam.init_for(result.net);
  BatchIterator iter(train, cfg.batch_size, cfg.seed);
  long global_step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    iter.start_epoch(epoch);
    double loss_sum = 0.0;
    long seen = 0, correct = 0;

    while (auto batch = iter.next()) {
      if (batch->x.rows < 2 && cfg.batch_norm) {
        std::cerr << "notice: skipping a trailing batch of 1 sample (batch norm needs >= 2)\n";
        continue;
      }
      ForwardCache cache;
      const Tensor2D logits = forward(result.net, batch->x, Mode::Train, &cache);
      const auto [loss, dlogits] = softmax_cross_entropy(logits, batch->labels);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("non-finite-loss: aborting at epoch " + std::to_string(epoch));
      }
      const Gradients grads = backward(result.net, cache, dlogits);
      adam_step(result.net, grads, adam, cfg.optim, ParamGroup::Weights);
      adam_step(result.net, grads, adam, cfg.optim, ParamGroup::Activation);
      ++global_step;
      if (hooks.after_step) hooks.after_step(result.net, global_step);

      loss_sum += loss * batch->x.rows;
      seen += batch->x.rows;
      for (int r = 0; r < logits.rows; ++r) {
        const double* row = logits.row(r);
        int best = 0;
        for (int j = 1; j < logits.cols; ++j) {
          if (row[j] > row[best]) best = j;
        }
        if (best == batch->labels[r]) ++correct;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = seen > 0 ? loss_sum / seen : 0.0;
    rec.train_acc = seen > 0 ? static_cast<double>(correct) / seen : 0.0;
    finish_record(rec);

    if (cfg.verbose) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
              .count();
      const EpochRecord& r = result.records.back();
      std::cout << "epoch " << epoch << "/" << cfg.epochs << "  train_loss=" << r.train_loss
                << "  train_acc=" << r.train_acc << "  test_acc=" << r.test_acc
                << "  wall=" << secs << "s" << std::endl;
    }
  }

  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CompareRow> run_compare(const TrainConfig& base,
                                    const std::vector<ActivationKind>& kinds,
                                    const std::vector<std::uint64_t>& seeds,
                                    const Dataset& train, const Dataset& test, bool verbose) {
  if (kinds.empty()) throw std::invalid_argument("compare: need at least one activation kind");
  if (seeds.empty()) throw std::invalid_argument("compare: need at least one seed");
  std::vector<CompareRow> rows;
  for (const ActivationKind kind : kinds) {
    CompareRow row;
    row.kind = kind;
    for (const std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.kind = kind;
      cfg.seed = seed;  // same seed across kinds fixes the data order
      cfg.checkpoint_out.clear();
      cfg.metrics_out.clear();
      cfg.verbose = false;
      const TrainResult res = train_model(cfg, train, test);
      row.param_count = res.net.learnable_param_count();
      row.accuracies.push_back(res.records.back().test_acc);
      if (verbose) {
        std::cout << "compare: kind=" << to_string(kind) << " seed=" << seed
                  << " test_acc=" << row.accuracies.back() << std::endl;
      }
    }
    row.median_accuracy = median(row.accuracies);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_compare_table(const std::vector<CompareRow>& rows,
                                 const std::vector<std::uint64_t>& seeds) {
  std::ostringstream os;
  os << "activation  params";
  for (const std::uint64_t s : seeds) os << "  seed" << s;
  os << "  median\n";
  os.setf(std::ios::fixed);
  os.precision(4);
  for (const auto& row : rows) {
    os << to_string(row.kind);
    for (std::size_t pad = std::string(to_string(row.kind)).size(); pad < 10; ++pad) os << ' ';
    os << "  " << row.param_count;
    for (const double a : row.accuracies) os << "  " << a;
    os << "  " << row.median_accuracy << "\n";
  }
  return os.str();
}

void write_compare_csv(const std::vector<CompareRow>& rows,
                       const std::vector<std::uint64_t>& seeds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("file-open: cannot write " + path);
  out << "activation,params";
  for (const std::uint64_t s : seeds) out << ",acc_seed" << s;
  out << ",median\n";
  out.setf(std::ios::fixed);
  out.precision(6);
  for (const auto& row : rows) {
    out << to_string(row.kind) << "," << row.param_count;
    for (const double a : row.accuracies) out << "," << a;
    out << "," << row.median_accuracy << "\n";
  }
}

void write_activation_curve(const Network& net, int layer, int unit, double t_min,
                            double t_max, int samples, const std::string& path) {
  if (layer < 0 || layer >= static_cast<int>(net.layers.size())) {
    throw std::invalid_argument("inspect: layer index out of range");
  }
  const DenseLayer& dl = net.layers[layer];
  if (!dl.activation) {
    throw std::invalid_argument("inspect: layer " + std::to_string(layer) +
                                " has no activation (output layer)");
  }
  if (unit < 0 || unit >= dl.out_width()) {
    throw std::invalid_argument("inspect: unit index out of range");
  }
  if (samples < 2) throw std::invalid_argument("inspect: need at least 2 samples");
  if (!(t_max > t_min)) throw std::invalid_argument("inspect: t_max must exceed t_min");

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("file-open: cannot write " + path);
  out.precision(17);

  const ActivationDescriptor& act = *dl.activation;
  std::string subspace;
  if (act.kind == ActivationKind::Deu) {
    const DeuNeuron& u = act.deu[unit];
    subspace = to_string(u.id);
    out << "# a=" << u.params.a << " b=" << u.params.b << " c=" << u.params.c
        << " c1=" << u.params.c1 << " c2=" << u.params.c2 << " subspace=" << subspace << "\n";
  } else {
    subspace = to_string(act.kind);
    out << "# kind=" << subspace;
    if (act.kind == ActivationKind::Prelu) out << " alpha=" << act.prelu_alpha[unit];
    if (act.kind == ActivationKind::Swish) out << " beta=" << act.swish_beta[unit];
    out << "\n";
  }
  out << "t,y,dy_dt,subspace\n";

  for (int i = 0; i < samples; ++i) {
    const double t = t_min + (t_max - t_min) * i / (samples - 1);
    double y = 0.0, dy = 0.0;
    switch (act.kind) {
      case ActivationKind::Deu: {
        const EvalResult e = eval(act.deu[unit].params, act.deu[unit].id, t, net.kernel_cfg);
        y = e.y;
        dy = e.dy_dt;
        break;
      }
      case ActivationKind::Relu:
        y = t > 0.0 ? t : 0.0;
        dy = t > 0.0 ? 1.0 : 0.0;
        break;
      case ActivationKind::Prelu: {
        const double alpha = act.prelu_alpha[unit];
        y = t > 0.0 ? t : alpha * t;
        dy = t > 0.0 ? 1.0 : alpha;
        break;
      }
      case ActivationKind::Swish: {
        const double beta = act.swish_beta[unit];
        const double s = 1.0 / (1.0 + std::exp(-beta * t));
        y = t * s;
        dy = s + beta * t * s * (1.0 - s);
        break;
      }
    }
    out << t << "," << y << "," << dy << "," << subspace << "\n";
  }
}

}  // namespace deunet
