#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deunet/checkpoint.hpp"
#include "deunet/data_io.hpp"
#include "deunet/parallel.hpp"
#include "deunet/train.hpp"
#include "deunet/verify.hpp"

namespace {

using namespace deunet;

struct DatasetFlags {
  std::string kind = "spirals";
  std::string train_images, train_labels, test_images, test_labels;  // idx
  std::string train_csv, test_csv, label_column = "label";           // csv
  int samples = 2000;                                                // synthetic
  double noise = 0.08;
  std::uint64_t data_seed = 7;
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& f) {
  cmd->add_option("--dataset", f.kind, "idx | csv | moons | circles | spirals")
      ->default_val(f.kind);
  cmd->add_option("--train-images", f.train_images, "IDX image file (raw or .gz)");
  cmd->add_option("--train-labels", f.train_labels, "IDX label file (raw or .gz)");
  cmd->add_option("--test-images", f.test_images, "IDX image file (raw or .gz)");
  cmd->add_option("--test-labels", f.test_labels, "IDX label file (raw or .gz)");
  cmd->add_option("--train-csv", f.train_csv, "labeled CSV with header");
  cmd->add_option("--test-csv", f.test_csv, "optional test CSV (default: 80/20 split)");
  cmd->add_option("--label-column", f.label_column, "CSV label column name or index");
  cmd->add_option("--samples", f.samples, "synthetic sample count per split");
  cmd->add_option("--noise", f.noise, "synthetic noise level");
  cmd->add_option("--data-seed", f.data_seed, "synthetic/split seed");
}

std::pair<Dataset, Dataset> load_train_test(const DatasetFlags& f) {
  if (f.kind == "idx") {
    if (f.train_images.empty() || f.train_labels.empty() || f.test_images.empty() ||
        f.test_labels.empty()) {
      throw std::runtime_error("dataset-flags: idx needs --train-images/--train-labels/"
                               "--test-images/--test-labels");
    }
    return {load_idx(f.train_images, f.train_labels), load_idx(f.test_images, f.test_labels)};
  }
  if (f.kind == "csv") {
    if (f.train_csv.empty()) throw std::runtime_error("dataset-flags: csv needs --train-csv");
    Dataset train = load_csv(f.train_csv, f.label_column);
    if (!f.test_csv.empty()) return {std::move(train), load_csv(f.test_csv, f.label_column)};
    return split_dataset(train, 0.8, f.data_seed);
  }
  const auto kind = synthetic_kind_from_string(f.kind);
  if (!kind) throw std::runtime_error("dataset-flags: unknown dataset kind '" + f.kind + "'");
  Dataset train = make_synthetic(*kind, f.samples, f.noise, f.data_seed);
  Dataset test = make_synthetic(*kind, f.samples, f.noise, f.data_seed + 0x51e7aa5dULL);
  return {std::move(train), std::move(test)};
}

Dataset load_single(const DatasetFlags& f) {
  if (f.kind == "idx") {
    if (f.test_images.empty() || f.test_labels.empty()) {
      throw std::runtime_error("dataset-flags: idx needs --test-images/--test-labels");
    }
    return load_idx(f.test_images, f.test_labels);
  }
  if (f.kind == "csv") {
    const std::string path = !f.test_csv.empty() ? f.test_csv : f.train_csv;
    if (path.empty()) throw std::runtime_error("dataset-flags: csv needs --test-csv");
    return load_csv(path, f.label_column);
  }
  const auto kind = synthetic_kind_from_string(f.kind);
  if (!kind) throw std::runtime_error("dataset-flags: unknown dataset kind '" + f.kind + "'");
  return make_synthetic(*kind, f.samples, f.noise, f.data_seed + 0x51e7aa5dULL);
}

/// Flat `key = value` config file; command-line flags take precedence and
/// unset keys fall back to defaults. '#' starts a comment line.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config-open: cannot open " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config-parse: line " + std::to_string(line_no) +
                               " is not key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config") continue;
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw std::runtime_error("config-unknown-key: '" + key + "' at line " +
                               std::to_string(line_no));
    }
    if (opt->count() > 0) continue;  // explicit flags win
    opt->add_result(value);
    opt->run_callback();
  }
}

struct TrainFlags {
  DatasetFlags data;
  std::string arch = "2-32-32-2";
  std::string activation = "deu";
  int epochs = 10;
  int batch_size = 128;
  double lr_weights = 1e-3;
  double lr_deu_scale = 0.1;
  double epsilon = 1e-3;
  double exp_arg_clamp = 30.0;
  double output_clamp = 1e4;
  double clip_deu_grad_norm = 5.0;  // <= 0 disables
  bool batch_norm = true;
  std::uint64_t seed = 42;
  std::string checkpoint_out;
  std::string metrics_out;
  std::string config_path;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_activation) {
  add_dataset_flags(cmd, f.data);
  cmd->add_option("--arch", f.arch, "layer widths, e.g. 784-256-10")->default_val(f.arch);
  if (with_activation) {
    cmd->add_option("--activation", f.activation, "deu | relu | prelu | swish")
        ->default_val(f.activation);
  }
  cmd->add_option("--epochs", f.epochs)->default_val(f.epochs);
  cmd->add_option("--batch-size", f.batch_size)->default_val(f.batch_size);
  cmd->add_option("--lr-weights", f.lr_weights)->default_val(f.lr_weights);
  cmd->add_option("--lr-deu-scale", f.lr_deu_scale, "activation-group LR factor")
      ->default_val(f.lr_deu_scale);
  cmd->add_option("--epsilon", f.epsilon, "projection threshold")->default_val(f.epsilon);
  cmd->add_option("--exp-arg-clamp", f.exp_arg_clamp)->default_val(f.exp_arg_clamp);
  cmd->add_option("--output-clamp", f.output_clamp)->default_val(f.output_clamp);
  cmd->add_option("--clip-deu-grad-norm", f.clip_deu_grad_norm,
                  "activation-gradient norm cap, <= 0 disables")
      ->default_val(f.clip_deu_grad_norm);
  cmd->add_flag("--batch-norm,!--no-batch-norm", f.batch_norm, "batch norm on pre-activations");
  cmd->add_option("--seed", f.seed)->default_val(f.seed);
  cmd->add_option("--checkpoint-out", f.checkpoint_out, "JSON checkpoint path");
  cmd->add_option("--metrics-out", f.metrics_out, "JSON-lines metrics path");
  cmd->add_option("--config", f.config_path, "flat key=value config file (flags override it)");
}

TrainConfig to_train_config(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.arch = parse_arch(f.arch);
  const auto kind = activation_kind_from_string(f.activation);
  if (!kind) throw std::runtime_error("train-flags: unknown activation '" + f.activation + "'");
  cfg.kind = *kind;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch_size;
  cfg.optim.lr_weights = f.lr_weights;
  cfg.optim.lr_deu_scale = f.lr_deu_scale;
  cfg.optim.clip_deu_grad_norm =
      f.clip_deu_grad_norm > 0.0 ? std::optional<double>(f.clip_deu_grad_norm) : std::nullopt;
  cfg.kernel.epsilon = f.epsilon;
  cfg.kernel.exp_arg_clamp = f.exp_arg_clamp;
  cfg.kernel.output_clamp = f.output_clamp;
  cfg.batch_norm = f.batch_norm;
  cfg.seed = f.seed;
  cfg.checkpoint_out = f.checkpoint_out;
  cfg.metrics_out = f.metrics_out;
  cfg.verbose = true;
  return cfg;
}

int run_train(const TrainFlags& flags) {
  const auto [train, test] = load_train_test(flags.data);
  const TrainConfig cfg = to_train_config(flags);
  const TrainResult res = train_model(cfg, train, test);
  const EpochRecord& last = res.records.back();
  std::cout << "final: epoch=" << last.epoch << " train_acc=" << last.train_acc
            << " test_acc=" << last.test_acc << std::endl;
  return 0;
}

int run_eval(const std::string& checkpoint_path, const DatasetFlags& data) {
  const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  const Dataset ds = load_single(data);
  const Evaluation ev = evaluate_dataset(loaded.net, ds);
  std::printf("accuracy=%.4f mean_loss=%.6f\n", ev.accuracy, ev.loss);
  return 0;
}

int run_inspect(const std::string& checkpoint_path, int layer, int unit, double t_min,
                double t_max, int samples, const std::string& out) {
  const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  write_activation_curve(loaded.net, layer, unit, t_min, t_max, samples, out);
  std::cout << "wrote " << out << std::endl;
  return 0;
}

int run_compare_cmd(const TrainFlags& flags, const std::vector<std::string>& kinds_s,
                    const std::vector<std::uint64_t>& seeds, const std::string& table_out) {
  std::vector<ActivationKind> kinds;
  for (const std::string& s : kinds_s) {
    const auto k = activation_kind_from_string(s);
    if (!k) throw std::runtime_error("compare: unknown activation '" + s + "'");
    kinds.push_back(*k);
  }
  const auto [train, test] = load_train_test(flags.data);
  TrainConfig base = to_train_config(flags);
  base.verbose = false;
  const auto rows = run_compare(base, kinds, seeds, train, test, true);
  std::cout << format_compare_table(rows, seeds);
  if (!table_out.empty()) {
    write_compare_csv(rows, seeds, table_out);
    std::cout << "wrote " << table_out << std::endl;
  }
  return 0;
}

int run_verify(int draws, int grad_draws, std::uint64_t seed, double epsilon,
               double exp_arg_clamp, double output_clamp) {
  verify::VerifyOptions opts;
  opts.draws = draws;
  opts.grad_draws = grad_draws;
  opts.seed = seed;
  opts.kernel.epsilon = epsilon;
  opts.kernel.exp_arg_clamp = exp_arg_clamp;
  opts.kernel.output_clamp = output_clamp;
  const verify::Report report = verify::run_verification(opts);
  std::cout << verify::format_report(report);
  std::cerr << "wall=" << report.seconds << "s\n";
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-unit learnable ODE activation functions: training, evaluation and "
               "kernel verification"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)")->default_val(0);

  TrainFlags train_flags;
  CLI::App* cmd_train = app.add_subcommand("train", "train a model and write metrics/checkpoint");
  cmd_train->fallthrough();
  add_train_flags(cmd_train, train_flags, true);

  std::string eval_checkpoint;
  DatasetFlags eval_data;
  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  cmd_eval->fallthrough();
  cmd_eval->add_option("--checkpoint", eval_checkpoint)->required();
  add_dataset_flags(cmd_eval, eval_data);

  std::string ins_checkpoint, ins_out = "curve.csv";
  int ins_layer = 0, ins_unit = 0, ins_samples = 201;
  double ins_tmin = -3.0, ins_tmax = 3.0;
  CLI::App* cmd_inspect = app.add_subcommand("inspect", "dump one unit's activation curve as CSV");
  cmd_inspect->fallthrough();
  cmd_inspect->add_option("--checkpoint", ins_checkpoint)->required();
  cmd_inspect->add_option("--layer", ins_layer)->default_val(0);
  cmd_inspect->add_option("--unit,--neuron", ins_unit)->default_val(0);
  cmd_inspect->add_option("--t-min", ins_tmin)->default_val(-3.0);
  cmd_inspect->add_option("--t-max", ins_tmax)->default_val(3.0);
  cmd_inspect->add_option("--samples", ins_samples)->default_val(201);
  cmd_inspect->add_option("--out", ins_out)->default_val("curve.csv");

  TrainFlags compare_flags;
  std::vector<std::string> compare_kinds{"deu", "relu", "prelu", "swish"};
  std::vector<std::uint64_t> compare_seeds{1, 2, 3};
  std::string compare_table_out;
  CLI::App* cmd_compare = app.add_subcommand("compare", "train each activation kind per seed");
  cmd_compare->fallthrough();
  add_train_flags(cmd_compare, compare_flags, false);
  cmd_compare->add_option("--activations", compare_kinds)->delimiter(',');
  cmd_compare->add_option("--seeds", compare_seeds)->delimiter(',');
  cmd_compare->add_option("--table-out", compare_table_out, "comparison CSV path");

  int verify_draws = 1000, verify_grad_draws = 500;
  std::uint64_t verify_seed = 42;
  double verify_epsilon = 1e-3, verify_exp_clamp = 30.0, verify_out_clamp = 1e4;
  CLI::App* cmd_verify = app.add_subcommand(
      "verify-kernel", "check closed forms against RK4, ODE residuals and finite differences");
  cmd_verify->fallthrough();
  cmd_verify->add_option("--draws", verify_draws)->default_val(1000);
  cmd_verify->add_option("--grad-draws", verify_grad_draws)->default_val(500);
  cmd_verify->add_option("--seed", verify_seed)->default_val(42);
  cmd_verify->add_option("--epsilon", verify_epsilon)->default_val(1e-3);
  cmd_verify->add_option("--exp-arg-clamp", verify_exp_clamp)->default_val(30.0);
  cmd_verify->add_option("--output-clamp", verify_out_clamp)->default_val(1e4);

  CLI11_PARSE(app, argc, argv);
  deunet::set_thread_count(threads);

  try {
    if (cmd_train->parsed() && !train_flags.config_path.empty()) {
      apply_config_file(cmd_train, train_flags.config_path);
    }
    if (cmd_compare->parsed() && !compare_flags.config_path.empty()) {
      apply_config_file(cmd_compare, compare_flags.config_path);
    }
    if (cmd_train->parsed()) return run_train(train_flags);
    if (cmd_eval->parsed()) return run_eval(eval_checkpoint, eval_data);
    if (cmd_inspect->parsed()) {
      return run_inspect(ins_checkpoint, ins_layer, ins_unit, ins_tmin, ins_tmax, ins_samples,
                         ins_out);
    }
    if (cmd_compare->parsed()) {
      return run_compare_cmd(compare_flags, compare_kinds, compare_seeds, compare_table_out);
    }
    if (cmd_verify->parsed()) {
      return run_verify(verify_draws, verify_grad_draws, verify_seed, verify_epsilon,
                        verify_exp_clamp, verify_out_clamp);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
