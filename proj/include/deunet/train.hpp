#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deunet/data_io.hpp"
#include "deunet/network.hpp"
#include "deunet/optim.hpp"

namespace deunet {

struct TrainConfig {
  std::vector<int> arch;  // input width first, class count last
  ActivationKind kind = ActivationKind::Deu;
  int epochs = 10;
  int batch_size = 128;
  OptimizerConfig optim;
  KernelConfig kernel;
  bool batch_norm = true;
  std::uint64_t seed = 42;
  std::string checkpoint_out;  // written after every epoch when non-empty
  std::string metrics_out;     // JSON-lines, one record per epoch when non-empty
  bool verbose = false;        // epoch summaries (with wall time) to stdout
};

/// "784-128-10" -> {784, 128, 10}.
std::vector<int> parse_arch(const std::string& s);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::optional<std::array<long, 7>> subspace_counts;  // DEU runs only
};

/// Self-contained JSON object (no trailing newline). Deterministic for a
/// deterministic record, so same-seed runs produce byte-identical files.
std::string record_to_json_line(const EpochRecord& r);

struct TrainHooks {
  std::function<void(const Network&, long step)> after_step;
  std::function<void(const EpochRecord&)> after_epoch;
};

struct TrainResult {
  Network net;
  std::vector<EpochRecord> records;
};

/// Mini-batch Adam training with two parameter groups and per-step
/// re-resolution. Record 0 is the evaluation of the initialized network.
/// A trailing batch of one sample is skipped (with a notice) when batch norm
/// is active. Deterministic given seed; results do not depend on thread count.
TrainResult train_model(const TrainConfig& cfg, const Dataset& train, const Dataset& test,
                        const TrainHooks& hooks = {});

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Infer-mode loss/accuracy over a dataset, evaluated in chunks.
Evaluation evaluate_dataset(const Network& net, const Dataset& ds, int chunk_rows = 512);

struct CompareRow {
  ActivationKind kind = ActivationKind::Deu;
  long param_count = 0;
  std::vector<double> accuracies;  // one per seed
  double median_accuracy = 0.0;
};

double median(std::vector<double> values);

/// Trains one model per (kind, seed) with identical data order across kinds.
std::vector<CompareRow> run_compare(const TrainConfig& base,
                                    const std::vector<ActivationKind>& kinds,
                                    const std::vector<std::uint64_t>& seeds,
                                    const Dataset& train, const Dataset& test,
                                    bool verbose = false);

std::string format_compare_table(const std::vector<CompareRow>& rows,
                                 const std::vector<std::uint64_t>& seeds);

void write_compare_csv(const std::vector<CompareRow>& rows,
                       const std::vector<std::uint64_t>& seeds, const std::string& path);

/// Samples one unit's activation curve over [t_min, t_max] into a CSV with a
/// leading comment line carrying the unit parameters and subspace.
void write_activation_curve(const Network& net, int layer, int unit, double t_min,
                            double t_max, int samples, const std::string& path);

}  // namespace deunet
