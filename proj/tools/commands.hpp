#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l0cert/evaluation.hpp"

namespace l0cert::cli {

/// Every parameter a subcommand may consume. Built-in defaults follow the
/// MNIST protocol (alpha 0.05, n0 1000, n 10000, k 45) scaled to desk size.
struct RunConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path train_images;  ///< empty: <data_dir>/train-images-idx3-ubyte.gz
  std::filesystem::path train_labels;
  std::filesystem::path test_images;   ///< empty: <data_dir>/t10k-images-idx3-ubyte.gz
  std::filesystem::path test_labels;
  std::filesystem::path model = "model.bin";
  std::filesystem::path out;
  std::filesystem::path adversarial_dir;  ///< attack: raw tensors of adversarial images

  std::uint64_t seed = 0;
  int k = 45;
  double alpha = 0.05;
  std::int64_t n0 = 1000;
  std::int64_t n = 10000;
  std::string encoding = "multichannel";
  std::string certificate = "cor1";
  std::size_t subset = 0;        ///< 0 = whole test split
  bool subset_random = true;     ///< seeded random-N instead of first-N
  std::size_t train_subset = 0;  ///< 0 = whole training split
  int batch_size = 256;

  int epochs = 30;
  int train_batch = 16;
  double learning_rate = 0.01;
  int lr_switch_epoch = 15;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<int> hidden = {300, 100};

  int restarts = 3;
  std::int64_t attack_samples = 1000;
  int max_sweeps = 100;

  int rho_max = 30;
  int analyze_d = 784;
  std::vector<int> analyze_ks = {5, 10, 20, 30, 45, 50, 60, 75, 100};
  int info_k = 14521;
  double info_d = 3.0 * 224 * 224;
  int info_s = 256;
  double info_kappa = 0.1;
};

struct TrainSummary {
  double train_ablated_accuracy = 0.0;
  std::optional<double> test_ablated_accuracy;
  std::vector<double> epoch_loss;
};

struct AttackSummary {
  double median_magnitude = 0.0;
  std::size_t images = 0;
  std::size_t violations = 0;  ///< attacks that beat the certified radius
};

TrainSummary cmd_train(const RunConfig& config, std::ostream& log);
EvaluationReport cmd_certify(const RunConfig& config, std::ostream& log);
void cmd_predict(const RunConfig& config, std::ostream& log);
AttackSummary cmd_attack(const RunConfig& config, std::ostream& log);
void cmd_analyze(const RunConfig& config, std::ostream& log);

}  // namespace l0cert::cli
