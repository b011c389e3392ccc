#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "l0cert/ablation.hpp"
#include "l0cert/datasets.hpp"

namespace l0cert {

/// Base classifier f over ablated images. Anything implementing this can be
/// smoothed, certified and attacked.
class BaseClassifier {
 public:
  virtual ~BaseClassifier() = default;

  virtual int num_classes() const = 0;
  virtual int classify(const AblatedImage& ablated) const = 0;

  /// Default implementation calls classify() per element.
  virtual void classify_batch(std::span<const AblatedImage> batch, std::span<int> predictions) const;
};

struct Scores {
  std::vector<double> values;
  int argmax = 0;
};

/// Index of the largest score; ties go to the lowest index.
int argmax_lowest(std::span<const double> scores);

/// Inputs for one minibatch in which every sample shares the same active
/// input columns. Inactive inputs equal `baseline` (zeros when empty);
/// `active` holds (x - baseline) for the active columns, one sample per column.
struct InputBatch {
  std::vector<int> columns;
  Eigen::MatrixXd active;
  Eigen::VectorXd baseline;

  static InputBatch dense(const Eigen::MatrixXd& inputs);
  Eigen::Index batch_size() const { return active.cols(); }
};

struct MlpGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Fully connected ReLU network with a linear output layer, trained with
/// softmax cross-entropy.
class Mlp {
 public:
  Mlp() = default;
  /// All parameters zero.
  explicit Mlp(std::vector<int> layer_sizes);
  /// He-uniform weights, U(-sqrt(6/fan_in), sqrt(6/fan_in)); zero biases.
  /// input_fan_in > 0 overrides the first layer's fan-in (inputs with most entries zero).
  static Mlp initialized(std::vector<int> layer_sizes, std::uint64_t seed, int input_fan_in = 0);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  std::size_t parameter_count() const;

  Eigen::MatrixXd& weight(int layer) { return weights_[static_cast<std::size_t>(layer)]; }
  const Eigen::MatrixXd& weight(int layer) const { return weights_[static_cast<std::size_t>(layer)]; }
  Eigen::VectorXd& bias(int layer) { return biases_[static_cast<std::size_t>(layer)]; }
  const Eigen::VectorXd& bias(int layer) const { return biases_[static_cast<std::size_t>(layer)]; }

  /// Scores for a single dense input vector.
  Scores forward(std::span<const double> input) const;

  /// Scores for an input equal to `baseline` except at `columns`, where it
  /// takes `values`. Work is proportional to the number of active columns.
  Scores forward_sparse(std::span<const int> columns, std::span<const double> values,
                        std::span<const double> baseline_offset) const;

  /// W1 * baseline, the first-layer contribution of the inactive inputs.
  std::vector<double> baseline_offset(std::span<const double> baseline) const;

  /// Output logits, one column per sample.
  Eigen::MatrixXd logits(const InputBatch& batch) const;

  /// Mean cross-entropy over the batch; fills `gradient` with its derivative.
  double loss_and_gradient(const InputBatch& batch, std::span<const int> labels,
                           MlpGradient& gradient) const;

  /// As loss_and_gradient, except that gradient.weights[0] keeps only the
  /// active columns, in batch order. Requires an empty baseline.
  double loss_and_column_gradient(const InputBatch& batch, std::span<const int> labels,
                                  MlpGradient& gradient) const;

  bool all_finite() const;

 private:
  double backward(const InputBatch& batch, std::span<const int> labels, MlpGradient& gradient,
                  bool full_first_layer) const;

  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;  // out x in
  std::vector<Eigen::VectorXd> biases_;
};

struct ModelMetadata {
  EncodingScheme encoding = EncodingScheme::kMultichannel;
  int width = 28;
  int height = 28;
  int channels = 1;
  std::vector<float> mean_pixel;  ///< used by the mean encoding only
  int k = 45;                     ///< retention constant used in training
  std::uint64_t train_config_hash = 0;
};

/// A trained network together with the encoding it expects.
class ClassifierModel : public BaseClassifier {
 public:
  ClassifierModel(Mlp network, ModelMetadata metadata);

  int num_classes() const override { return network_.output_size(); }
  int classify(const AblatedImage& ablated) const override;

  EncodedTensor encode(const AblatedImage& ablated) const;
  /// Throws ShapeMismatch when the tensor does not fit the input layer.
  Scores forward(const EncodedTensor& encoded) const;

  const Mlp& network() const { return network_; }
  Mlp& network() { return network_; }
  const ModelMetadata& metadata() const { return metadata_; }

  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);

 private:
  Mlp network_;
  ModelMetadata metadata_;
  std::vector<double> null_pixel_;
  std::vector<double> offset_;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 0.01;
  int lr_switch_epoch = 15;  ///< first epoch (0-based) trained at the decayed rate
  double lr_decay = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int k = 45;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {300, 100};
  EncodingScheme encoding = EncodingScheme::kMultichannel;

  void validate() const;
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct TrainHistory {
  std::vector<double> epoch_loss;
};

/// SGD with momentum on ablated minibatches: every minibatch draws one
/// fresh index set and ablates the same pixels from all of its images.
ClassifierModel train(const Dataset& dataset, const TrainConfig& config,
                      TrainHistory* history = nullptr);

/// Fraction of images whose single random ablation the base classifier labels
/// correctly (draw t uses counter t).
double ablated_accuracy(const BaseClassifier& classifier, const Dataset& dataset, int k,
                        std::uint64_t seed);

/// Largest relative deviation between backprop gradients and central finite
/// differences with the given step, over every parameter.
double gradient_check(const Mlp& model, std::span<const double> input, int label,
                      double step = 1e-6);

}  // namespace l0cert
