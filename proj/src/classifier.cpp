#include "l0cert/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "l0cert/errors.hpp"
#include "l0cert/hashing.hpp"
#include "l0cert/random.hpp"

namespace l0cert {
namespace {

// Sub-streams of TrainConfig::seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kAblationStream = 3;

constexpr char kModelMagic[8] = {'L', '0', 'C', 'M', 'O', 'D', 'E', 'L'};

// z += a * column, the inner loop of every inference layer.
inline void axpy(double a, const double* column, double* z, Eigen::Index rows) {
  for (Eigen::Index r = 0; r < rows; ++r) z[r] += a * column[r];
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InvalidParams("an MLP needs at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw InvalidParams("layer sizes must be positive");
  }
}

class LittleEndianWriter {
 public:
  explicit LittleEndianWriter(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out_.write(reinterpret_cast<const char*>(bytes), sizeof(T));
  }

 private:
  std::ostream& out_;
};

class LittleEndianReader {
 public:
  explicit LittleEndianReader(std::istream& in) : in_(in) {}

  template <typename T>
  T get() {
    unsigned char bytes[sizeof(T)];
    if (!in_.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
      throw FormatError(FormatError::Kind::kTruncated, "model file truncated");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

 private:
  std::istream& in_;
};

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

}  // namespace

void BaseClassifier::classify_batch(std::span<const AblatedImage> batch,
                                    std::span<int> predictions) const {
  if (batch.size() != predictions.size()) throw ShapeMismatch("prediction buffer size mismatch");
  for (std::size_t i = 0; i < batch.size(); ++i) predictions[i] = classify(batch[i]);
}

int argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw InvalidParams("argmax of empty scores");
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

InputBatch InputBatch::dense(const Eigen::MatrixXd& inputs) {
  InputBatch batch;
  batch.columns.resize(static_cast<std::size_t>(inputs.rows()));
  std::iota(batch.columns.begin(), batch.columns.end(), 0);
  batch.active = inputs;
  return batch;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  check_sizes(sizes_);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

Mlp Mlp::initialized(std::vector<int> layer_sizes, std::uint64_t seed, int input_fan_in) {
  Mlp mlp(std::move(layer_sizes));
  for (int l = 0; l < mlp.layer_count(); ++l) {
    auto& w = mlp.weight(l);
    const auto fan_in = (l == 0 && input_fan_in > 0) ? static_cast<double>(input_fan_in)
                                                      : static_cast<double>(w.cols());
    const double limit = std::sqrt(6.0 / fan_in);
    CounterRng rng(seed, static_cast<std::uint64_t>(l));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    }
  }
  return mlp;
}

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    count += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return count;
}

std::vector<double> Mlp::baseline_offset(std::span<const double> baseline) const {
  if (baseline.size() != static_cast<std::size_t>(input_size())) {
    throw ShapeMismatch("baseline width does not match the input layer");
  }
  const auto& w = weights_.front();
  std::vector<double> offset(static_cast<std::size_t>(w.rows()), 0.0);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const double v = baseline[static_cast<std::size_t>(c)];
    if (v != 0.0) axpy(v, w.col(c).data(), offset.data(), w.rows());
  }
  return offset;
}

Scores Mlp::forward(std::span<const double> input) const {
  if (input.size() != static_cast<std::size_t>(input_size())) {
    throw ShapeMismatch("input width " + std::to_string(input.size()) + " != " +
                        std::to_string(input_size()));
  }
  std::vector<int> columns(input.size());
  std::iota(columns.begin(), columns.end(), 0);
  return forward_sparse(columns, input, {});
}

Scores Mlp::forward_sparse(std::span<const int> columns, std::span<const double> values,
                           std::span<const double> baseline_offset) const {
  if (columns.size() != values.size()) throw ShapeMismatch("columns/values length differ");
  std::vector<double> z(biases_.front().data(), biases_.front().data() + biases_.front().size());
  if (!baseline_offset.empty()) {
    if (baseline_offset.size() != z.size()) throw ShapeMismatch("baseline offset width mismatch");
    for (std::size_t r = 0; r < z.size(); ++r) z[r] += baseline_offset[r];
  }
  const auto& w0 = weights_.front();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const int c = columns[i];
    if (c < 0 || c >= w0.cols()) throw ShapeMismatch("active column outside the input layer");
    if (values[i] != 0.0) axpy(values[i], w0.col(c).data(), z.data(), w0.rows());
  }
  for (std::size_t l = 1; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    std::vector<double> next(biases_[l].data(), biases_[l].data() + biases_[l].size());
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const double a = z[static_cast<std::size_t>(c)];
      if (a > 0.0) axpy(a, w.col(c).data(), next.data(), w.rows());
    }
    z = std::move(next);
  }
  Scores scores;
  scores.argmax = argmax_lowest(z);
  scores.values = std::move(z);
  return scores;
}

namespace {

struct Activations {
  std::vector<Eigen::MatrixXd> pre;  // per layer, before ReLU
  Eigen::MatrixXd gathered_weight;   // W1 restricted to the active columns
};

}  // namespace

static Activations run_forward(const std::vector<Eigen::MatrixXd>& weights,
                               const std::vector<Eigen::VectorXd>& biases,
                               const InputBatch& batch) {
  const auto& w0 = weights.front();
  if (batch.active.rows() != static_cast<Eigen::Index>(batch.columns.size())) {
    throw ShapeMismatch("active matrix rows must match the active column count");
  }
  Activations acts;
  acts.gathered_weight.resize(w0.rows(), static_cast<Eigen::Index>(batch.columns.size()));
  for (std::size_t i = 0; i < batch.columns.size(); ++i) {
    const int c = batch.columns[i];
    if (c < 0 || c >= w0.cols()) throw ShapeMismatch("active column outside the input layer");
    acts.gathered_weight.col(static_cast<Eigen::Index>(i)) = w0.col(c);
  }
  Eigen::VectorXd shift = biases.front();
  if (batch.baseline.size() > 0) {
    if (batch.baseline.size() != w0.cols()) throw ShapeMismatch("baseline width mismatch");
    shift += w0 * batch.baseline;
  }
  Eigen::MatrixXd z = acts.gathered_weight * batch.active;
  z.colwise() += shift;
  acts.pre.push_back(std::move(z));
  for (std::size_t l = 1; l < weights.size(); ++l) {
    Eigen::MatrixXd next = weights[l] * relu(acts.pre.back());
    next.colwise() += biases[l];
    acts.pre.push_back(std::move(next));
  }
  return acts;
}

Eigen::MatrixXd Mlp::logits(const InputBatch& batch) const {
  return run_forward(weights_, biases_, batch).pre.back();
}

double Mlp::loss_and_gradient(const InputBatch& batch, std::span<const int> labels,
                              MlpGradient& gradient) const {
  return backward(batch, labels, gradient, true);
}

double Mlp::loss_and_column_gradient(const InputBatch& batch, std::span<const int> labels,
                                     MlpGradient& gradient) const {
  if (batch.baseline.size() > 0) throw InvalidParams("column gradient needs a zero baseline");
  return backward(batch, labels, gradient, false);
}

double Mlp::backward(const InputBatch& batch, std::span<const int> labels, MlpGradient& gradient,
                     bool full_first_layer) const {
  const Eigen::Index n = batch.batch_size();
  if (n < 1 || labels.size() != static_cast<std::size_t>(n)) {
    throw ShapeMismatch("labels must match a nonempty batch");
  }
  auto acts = run_forward(weights_, biases_, batch);
  const auto& logit = acts.pre.back();

  // Softmax cross-entropy, averaged over the batch.
  Eigen::MatrixXd delta(logit.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int label = labels[static_cast<std::size_t>(j)];
    if (label < 0 || label >= logit.rows()) throw InvalidParams("label out of range");
    const double peak = logit.col(j).maxCoeff();
    const Eigen::VectorXd e = (logit.col(j).array() - peak).exp();
    const double total = e.sum();
    delta.col(j) = e / total;
    loss -= (logit(label, j) - peak) - std::log(total);
    delta(label, j) -= 1.0;
  }
  loss /= static_cast<double>(n);
  delta /= static_cast<double>(n);

  const auto layers = weights_.size();
  gradient.weights.resize(layers);
  gradient.biases.resize(layers);
  for (std::size_t l = layers; l-- > 1;) {
    const Eigen::MatrixXd input = relu(acts.pre[l - 1]);
    gradient.weights[l] = delta * input.transpose();
    gradient.biases[l] = delta.rowwise().sum();
    delta = (weights_[l].transpose() * delta).cwiseProduct(
        (acts.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  gradient.biases[0] = delta.rowwise().sum();
  if (!full_first_layer) {
    gradient.weights[0].noalias() = delta * batch.active.transpose();
    return loss;
  }
  auto& g0 = gradient.weights[0];
  g0.setZero(weights_[0].rows(), weights_[0].cols());
  const Eigen::MatrixXd active_grad = delta * batch.active.transpose();
  for (std::size_t i = 0; i < batch.columns.size(); ++i) {
    g0.col(batch.columns[i]) += active_grad.col(static_cast<Eigen::Index>(i));
  }
  if (batch.baseline.size() > 0) g0 += gradient.biases[0] * batch.baseline.transpose();
  return loss;
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// ClassifierModel

ClassifierModel::ClassifierModel(Mlp network, ModelMetadata metadata)
    : network_(std::move(network)), metadata_(std::move(metadata)) {
  const int pixels = metadata_.width * metadata_.height;
  const int width = encoded_channels(metadata_.encoding, metadata_.channels);
  if (network_.input_size() != pixels * width) {
    throw ShapeMismatch("network input " + std::to_string(network_.input_size()) +
                        " does not match encoded image size " + std::to_string(pixels * width));
  }
  null_pixel_ = null_encoding(metadata_.encoding, metadata_.channels, metadata_.mean_pixel);
  if (std::any_of(null_pixel_.begin(), null_pixel_.end(), [](double v) { return v != 0.0; })) {
    std::vector<double> baseline(static_cast<std::size_t>(network_.input_size()));
    for (std::size_t i = 0; i < baseline.size(); ++i) baseline[i] = null_pixel_[i % null_pixel_.size()];
    offset_ = network_.baseline_offset(baseline);
  }
}

EncodedTensor ClassifierModel::encode(const AblatedImage& ablated) const {
  return l0cert::encode(ablated, metadata_.encoding, metadata_.mean_pixel);
}

Scores ClassifierModel::forward(const EncodedTensor& encoded) const {
  const int width = static_cast<int>(null_pixel_.size());
  if (encoded.scheme != metadata_.encoding || encoded.channels != width ||
      encoded.pixel_count != metadata_.width * metadata_.height ||
      encoded.values.size() != static_cast<std::size_t>(network_.input_size())) {
    throw ShapeMismatch("encoded tensor does not match the model input");
  }
  std::vector<int> columns;
  std::vector<double> values;
  columns.reserve(encoded.retained.size() * static_cast<std::size_t>(width));
  values.reserve(columns.capacity());
  for (int p : encoded.retained.indices) {
    for (int c = 0; c < width; ++c) {
      const int column = p * width + c;
      columns.push_back(column);
      values.push_back(encoded.values[static_cast<std::size_t>(column)] -
                       null_pixel_[static_cast<std::size_t>(c)]);
    }
  }
  return network_.forward_sparse(columns, values, offset_);
}

int ClassifierModel::classify(const AblatedImage& ablated) const {
  return forward(encode(ablated)).argmax;
}

void ClassifierModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  LittleEndianWriter w(out);
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(metadata_.encoding == EncodingScheme::kMultichannel ? 0 : 1);
  w.put<std::int32_t>(metadata_.width);
  w.put<std::int32_t>(metadata_.height);
  w.put<std::int32_t>(metadata_.channels);
  w.put<std::int32_t>(metadata_.k);
  w.put<std::uint64_t>(metadata_.train_config_hash);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(metadata_.mean_pixel.size()));
  for (float v : metadata_.mean_pixel) w.put<float>(v);
  const auto& sizes = network_.layer_sizes();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) w.put<std::int32_t>(s);
  for (int l = 0; l < network_.layer_count(); ++l) {
    const auto& weight = network_.weight(l);
    for (Eigen::Index r = 0; r < weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < weight.cols(); ++c) w.put<double>(weight(r, c));
    }
    for (Eigen::Index r = 0; r < network_.bias(l).size(); ++r) w.put<double>(network_.bias(l)(r));
  }
  if (!out) throw std::runtime_error("failed writing model " + path.string());
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::filesystem::filesystem_error("cannot open model", path,
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  }
  char magic[sizeof kModelMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw FormatError(FormatError::Kind::kBadMagic, "not a model file: " + path.string());
  }
  LittleEndianReader r(in);
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw FormatError(FormatError::Kind::kUnsupportedVersion,
                      "unsupported model format version " + std::to_string(version));
  }
  ModelMetadata meta;
  const auto encoding = r.get<std::uint32_t>();
  if (encoding > 1) throw FormatError(FormatError::Kind::kMalformed, "unknown encoding tag");
  meta.encoding = encoding == 0 ? EncodingScheme::kMultichannel : EncodingScheme::kMean;
  meta.width = r.get<std::int32_t>();
  meta.height = r.get<std::int32_t>();
  meta.channels = r.get<std::int32_t>();
  meta.k = r.get<std::int32_t>();
  meta.train_config_hash = r.get<std::uint64_t>();
  const auto mean_count = r.get<std::uint32_t>();
  if (mean_count > 16) throw FormatError(FormatError::Kind::kMalformed, "implausible channel count");
  for (std::uint32_t i = 0; i < mean_count; ++i) meta.mean_pixel.push_back(r.get<float>());
  const auto layer_count = r.get<std::uint32_t>();
  if (layer_count < 2 || layer_count > 64) throw FormatError(FormatError::Kind::kMalformed, "bad layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const auto s = r.get<std::int32_t>();
    if (s < 1 || s > (1 << 24)) throw FormatError(FormatError::Kind::kMalformed, "bad layer size");
    sizes.push_back(s);
  }
  Mlp network(sizes);
  for (int l = 0; l < network.layer_count(); ++l) {
    auto& weight = network.weight(l);
    for (Eigen::Index row = 0; row < weight.rows(); ++row) {
      for (Eigen::Index c = 0; c < weight.cols(); ++c) weight(row, c) = r.get<double>();
    }
    for (Eigen::Index row = 0; row < network.bias(l).size(); ++row) network.bias(l)(row) = r.get<double>();
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(FormatError::Kind::kMalformed, "trailing bytes in model file");
  }
  return ClassifierModel(std::move(network), std::move(meta));
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw InvalidParams("epochs and batch size must be positive");
  if (k < 1) throw InvalidParams("retention constant k must be positive");
  if (!(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0 || weight_decay < 0.0) {
    throw InvalidParams("invalid optimizer settings");
  }
  for (int h : hidden) {
    if (h < 1) throw InvalidParams("hidden layer sizes must be positive");
  }
}

std::string TrainConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "epochs=" << epochs << ";batch=" << batch_size << ";lr=" << learning_rate
      << ";switch=" << lr_switch_epoch << ";decay=" << lr_decay << ";momentum=" << momentum
      << ";wd=" << weight_decay << ";k=" << k << ";seed=" << seed
      << ";encoding=" << to_string(encoding) << ";hidden=";
  for (int h : hidden) out << h << ',';
  return out.str();
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(canonical()); }

ClassifierModel train(const Dataset& dataset, const TrainConfig& config, TrainHistory* history) {
  config.validate();
  if (dataset.empty()) throw InvalidParams("cannot train on an empty dataset");
  dataset.validate();
  const Image& first = dataset.images.front();
  for (const auto& image : dataset.images) {
    if (image.width != first.width || image.height != first.height || image.channels != first.channels) {
      throw ShapeMismatch("training images differ in shape");
    }
  }
  const int d = first.pixel_count();
  if (config.k > d) throw InvalidParams("k exceeds the pixel count");

  ModelMetadata meta;
  meta.encoding = config.encoding;
  meta.width = first.width;
  meta.height = first.height;
  meta.channels = first.channels;
  meta.k = config.k;
  meta.train_config_hash = config.hash();
  if (config.encoding == EncodingScheme::kMean) meta.mean_pixel = mean_pixel(dataset);

  const int width = encoded_channels(config.encoding, first.channels);
  const auto null_pixel = null_encoding(config.encoding, first.channels, meta.mean_pixel);
  std::vector<int> sizes{d * width};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(dataset.num_classes);
  Mlp network = Mlp::initialized(sizes, derive_seed(config.seed, kInitStream));

  Eigen::VectorXd baseline;
  if (config.encoding == EncodingScheme::kMean) {
    baseline.resize(sizes.front());
    for (Eigen::Index i = 0; i < baseline.size(); ++i) {
      baseline(i) = null_pixel[static_cast<std::size_t>(i) % null_pixel.size()];
    }
  }

  MlpGradient velocity;
  for (int l = 0; l < network.layer_count(); ++l) {
    velocity.weights.push_back(Eigen::MatrixXd::Zero(network.weight(l).rows(), network.weight(l).cols()));
    velocity.biases.push_back(Eigen::VectorXd::Zero(network.bias(l).size()));
  }

  const std::size_t n = dataset.size();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  std::vector<std::size_t> order(n);
  MlpGradient gradient;
  std::vector<int> labels;

  // Only the retained columns of the first layer receive gradient, so with no
  // baseline and no weight decay their momentum steps are applied lazily: a
  // column that sat out m steps decays by mu^m and moves by
  // lr * v * (mu + ... + mu^m) when next touched or at the end of the epoch.
  const bool lazy_first_layer = baseline.size() == 0 && config.weight_decay == 0.0;
  const double mu = config.momentum;
  std::vector<double> mu_power(steps_per_epoch + 1, 1.0);
  std::vector<double> mu_sum(steps_per_epoch + 1, 0.0);
  for (std::size_t m = 1; m <= steps_per_epoch; ++m) {
    mu_power[m] = mu_power[m - 1] * mu;
    mu_sum[m] = mu_sum[m - 1] + mu_power[m];
  }
  std::vector<std::size_t> synced(static_cast<std::size_t>(sizes.front()), 0);
  auto& w0 = network.weight(0);
  auto& v0 = velocity.weights[0];
  const auto catch_up = [&](int column, std::size_t step, double lr) {
    const auto c = static_cast<std::size_t>(column);
    const std::size_t m = step - synced[c];
    if (m == 0) return;
    w0.col(column) -= (lr * mu_sum[m]) * v0.col(column);
    v0.col(column) *= mu_power[m];
    synced[c] = step;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = epoch < config.lr_switch_epoch ? config.learning_rate
                                                     : config.learning_rate * config.lr_decay;
    std::iota(order.begin(), order.end(), 0);
    CounterRng shuffle(derive_seed(config.seed, kShuffleStream), static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    std::fill(synced.begin(), synced.end(), 0);

    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = step * batch_size;
      const std::size_t end = std::min(n, begin + batch_size);
      const auto counter = static_cast<std::uint64_t>(epoch) * steps_per_epoch + step;
      const IndexSet retained = sample_index_set(d, config.k, derive_seed(config.seed, kAblationStream), counter);

      InputBatch batch;
      batch.baseline = baseline;
      for (int p : retained.indices) {
        for (int c = 0; c < width; ++c) batch.columns.push_back(p * width + c);
      }
      batch.active.resize(static_cast<Eigen::Index>(batch.columns.size()),
                          static_cast<Eigen::Index>(end - begin));
      labels.clear();
      for (std::size_t j = begin; j < end; ++j) {
        const auto idx = order[j];
        const auto encoded = encode(ablate(dataset.images[idx], retained), config.encoding, meta.mean_pixel);
        for (std::size_t i = 0; i < batch.columns.size(); ++i) {
          batch.active(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - begin)) =
              encoded.values[static_cast<std::size_t>(batch.columns[i])] -
              null_pixel[i % static_cast<std::size_t>(width)];
        }
        labels.push_back(dataset.labels[idx]);
      }

      if (lazy_first_layer) {
        // Bring the touched columns up to date before they take part in the forward pass.
        for (int column : batch.columns) catch_up(column, step, lr);
        epoch_loss += network.loss_and_column_gradient(batch, labels, gradient) * static_cast<double>(end - begin);
      } else {
        epoch_loss += network.loss_and_gradient(batch, labels, gradient) * static_cast<double>(end - begin);
      }
      for (int l = 0; l < network.layer_count(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        if (l == 0 && lazy_first_layer) {
          for (std::size_t i = 0; i < batch.columns.size(); ++i) {
            const int column = batch.columns[i];
            v0.col(column) = mu * v0.col(column) + gradient.weights[0].col(static_cast<Eigen::Index>(i));
            w0.col(column) -= lr * v0.col(column);
            synced[static_cast<std::size_t>(column)] = step + 1;
          }
        } else {
          velocity.weights[li] = mu * velocity.weights[li] + gradient.weights[li] +
                                 config.weight_decay * network.weight(l);
          network.weight(l) -= lr * velocity.weights[li];
        }
        velocity.biases[li] = mu * velocity.biases[li] + gradient.biases[li] +
                              config.weight_decay * network.bias(l);
        network.bias(l) -= lr * velocity.biases[li];
      }
    }
    if (lazy_first_layer) {
      for (int column = 0; column < sizes.front(); ++column) catch_up(column, steps_per_epoch, lr);
    }
    if (history) history->epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  if (!network.all_finite()) throw std::runtime_error("training diverged: non-finite parameters");
  return ClassifierModel(std::move(network), std::move(meta));
}

double ablated_accuracy(const BaseClassifier& classifier, const Dataset& dataset, int k,
                        std::uint64_t seed) {
  if (dataset.empty()) throw EmptyResults("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& image = dataset.images[i];
    const auto set = sample_index_set(image.pixel_count(), k, seed, i);
    if (classifier.classify(ablate(image, set)) == dataset.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

double gradient_check(const Mlp& model, std::span<const double> input, int label, double step) {
  // Deviations are measured relative to max(|analytic|, |numeric|, kFloor) so
  // that parameters with vanishing gradients compare on an absolute scale.
  constexpr double kFloor = 1e-6;
  if (input.size() != static_cast<std::size_t>(model.input_size())) {
    throw ShapeMismatch("gradient_check input width mismatch");
  }
  Eigen::MatrixXd column(model.input_size(), 1);
  for (std::size_t i = 0; i < input.size(); ++i) column(static_cast<Eigen::Index>(i), 0) = input[i];
  const auto batch = InputBatch::dense(column);
  const int labels[1] = {label};

  MlpGradient analytic;
  model.loss_and_gradient(batch, labels, analytic);

  Mlp probe = model;
  MlpGradient scratch;
  auto loss_at = [&](double& parameter, double value) {
    const double saved = parameter;
    parameter = value;
    const double loss = probe.loss_and_gradient(batch, labels, scratch);
    parameter = saved;
    return loss;
  };
  double worst = 0.0;
  auto compare = [&](double& parameter, double exact) {
    const double x = parameter;
    const double numeric = (loss_at(parameter, x + step) - loss_at(parameter, x - step)) / (2.0 * step);
    const double scale = std::max({std::fabs(exact), std::fabs(numeric), kFloor});
    worst = std::max(worst, std::fabs(exact - numeric) / scale);
  };
  for (int l = 0; l < probe.layer_count(); ++l) {
    auto& w = probe.weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        compare(w(r, c), analytic.weights[static_cast<std::size_t>(l)](r, c));
      }
    }
    auto& b = probe.bias(l);
    for (Eigen::Index r = 0; r < b.size(); ++r) compare(b(r), analytic.biases[static_cast<std::size_t>(l)](r));
  }
  return worst;
}

}  // namespace l0cert
