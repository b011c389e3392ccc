#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "l0cert/analysis.hpp"
#include "l0cert/attack.hpp"
#include "l0cert/classifier.hpp"
#include "l0cert/datasets.hpp"
#include "l0cert/errors.hpp"
#include "l0cert/hashing.hpp"
#include "l0cert/random.hpp"
#include "l0cert/records.hpp"

namespace l0cert::cli {
namespace {

using Clock = std::chrono::steady_clock;

std::filesystem::path resolve(const std::filesystem::path& explicit_path,
                              const std::filesystem::path& data_dir, const char* name) {
  return explicit_path.empty() ? data_dir / name : explicit_path;
}

Dataset load_split(const RunConfig& config, Split split) {
  const bool train = split == Split::kTrain;
  const auto images = train ? resolve(config.train_images, config.data_dir, "train-images-idx3-ubyte.gz")
                            : resolve(config.test_images, config.data_dir, "t10k-images-idx3-ubyte.gz");
  const auto labels = train ? resolve(config.train_labels, config.data_dir, "train-labels-idx1-ubyte.gz")
                            : resolve(config.test_labels, config.data_dir, "t10k-labels-idx1-ubyte.gz");
  for (const auto& path : {images, labels}) {
    if (!std::filesystem::exists(path)) {
      throw std::filesystem::filesystem_error("dataset file not found", path,
                                              std::make_error_code(std::errc::no_such_file_or_directory));
    }
  }
  auto dataset = load_idx(images, labels, split);
  const auto limit = train ? config.train_subset : config.subset;
  if (limit == 0) return dataset;
  return config.subset_random ? random_n(dataset, limit, derive_seed(config.seed, train ? 11 : 12))
                              : first_n(dataset, limit);
}

SmoothingConfig smoothing_config(const RunConfig& config, const ClassifierModel& model) {
  const auto& meta = model.metadata();
  if (config.k != meta.k) {
    throw InvalidParams("k mismatch: model was trained with k=" + std::to_string(meta.k) +
                        " but k=" + std::to_string(config.k) + " was requested");
  }
  if (parse_encoding(config.encoding) != meta.encoding) {
    throw InvalidParams("encoding mismatch: model expects " + std::string(to_string(meta.encoding)));
  }
  SmoothingConfig s;
  s.d = meta.width * meta.height;
  s.k = config.k;
  s.c = model.num_classes();
  s.alpha = config.alpha;
  s.n0 = config.n0;
  s.n = config.n;
  s.seed = config.seed;
  s.encoding = meta.encoding;
  s.mode = parse_certificate_mode(config.certificate);
  s.batch_size = config.batch_size;
  s.validate();
  return s;
}

ResultsHeader results_header(const RunConfig& config, const SmoothingConfig& smoothing) {
  ResultsHeader header;
  header.config = {{"smoothing", smoothing.canonical()},
                   {"model_hash", file_hash(config.model)},
                   {"subset", config.subset},
                   {"subset_random", config.subset_random}};
  header.config_hash = to_hex(fnv1a64(header.config.dump()));
  return header;
}

std::filesystem::path output_path(const RunConfig& config, const char* fallback) {
  return config.out.empty() ? std::filesystem::path(fallback) : config.out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

TrainSummary cmd_train(const RunConfig& config, std::ostream& log) {
  const auto train_set = load_split(config, Split::kTrain);
  std::optional<Dataset> test_set;
  try {
    test_set = load_split(config, Split::kTest);
  } catch (const std::filesystem::filesystem_error&) {
    // Optional: accuracy is then reported on the training split only.
  }

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.train_batch;
  tc.learning_rate = config.learning_rate;
  tc.lr_switch_epoch = config.lr_switch_epoch;
  tc.momentum = config.momentum;
  tc.weight_decay = config.weight_decay;
  tc.k = config.k;
  tc.seed = config.seed;
  tc.hidden = config.hidden;
  tc.encoding = parse_encoding(config.encoding);

  log << "training on " << train_set.size() << " images, k=" << tc.k << ", " << tc.epochs
      << " epochs\n";
  const auto start = Clock::now();
  TrainHistory history;
  const auto model = train(train_set, tc, &history);
  for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
    log << "  epoch " << e + 1 << " loss " << history.epoch_loss[e] << '\n';
  }
  model.save(config.model);

  TrainSummary summary;
  summary.epoch_loss = history.epoch_loss;
  const auto eval_seed = derive_seed(config.seed, 21);
  summary.train_ablated_accuracy = ablated_accuracy(model, first_n(train_set, 2000), tc.k, eval_seed);
  log << "base classifier ablated accuracy (train) " << summary.train_ablated_accuracy << '\n';
  if (test_set) {
    summary.test_ablated_accuracy = ablated_accuracy(model, *test_set, tc.k, eval_seed);
    log << "base classifier ablated accuracy (test)  " << *summary.test_ablated_accuracy << '\n';
  }
  log << "model written to " << config.model.string() << " in "
      << std::chrono::duration<double>(Clock::now() - start).count() << " s\n";
  return summary;
}

EvaluationReport cmd_certify(const RunConfig& config, std::ostream& log) {
  const auto model = ClassifierModel::load(config.model);
  const auto smoothing = smoothing_config(config, model);
  const auto test_set = load_split(config, Split::kTest);
  const auto header = results_header(config, smoothing);
  const auto out = output_path(config, "certify.jsonl");

  const auto start = Clock::now();
  std::vector<CertificationResult> results;
  {
    ResultsWriter writer(out, header, false);
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      auto result = certify(test_set.images[i], test_set.labels[i], model, smoothing,
                            "test-" + std::to_string(i));
      writer.write(to_json(result));
      results.push_back(std::move(result));
    }
  }
  auto report = summarize(results, 0, config.rho_max);
  report.config_hash = header.config_hash;
  report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  log << report.to_text();

  nlohmann::json summary = {{"timestamp", utc_timestamp()},
                            {"config_hash", report.config_hash},
                            {"images", report.total},
                            {"accuracy", report.accuracy},
                            {"abstain_rate", report.abstain_rate},
                            {"error_rate", report.error_rate},
                            {"median_certified_robustness",
                             report.median_radius ? nlohmann::json(*report.median_radius) : nlohmann::json("N/A")},
                            {"certified_accuracy", report.certified_accuracy},
                            {"wall_clock_seconds", report.wall_clock_seconds}};
  std::ofstream(out.string() + ".report.json") << summary.dump(2) << '\n';
  return report;
}

void cmd_predict(const RunConfig& config, std::ostream& log) {
  const auto model = ClassifierModel::load(config.model);
  const auto smoothing = smoothing_config(config, model);
  const auto test_set = load_split(config, Split::kTest);
  std::size_t correct = 0;
  std::size_t abstained = 0;
  std::ofstream out;
  if (!config.out.empty()) out.open(config.out);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto prediction = predict(test_set.images[i], model, smoothing);
    if (prediction.abstained()) ++abstained;
    if (prediction.label == test_set.labels[i]) ++correct;
    if (out.is_open()) {
      out << nlohmann::json{{"id", "test-" + std::to_string(i)},
                            {"label", test_set.labels[i]},
                            {"predicted", prediction.label ? nlohmann::json(*prediction.label)
                                                           : nlohmann::json("abstain")},
                            {"top_count", prediction.top_count},
                            {"second_count", prediction.second_count}}
                 .dump()
          << '\n';
    }
  }
  const auto n = static_cast<double>(test_set.size());
  log << "predicted " << test_set.size() << " images: accuracy " << correct / n << ", abstained "
      << abstained / n << '\n';
}

AttackSummary cmd_attack(const RunConfig& config, std::ostream& log) {
  const auto model = ClassifierModel::load(config.model);
  const auto smoothing = smoothing_config(config, model);
  const auto test_set = load_split(config, Split::kTest);
  const auto header = results_header(config, smoothing);
  const auto out = output_path(config, "attack.jsonl");

  AttackConfig attack;
  attack.restarts = config.restarts;
  attack.samples = config.attack_samples;
  attack.max_sweeps = config.max_sweeps;
  attack.seed = derive_seed(config.seed, 31);
  if (!config.adversarial_dir.empty()) std::filesystem::create_directories(config.adversarial_dir);

  AttackSummary summary;
  std::vector<AttackResult> results;
  ResultsWriter writer(out, header, true);
  log << "  id        label  certified  attack  outcome\n";
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto id = "test-" + std::to_string(i);
    const auto certificate = certify(test_set.images[i], test_set.labels[i], model, smoothing, id);
    auto result = pointwise_attack(test_set.images[i], test_set.labels[i], model, smoothing, attack, id);
    const bool violation = certificate.radius && result.magnitude && *result.magnitude <= *certificate.radius;
    if (violation) ++summary.violations;
    writer.write(to_json(result, certificate.radius));
    if (!config.adversarial_dir.empty() && result.success) {
      export_raw_tensor(result.adversarial, config.adversarial_dir / (id + ".f32"));
    }
    log << "  " << std::left << std::setw(10) << id << std::setw(7) << result.label << std::setw(11)
        << (certificate.radius ? std::to_string(*certificate.radius) : "N/A") << std::setw(8)
        << (result.magnitude ? std::to_string(*result.magnitude) : "inf") << to_string(result.outcome)
        << (violation ? "  VIOLATION" : "") << '\n';
    results.push_back(std::move(result));
  }
  summary.images = results.size();
  summary.median_magnitude = median_attack_magnitude(results);
  log << "median adversarial attack magnitude " << summary.median_magnitude << " over "
      << summary.images << " images; certificate violations " << summary.violations << '\n';
  return summary;
}

void cmd_analyze(const RunConfig& config, std::ostream& log) {
  const auto curve = delta_curve(config.analyze_d, config.analyze_ks, 0,
                                 std::min(config.rho_max, config.analyze_d));
  const double ablate_bits = mutual_info_ablate(config.info_k, config.info_s);
  const double substitution_bits = mutual_info_substitution(config.info_d, config.info_s, config.info_kappa);

  std::ostringstream info;
  info << std::setprecision(10) << "scheme,parameters,bits\n"
       << "ablation,k=" << config.info_k << " |S|=" << config.info_s << ',' << ablate_bits << '\n'
       << "substitution,d=" << config.info_d << " |S|=" << config.info_s
       << " kappa=" << config.info_kappa << ',' << substitution_bits << '\n';

  if (config.out.empty()) {
    log << curve.to_csv() << '\n' << info.str();
  } else {
    std::filesystem::create_directories(config.out);
    std::ofstream(config.out / "delta_curve.csv") << curve.to_csv();
    std::ofstream(config.out / "mutual_information.csv") << info.str();
    log << "wrote " << (config.out / "delta_curve.csv").string() << " and "
        << (config.out / "mutual_information.csv").string() << '\n';
  }
  log << "information ratio ablation/substitution " << ablate_bits / substitution_bits << '\n';
}

}  // namespace l0cert::cli
