#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using l0cert::cli::RunConfig;

void add_smoothing_options(CLI::App& cmd, RunConfig& config) {
  cmd.add_option("--model", config.model, "Model file")->capture_default_str();
  cmd.add_option("--k", config.k, "Retained pixels per ablation")->capture_default_str();
  cmd.add_option("--alpha", config.alpha, "Confidence parameter")->capture_default_str();
  cmd.add_option("--n0", config.n0, "Samples for class selection / prediction")->capture_default_str();
  cmd.add_option("--n", config.n, "Samples for bounding the top class")->capture_default_str();
  cmd.add_option("--certificate", config.certificate, "cor1 or cor2")
      ->check(CLI::IsMember({"cor1", "cor2"}))
      ->capture_default_str();
  cmd.add_option("--subset", config.subset, "Use N test images (0 = all)")->capture_default_str();
  cmd.add_flag("!--subset-first", config.subset_random, "Take the first N images instead of a seeded random N");
  cmd.add_option("--batch-size", config.batch_size, "Ablations per classifier batch")->capture_default_str();
  cmd.add_option("--test-images", config.test_images, "IDX test images");
  cmd.add_option("--test-labels", config.test_labels, "IDX test labels");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig config;
  if (const char* dir = std::getenv("L0CERT_DATA_DIR")) config.data_dir = dir;

  CLI::App app{"Certified L0 robustness from votes over ablated images"};
  app.set_config("--config", "", "TOML/INI configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", config.seed, "Random seed")->capture_default_str();
  app.add_option("--encoding", config.encoding, "NULL encoding")
      ->check(CLI::IsMember({"multichannel", "mean"}))
      ->capture_default_str();
  app.add_option("--out", config.out, "Output path");
  app.add_option("--data-dir", config.data_dir, "Directory with IDX files (env L0CERT_DATA_DIR)")
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "Train the base classifier on ablated inputs");
  train->add_option("--model", config.model, "Model file to write")->capture_default_str();
  train->add_option("--k", config.k, "Retained pixels per ablation")->capture_default_str();
  train->add_option("--epochs", config.epochs)->capture_default_str();
  train->add_option("--batch", config.train_batch, "Minibatch size")->capture_default_str();
  train->add_option("--lr", config.learning_rate)->capture_default_str();
  train->add_option("--lr-switch-epoch", config.lr_switch_epoch, "Epoch at which lr drops 10x")
      ->capture_default_str();
  train->add_option("--momentum", config.momentum)->capture_default_str();
  train->add_option("--weight-decay", config.weight_decay)->capture_default_str();
  train->add_option("--hidden", config.hidden, "Hidden layer sizes")->delimiter(',');
  train->add_option("--train-subset", config.train_subset, "Use N training images (0 = all)");
  train->add_option("--subset", config.subset, "Use N test images for the accuracy report");
  train->add_option("--train-images", config.train_images, "IDX training images");
  train->add_option("--train-labels", config.train_labels, "IDX training labels");
  train->add_option("--test-images", config.test_images, "IDX test images");
  train->add_option("--test-labels", config.test_labels, "IDX test labels");

  auto* certify = app.add_subcommand("certify", "Certify test images and report certified accuracy");
  add_smoothing_options(*certify, config);
  certify->add_option("--rho-max", config.rho_max, "Largest rho in the certified-accuracy curve")
      ->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Smoothed predictions with abstention");
  add_smoothing_options(*predict, config);

  auto* attack = app.add_subcommand("attack", "Pointwise L0 attack on the smoothed classifier");
  add_smoothing_options(*attack, config);
  attack->add_option("--restarts", config.restarts)->capture_default_str();
  attack->add_option("--attack-samples", config.attack_samples, "Ablated samples per query")
      ->capture_default_str();
  attack->add_option("--max-sweeps", config.max_sweeps)->capture_default_str();
  attack->add_option("--adversarial-dir", config.adversarial_dir, "Export adversarial images as raw float32");

  auto* analyze = app.add_subcommand("analyze", "Delta curves and mutual-information comparison");
  analyze->add_option("--d", config.analyze_d, "Pixel count for the delta curve")->capture_default_str();
  analyze->add_option("--ks", config.analyze_ks, "Retention constants")->delimiter(',');
  analyze->add_option("--rho-max", config.rho_max)->capture_default_str();
  analyze->add_option("--info-k", config.info_k)->capture_default_str();
  analyze->add_option("--info-d", config.info_d)->capture_default_str();
  analyze->add_option("--info-s", config.info_s)->capture_default_str();
  analyze->add_option("--info-kappa", config.info_kappa)->capture_default_str();

  // The attack desk default is 50 images unless --subset says otherwise.
  attack->preparse_callback([&](std::size_t) { config.subset = 50; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      l0cert::cli::cmd_train(config, std::cout);
    } else if (*certify) {
      l0cert::cli::cmd_certify(config, std::cout);
    } else if (*predict) {
      l0cert::cli::cmd_predict(config, std::cout);
    } else if (*attack) {
      const auto summary = l0cert::cli::cmd_attack(config, std::cout);
      return summary.violations == 0 ? 0 : 3;
    } else if (*analyze) {
      l0cert::cli::cmd_analyze(config, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
