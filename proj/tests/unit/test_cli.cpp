#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "commands.hpp"
#include "l0cert/errors.hpp"
#include "l0cert/records.hpp"

using namespace l0cert;
using l0cert::cli::RunConfig;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() {
  const char* dir = std::getenv("L0CERT_DATA_DIR");
  return dir ? fs::path(dir) : fs::path("data");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / (name + "-" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig tiny_config(const fs::path& work) {
  RunConfig config;
  config.data_dir = data_dir();
  config.model = work / "model.bin";
  config.train_subset = 300;
  config.subset = 8;
  config.epochs = 2;
  config.train_batch = 16;
  config.hidden = {16};
  config.n0 = 50;
  config.n = 200;
  config.rho_max = 5;
  return config;
}

// Network that ignores its input and always prefers class 3.
void write_constant_model(const fs::path& path) {
  Mlp mlp({1568, 10});
  mlp.bias(0)(3) = 1.0;
  ModelMetadata meta;
  ClassifierModel(mlp, meta).save(path);
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string command = std::string(L0CERT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("train reports a missing dataset") {
  TempDir work("l0cert-cli-missing");
  auto config = tiny_config(work.path);
  config.data_dir = work.path / "nowhere";
  std::ostringstream log;
  CHECK_THROWS_AS(cli::cmd_train(config, log), fs::filesystem_error);
}

TEST_CASE("train is deterministic and its model certifies") {
  TempDir work("l0cert-cli-train");
  auto config = tiny_config(work.path);
  std::ostringstream log;
  const auto summary = cli::cmd_train(config, log);
  CHECK(summary.epoch_loss.size() == 2);
  CHECK(summary.test_ablated_accuracy.has_value());
  CHECK(log.str().find("base classifier ablated accuracy") != std::string::npos);
  const auto first = slurp(config.model);
  cli::cmd_train(config, log);
  CHECK(slurp(config.model) == first);

  config.out = work.path / "certify.jsonl";
  const auto report = cli::cmd_certify(config, log);
  CHECK(report.total == 8);
  CHECK(report.certified_accuracy.size() == 6);
  CHECK(std::is_sorted(report.certified_accuracy.rbegin(), report.certified_accuracy.rend()));
  CHECK(report.accuracy + report.abstain_rate + report.error_rate == doctest::Approx(1.0));
  const auto results = read_results(config.out);
  CHECK(results.header.config_hash == report.config_hash);
  CHECK(results.records.size() == 8);
  CHECK(fs::exists(config.out.string() + ".report.json"));

  // Byte-identical reruns.
  const auto bytes = slurp(config.out);
  cli::cmd_certify(config, log);
  CHECK(slurp(config.out) == bytes);

  auto mismatch = config;
  mismatch.k = 44;
  CHECK_THROWS_AS(cli::cmd_certify(mismatch, log), InvalidParams);
  mismatch = config;
  mismatch.encoding = "mean";
  CHECK_THROWS_AS(cli::cmd_certify(mismatch, log), InvalidParams);

  config.out = work.path / "predict.jsonl";
  cli::cmd_predict(config, log);
  std::ifstream predictions(config.out);
  int lines = 0;
  for (std::string line; std::getline(predictions, line);) ++lines;
  CHECK(lines == 8);
}

TEST_CASE("constant model reproduces the smoothing examples") {
  TempDir work("l0cert-cli-constant");
  auto config = tiny_config(work.path);
  write_constant_model(config.model);
  config.n = 10000;
  config.n0 = 100;
  config.subset = 5;
  config.out = work.path / "certify.jsonl";
  std::ostringstream log;
  const auto report = cli::cmd_certify(config, log);
  const auto results = read_results(config.out);
  for (const auto& record : results.records) {
    const auto r = certification_from_json(record);
    CHECK(r.predicted == 3);
    CHECK(r.p_lower == doctest::Approx(std::pow(0.05, 1.0 / 10000)).epsilon(1e-10));
    CHECK(r.radius.has_value() == (r.label == 3));
  }
  CHECK(report.abstain_rate == 0.0);
}

TEST_CASE("attack appends to a results file with the same hash only") {
  TempDir work("l0cert-cli-attack");
  auto config = tiny_config(work.path);
  write_constant_model(config.model);
  config.subset = 3;
  config.restarts = 1;
  config.attack_samples = 50;
  config.out = work.path / "run.jsonl";
  config.adversarial_dir = work.path / "adv";
  std::ostringstream log;
  cli::cmd_certify(config, log);
  const auto summary = cli::cmd_attack(config, log);
  CHECK(summary.images == 3);
  CHECK(summary.violations == 0);
  const auto results = read_results(config.out);
  CHECK(results.records.size() == 6);
  CHECK(results.records.back().at("type") == "attack");
  // A constant network cannot be attacked, except where the clean image is already wrong.
  for (std::size_t i = 3; i < 6; ++i) {
    const auto& r = results.records[i];
    CHECK((r.at("outcome") == "budget_exhausted" || r.at("magnitude") == 0));
  }

  auto other = config;
  other.n0 = 60;
  CHECK_THROWS_AS(cli::cmd_attack(other, log), InvalidParams);
}

TEST_CASE("analyze writes the curve and information tables") {
  TempDir work("l0cert-cli-analyze");
  RunConfig config;
  config.out = work.path / "analysis";
  config.rho_max = 10;
  std::ostringstream log;
  cli::cmd_analyze(config, log);
  const auto curve = slurp(config.out / "delta_curve.csv");
  CHECK(curve.rfind("rho,k=5,k=10", 0) == 0);
  const auto info = slurp(config.out / "mutual_information.csv");
  CHECK(info.find("ablation,k=14521 |S|=256,116168") != std::string::npos);
  CHECK(info.find(",50590.4") != std::string::npos);
  CHECK(log.str().find("information ratio") != std::string::npos);
}

TEST_CASE("command-line binary: config file precedence and errors") {
  TempDir work("l0cert-cli-binary");
  const auto log = work.path / "log.txt";
  {
    std::ofstream ini(work.path / "run.ini");
    ini << "[analyze]\nrho-max=4\nks=5,45\n";
  }
  CHECK(run_cli("--config " + (work.path / "run.ini").string() + " analyze", log) == 0);
  auto text = slurp(log);
  CHECK(text.find("rho,k=5,k=45\n") != std::string::npos);
  CHECK(text.find("\n4,") != std::string::npos);
  CHECK(text.find("\n5,") == std::string::npos);

  CHECK(run_cli("--config " + (work.path / "run.ini").string() + " analyze --rho-max 6", log) == 0);
  text = slurp(log);
  CHECK(text.find("\n6,") != std::string::npos);

  CHECK(run_cli("certify --model " + (work.path / "absent.bin").string(), log) == 1);
  CHECK(slurp(log).rfind("error:", 0) == 0);
  CHECK(run_cli("bogus", log) != 0);
  CHECK(run_cli("certify --certificate cor9", log) != 0);
}
