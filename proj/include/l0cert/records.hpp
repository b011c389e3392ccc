#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l0cert/attack.hpp"
#include "l0cert/smoothing.hpp"

namespace l0cert {

/// Results files are JSON Lines: a header object followed by one record per
/// line. Missing radii are written as "N/A" and unbounded magnitudes as "inf".
inline constexpr int kResultsFormatVersion = 1;
inline constexpr const char* kResultsFormatName = "l0cert-results";

struct ResultsHeader {
  int version = kResultsFormatVersion;
  std::string config_hash;
  nlohmann::json config;  ///< the configuration the hash was computed from
};

nlohmann::json to_json(const CertificationResult& result);
CertificationResult certification_from_json(const nlohmann::json& record);

/// `certified_radius` is the certificate of the same image, when known.
nlohmann::json to_json(const AttackResult& result, std::optional<int> certified_radius = std::nullopt);

struct ResultsFile {
  ResultsHeader header;
  std::vector<nlohmann::json> records;
};

ResultsFile read_results(const std::filesystem::path& path);

/// Single writer for a results file. In append mode an existing file must
/// carry the same config hash, otherwise construction throws.
class ResultsWriter {
 public:
  ResultsWriter(const std::filesystem::path& path, const ResultsHeader& header, bool append);

  void write(const nlohmann::json& record);

 private:
  std::ofstream out_;
};

/// FNV-1a hash of a file's bytes, hex encoded.
std::string file_hash(const std::filesystem::path& path);

/// Raw little-endian float32 dump of the pixel buffer (pixel-major channels).
void export_raw_tensor(const Image& image, const std::filesystem::path& path);

}  // namespace l0cert
