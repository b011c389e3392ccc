#include "l0cert/records.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "l0cert/errors.hpp"
#include "l0cert/hashing.hpp"

namespace l0cert {
namespace {

constexpr const char* kNotApplicable = "N/A";
constexpr const char* kInfinity = "inf";

nlohmann::json optional_int(const std::optional<int>& value, const char* missing) {
  return value ? nlohmann::json(*value) : nlohmann::json(missing);
}

std::optional<int> read_optional_int(const nlohmann::json& value) {
  if (value.is_string()) {
    if (value.get<std::string>() != kNotApplicable && value.get<std::string>() != kInfinity) {
      throw FormatError(FormatError::Kind::kMalformed, "unexpected token " + value.dump());
    }
    return std::nullopt;
  }
  return value.get<int>();
}

nlohmann::json header_json(const ResultsHeader& header) {
  return {{"format", kResultsFormatName},
          {"version", header.version},
          {"config_hash", header.config_hash},
          {"config", header.config}};
}

ResultsHeader parse_header(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::kMalformed, std::string("bad results header: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kResultsFormatName) {
    throw FormatError(FormatError::Kind::kBadMagic, "not an l0cert results file");
  }
  ResultsHeader header;
  header.version = j.at("version").get<int>();
  if (header.version != kResultsFormatVersion) {
    throw FormatError(FormatError::Kind::kUnsupportedVersion,
                      "unsupported results version " + std::to_string(header.version));
  }
  header.config_hash = j.at("config_hash").get<std::string>();
  header.config = j.value("config", nlohmann::json::object());
  return header;
}

}  // namespace

nlohmann::json to_json(const CertificationResult& result) {
  return {{"type", "certification"},
          {"id", result.id},
          {"label", result.label},
          {"predicted", optional_int(result.predicted, "abstain")},
          {"selected", result.selected},
          {"p_lower", result.p_lower},
          {"p_runner_up_upper", result.p_runner_up_upper},
          {"radius", optional_int(result.radius, kNotApplicable)},
          {"n0", result.n0},
          {"n", result.n},
          {"top_hits", result.top_hits}};
}

CertificationResult certification_from_json(const nlohmann::json& record) {
  if (record.value("type", "") != "certification") {
    throw FormatError(FormatError::Kind::kMalformed, "not a certification record");
  }
  CertificationResult r;
  r.id = record.at("id").get<std::string>();
  r.label = record.at("label").get<int>();
  const auto& predicted = record.at("predicted");
  if (predicted.is_string()) {
    if (predicted.get<std::string>() != "abstain") {
      throw FormatError(FormatError::Kind::kMalformed, "bad predicted token");
    }
  } else {
    r.predicted = predicted.get<int>();
  }
  r.selected = record.at("selected").get<int>();
  r.p_lower = record.at("p_lower").get<double>();
  r.p_runner_up_upper = record.at("p_runner_up_upper").get<double>();
  r.radius = read_optional_int(record.at("radius"));
  r.n0 = record.at("n0").get<std::int64_t>();
  r.n = record.at("n").get<std::int64_t>();
  r.top_hits = record.at("top_hits").get<std::int64_t>();
  return r;
}

nlohmann::json to_json(const AttackResult& result, std::optional<int> certified_radius) {
  return {{"type", "attack"},
          {"id", result.id},
          {"label", result.label},
          {"success", result.success},
          {"magnitude", optional_int(result.magnitude, kInfinity)},
          {"outcome", std::string(to_string(result.outcome))},
          {"queries", result.queries},
          {"certified_radius", optional_int(certified_radius, kNotApplicable)}};
}

ResultsFile read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(FormatError::Kind::kTruncated, "empty results file");
  ResultsFile file;
  file.header = parse_header(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      file.records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatError::Kind::kMalformed, std::string("bad record: ") + e.what());
    }
  }
  return file;
}

ResultsWriter::ResultsWriter(const std::filesystem::path& path, const ResultsHeader& header, bool append) {
  const bool extend = append && std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
  if (extend) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto existing = parse_header(line);
    if (existing.config_hash != header.config_hash) {
      throw InvalidParams("refusing to append: " + path.string() + " has config hash " +
                          existing.config_hash + ", this run has " + header.config_hash);
    }
    out_.open(path, std::ios::app);
  } else {
    out_.open(path, std::ios::trunc);
  }
  if (!out_) throw std::runtime_error("cannot write results file " + path.string());
  if (!extend) out_ << header_json(header).dump() << '\n';
}

void ResultsWriter::write(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("failed writing results record");
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(fnv1a64(bytes));
}

void export_raw_tensor(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (float v : image.values) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof v);
    out.write(reinterpret_cast<const char*>(bytes), sizeof v);
  }
  if (!out) throw std::runtime_error("cannot write tensor " + path.string());
}

}  // namespace l0cert
