#include "hjam/csv.hpp"

#include "hjam/config.hpp"
#include "hjam/errors.hpp"
#include "hjam/kernels.hpp"

#include <Eigen/Core>

#include <cstdio>

namespace hjam {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < header.size(); ++j) out_ << (j ? "," : "") << header[j];
  out_ << '\n';
}

void CsvWriter::sep() {
  if (in_row_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::field(const std::string& s) {
  sep();
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::field(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw Error("csv row has " + std::to_string(in_row_) + " fields, header has " + std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
  ++rows_;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const nlohmann::json& config, std::uint64_t seed, const nlohmann::json& extra) {
  nlohmann::json m;
  m["command"] = command;
  m["config_hash"] = config_hash(config);
  m["seed"] = seed;
  m["versions"] = {
      {"hjam", HJAM_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"compiler", __VERSION__},
      {"kernels", kernels::active().name},
  };
  m["config"] = config;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = *it;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

}  // namespace hjam
