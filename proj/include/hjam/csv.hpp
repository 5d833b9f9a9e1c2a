#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace hjam {

/// Comma separated output with a mandatory header line. Fields are written as
/// given; doubles use 17 significant digits so files round-trip.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double v);
  CsvWriter& field(std::int64_t v);
  CsvWriter& field(std::uint64_t v);
  CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
  CsvWriter& field(unsigned v) { return field(static_cast<std::uint64_t>(v)); }
  void end_row();

  std::size_t rows() const noexcept { return rows_; }

 private:
  void sep();

  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::size_t rows_ = 0;
};

std::string format_double(double v);

/// manifest.json next to the outputs: command, config hash, seed, versions.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const nlohmann::json& config, std::uint64_t seed,
                    const nlohmann::json& extra = nlohmann::json::object());

}  // namespace hjam
