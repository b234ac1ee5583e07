#pragma once

// Fixed-schema CSV writers for every experiment, and a minimal reader for the
// plotter. Numbers are printed with %.10g so output bytes are stable.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cdm/harness.hpp"

namespace cdm {

std::string format_number(double v);

std::string sweep_csv(const SweepResult& result);
std::string ablation_csv(const AblationResult& result);
std::string anytime_csv(const AnytimeResult& result);
std::string crossover_csv(const AnytimeResult& result);
std::string weights_csv(const std::vector<WeightRow>& rows);
std::string pcc_csv(const std::vector<PccRow>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  const std::string& text(std::size_t row, std::string_view name) const;
};

/// Comma-separated, no quoting (the writers never emit commas in fields).
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes `contents` to `path`; refuses to replace an existing file unless `force`.
void write_text_file(const std::filesystem::path& path, std::string_view contents, bool force);

}  // namespace cdm
