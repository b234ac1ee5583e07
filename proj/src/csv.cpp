#include "cdm/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdm {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

constexpr const char* kSweepHeader =
    "variant,kind,arms,experts,delta,run,algorithm,scaled_reward,best_expert,worst_expert,"
    "mean_expert,random_baseline,crossover\n";

void append_rows(std::string& out, const SweepResult& result) {
  for (const SweepRow& r : result.rows) {
    out += r.variant;
    out += ',';
    out += to_string(r.kind);
    out += ',' + std::to_string(r.arms) + ',' + std::to_string(r.experts) + ',' +
           format_number(r.delta) + ',' + std::to_string(r.run) + ',';
    out += to_string(r.algorithm);
    out += ',' + format_number(r.scaled_reward) + ',' + format_number(r.best_expert) + ',' +
           format_number(r.worst_expert) + ',' + format_number(r.mean_expert) + ',' +
           format_number(r.random_baseline) + ',';
    if (r.crossover) out += std::to_string(*r.crossover);
    out += '\n';
  }
}

}  // namespace

std::string sweep_csv(const SweepResult& result) {
  std::string out = kSweepHeader;
  append_rows(out, result);
  return out;
}

std::string ablation_csv(const AblationResult& result) {
  std::string out = kSweepHeader;
  append_rows(out, result.full);
  append_rows(out, result.top);
  return out;
}

std::string anytime_csv(const AnytimeResult& result) {
  std::string out = "arms,experts,series,t,mean,std\n";
  for (const AnytimeSeries& s : result.series) {
    const std::string prefix = std::to_string(s.arms) + ',' + std::to_string(s.experts) + ',' + s.name + ',';
    for (std::size_t t = 0; t < s.mean.size(); ++t) {
      out += prefix + std::to_string(t + 1) + ',' + format_number(s.mean[t]) + ',' +
             format_number(s.std[t]) + '\n';
    }
  }
  return out;
}

std::string crossover_csv(const AnytimeResult& result) {
  std::string out = "arms,experts,run,crossover\n";
  for (const auto& c : result.crossovers) {
    out += std::to_string(c.arms) + ',' + std::to_string(c.experts) + ',' + std::to_string(c.run) + ',';
    if (c.step) out += std::to_string(*c.step);
    out += '\n';
  }
  return out;
}

std::string weights_csv(const std::vector<WeightRow>& rows) {
  std::string out = "run,expert,expected_reward,metacmab_weight,exp4p_weight,is_best,random_reward\n";
  for (const WeightRow& r : rows) {
    out += std::to_string(r.run) + ',' + std::to_string(r.expert) + ',' +
           format_number(r.expected_reward) + ',' + format_number(r.metacmab_weight) + ',' +
           format_number(r.exp4p_weight) + ',' + (r.is_best ? "1" : "0") + ',' +
           format_number(r.random_reward) + '\n';
  }
  return out;
}

std::string pcc_csv(const std::vector<PccRow>& rows) {
  std::string out = "pair,relation,scaled_distance,pcc\n";
  for (const PccRow& r : rows) {
    out += std::to_string(r.pair) + ',' + r.relation + ',' + format_number(r.scaled_distance) + ',' +
           format_number(r.pcc) + '\n';
  }
  return out;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("csv: missing column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const std::string& cell = text(row, name);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size()) {
    throw std::invalid_argument("csv: row " + std::to_string(row + 1) + " column '" +
                                std::string(name) + "' is not a number: '" + cell + "'");
  }
  return v;
}

const std::string& CsvTable::text(std::size_t row, std::string_view name) const {
  return rows.at(row).at(column(name));
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (;;) {
      const auto comma = line.find(',');
      fields.emplace_back(line.substr(0, comma));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        throw std::invalid_argument("csv line " + std::to_string(line_no) + ": expected " +
                                    std::to_string(table.header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_text_file(const std::filesystem::path& path, std::string_view contents, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw std::runtime_error(path.string() + " exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace cdm
