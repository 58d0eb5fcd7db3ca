#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gbc_cli/cli.hpp"

namespace gbc::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError(kInternal, "cannot write " + path.string());
  out << text;
  if (!out) throw CliError(kInternal, "write failed for " + path.string());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(std::string_view token) {
  const std::string t = trim(token);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw CliError(kUsage, "not a finite number: '" + t + "'");
  return v;
}

std::string plot_script(const OutputBundle& b) {
  std::ostringstream s;
  s << "# gnuplot script for " << b.stem << ".csv\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel '" << b.plot_x << "'\n"
    << "plot ";
  for (std::size_t i = 0; i < b.plot_y.size(); ++i) {
    if (i > 0) s << ", \\\n     ";
    s << "'" << b.stem << ".csv' using '" << b.plot_x << "':'" << b.plot_y[i] << "' with linespoints";
  }
  s << "\npause -1\n";
  return s.str();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw CliError(kInternal, "sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    out.push_back(parse_real(text.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

Matrix parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    rows.push_back(parse_list(text.substr(start, end - start)));
    start = end + 1;
  }
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) throw CliError(kUsage, "matrix rows must have equal length");
  return Matrix::from_rows(rows);
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["spec_hash"] = spec_hash.empty() ? nlohmann::json(nullptr) : nlohmann::json(spec_hash);
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["tool_version"] = std::string(kToolVersion);
  j["unit"] = unit;
  j["options"] = options;
  return j;
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw CliError(kInternal, "csv row width does not match header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  const auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string cell(double v) { return format_number(v); }
std::string cell(bool v) { return v ? "true" : "false"; }
std::string cell(long long v) { return std::to_string(v); }

void write_outputs(const std::filesystem::path& dir, const OutputBundle& bundle, const Manifest& manifest, bool plot) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CliError(kInternal, "cannot create output directory " + dir.string());
  write_file(dir / (bundle.stem + ".csv"), bundle.table.str());
  nlohmann::json doc;
  doc["manifest"] = manifest.to_json();
  doc["summary"] = bundle.summary;
  write_file(dir / (bundle.stem + ".json"), doc.dump(2) + "\n");
  if (plot && !bundle.plot_y.empty()) write_file(dir / (bundle.stem + ".gp"), plot_script(bundle));
}

}  // namespace gbc::cli
