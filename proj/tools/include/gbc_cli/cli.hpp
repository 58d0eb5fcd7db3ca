#pragma once

// Command-line surface: channel spec parsing, deterministic CSV/JSON output and
// command dispatch. `run_command` is the whole program minus process exit.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gbc/linalg.hpp"
#include "gbc/rates.hpp"

namespace gbc::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSpecInvalid = 2,
  kNotConverged = 3,
  kInternal = 4,
  kGainNotInvertible = 5,
  kNotPsd = 6,
};

/// Failure carrying the process exit code it maps to.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct ChannelSpecFile {
  int version = 1;
  std::size_t t = 0;
  Matrix g1;
  Matrix g2;
  PsdMatrix k;
  nlohmann::json canonical;  ///< the validated fields, as hashed

  ChannelPair channel() const { return ChannelPair(g1, g2); }
};

/// Parses and validates a JSON channel spec. Throws CliError with kSpecInvalid
/// (syntax or schema), kGainNotInvertible or kNotPsd.
ChannelSpecFile parse_spec(const std::filesystem::path& path);
ChannelSpecFile parse_spec_text(std::string_view text);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Shortest round-trip decimal, '.' separator, independent of locale.
std::string format_number(double v);

/// Comma-separated reals, e.g. "1.5,2,3".
std::vector<double> parse_list(std::string_view text);

/// Rows separated by ';', entries by ',': "1,0;0,2".
Matrix parse_matrix(std::string_view text);

struct Manifest {
  std::string command;
  std::string spec_hash;  ///< empty when the command takes no spec
  std::optional<std::uint64_t> seed;
  std::string unit = "nats";
  nlohmann::json options = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Column-ordered table serialized with format_number.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  std::size_t rows() const noexcept { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string cell(double v);
std::string cell(bool v);
std::string cell(long long v);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json (manifest + summary), and when
/// `plot` is set a gnuplot script <dir>/<stem>.gp plotting columns x_col vs y_cols.
struct OutputBundle {
  OutputBundle(std::string stem_, CsvTable table_) : stem(std::move(stem_)), table(std::move(table_)) {}

  std::string stem;
  CsvTable table;
  nlohmann::json summary = nlohmann::json::object();
  std::string plot_x;
  std::vector<std::string> plot_y;
};

void write_outputs(const std::filesystem::path& dir, const OutputBundle& bundle, const Manifest& manifest, bool plot);

/// Runs the program on argv (argv[0] is the program name). Diagnostics go to
/// `err`, a one-line summary per output to `out`. Returns the exit code.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace gbc::cli
