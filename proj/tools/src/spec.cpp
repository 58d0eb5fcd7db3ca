#include <cmath>
#include <fstream>
#include <sstream>

#include "gbc/error.hpp"
#include "gbc_cli/cli.hpp"

namespace gbc::cli {

namespace {

using nlohmann::json;

Matrix read_square(const json& doc, const char* field, std::size_t t) {
  if (!doc.contains(field)) throw CliError(kSpecInvalid, std::string("spec: missing field '") + field + "'");
  const json& rows = doc.at(field);
  if (!rows.is_array() || rows.size() != t)
    throw CliError(kSpecInvalid, std::string("spec: '") + field + "' must be an array of t rows");
  Matrix m(t, t);
  for (std::size_t i = 0; i < t; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != t)
      throw CliError(kSpecInvalid, std::string("spec: row ") + std::to_string(i) + " of '" + field + "' must have t entries");
    for (std::size_t j = 0; j < t; ++j) {
      if (!row[j].is_number())
        throw CliError(kSpecInvalid, std::string("spec: '") + field + "' entries must be numbers");
      m(i, j) = row[j].get<double>();
    }
  }
  if (!m.all_finite()) throw CliError(kSpecInvalid, std::string("spec: '") + field + "' has non-finite entries");
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ChannelSpecFile parse_spec_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CliError(kSpecInvalid, std::string("spec: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CliError(kSpecInvalid, "spec: top level must be an object");
  if (!doc.contains("version")) throw CliError(kSpecInvalid, "spec: missing field 'version'");
  if (!doc.at("version").is_number_integer() || doc.at("version").get<int>() != 1)
    throw CliError(kSpecInvalid, "spec: unsupported version (expected 1)");
  if (!doc.contains("t") || !doc.at("t").is_number_integer() || doc.at("t").get<long long>() < 1)
    throw CliError(kSpecInvalid, "spec: 't' must be a positive integer");

  ChannelSpecFile spec;
  spec.t = doc.at("t").get<std::size_t>();
  spec.g1 = read_square(doc, "g1", spec.t);
  spec.g2 = read_square(doc, "g2", spec.t);
  const Matrix k = read_square(doc, "k", spec.t);

  for (const auto& [name, g] : {std::pair{"g1", &spec.g1}, std::pair{"g2", &spec.g2}}) {
    if (!(std::abs(determinant(*g)) > 1e-12)) throw CliError(kGainNotInvertible, std::string("spec: ") + name + " gain not invertible");
  }
  for (std::size_t i = 0; i < spec.t; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(k(i, j) - k(j, i)) > 1e-12 * (1.0 + std::abs(k(i, j))))
        throw CliError(kSpecInvalid, "spec: k must be symmetric");
  try {
    spec.k = PsdMatrix(k);
  } catch (const InputError& e) {
    throw CliError(kNotPsd, std::string("spec: k not PSD (") + e.what() + ")");
  }

  spec.canonical = json{{"version", 1}, {"t", spec.t}, {"g1", matrix_json(spec.g1)}, {"g2", matrix_json(spec.g2)},
                        {"k", matrix_json(k)}};
  return spec;
}

ChannelSpecFile parse_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kSpecInvalid, "spec: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

}  // namespace gbc::cli
