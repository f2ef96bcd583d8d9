#ifndef NPSS_MATRIX_IO_HPP_
#define NPSS_MATRIX_IO_HPP_

// File formats
//
//   CSV matrix     one sample per line, comma separated, LF or CRLF. An
//                  optional single header row is recognised by a non-numeric
//                  first token; if its first field is "id" the first column of
//                  every data row is a row identifier.
//   binary matrix  "NPSS", u32 version (=1), u64 rows, u64 cols, then
//                  rows*cols IEEE-754 doubles, all little-endian, row-major.
//   labels         one 0 or 1 per line, in test-matrix row order.
//   scan report    JSON object with mode, score_function, score, row_subset,
//                  col_subset, restarts, iterations_per_restart,
//                  restart_scores, alpha_at_max, wall_time_seconds, seed.
//
// Every writer goes through write_atomic(): output appears complete or not at all.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "npss/matrix.hpp"
#include "npss/scan.hpp"

namespace npss {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MatrixFormat { csv, binary };

inline constexpr std::array<char, 4> kBinaryMagic = {'N', 'P', 'S', 'S'};
inline constexpr std::uint32_t kBinaryVersion = 1;

/// ".bin" and ".npss" are binary, everything else CSV.
inline MatrixFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".npss") ? MatrixFormat::binary : MatrixFormat::csv;
}

inline MatrixFormat parse_matrix_format(std::string_view s) {
  if (s == "csv") return MatrixFormat::csv;
  if (s == "binary" || s == "bin") return MatrixFormat::binary;
  throw std::invalid_argument("unknown matrix format '" + std::string(s) + "' (expected csv or binary)");
}

/// Shortest decimal that parses back to the same double; never locale dependent.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `content` next to `path` and renames it into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into '" + path.string() + "'");
  }
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// from_chars rejects a leading '+', which other writers emit.
inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename T>
void put_le(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <typename T>
T get_le(std::string_view in, std::size_t offset) {
  std::array<unsigned char, sizeof(T)> bits{};
  std::memcpy(bits.data(), in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace detail

/// Parses CSV text. `source` names the input in error messages.
inline ActivationMatrix parse_csv(std::string_view text, std::string_view source = "<csv>") {
  const std::string where(source);
  std::vector<double> values;
  std::vector<std::string> ids;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool first_line = true;
  bool has_ids = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    auto fields = detail::split_fields(line);
    if (first_line) {
      first_line = false;
      double probe = 0.0;
      if (!detail::parse_double(fields.front(), probe)) {
        has_ids = fields.front() == "id" || fields.front() == "ID";
        cols = fields.size() - (has_ids ? 1 : 0);
        if (cols == 0) throw FormatError(where + ": header declares no value columns");
        continue;
      }
    }
    if (has_ids) {
      ids.emplace_back(fields.front());
      fields.erase(fields.begin());
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw FormatError(where + ": ragged row at line " + std::to_string(line_no) + " (expected " +
                        std::to_string(cols) + " fields, got " + std::to_string(fields.size()) + ")");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!detail::parse_double(fields[c], v)) {
        throw FormatError(where + ": unparsable value '" + std::string(fields[c]) + "' at line " +
                          std::to_string(line_no) + ", field " + std::to_string(c + 1));
      }
      if (!std::isfinite(v)) {
        throw DataError(where + ": non-finite value at (row " + std::to_string(rows) + ", col " +
                        std::to_string(c) + ")");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (first_line) throw FormatError(where + ": empty file");
  if (rows == 0) throw FormatError(where + ": no data rows");
  ActivationMatrix m(rows, cols, std::move(values));
  if (has_ids) m.set_row_ids(std::move(ids));
  return m;
}

inline std::string to_csv(const ActivationMatrix& m) {
  std::string out;
  out.reserve(m.rows() * m.cols() * 20);
  const bool ids = !m.row_ids().empty();
  if (ids) {
    out += "id";
    for (std::size_t c = 0; c < m.cols(); ++c) out += ",n" + std::to_string(c);
    out += '\n';
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (ids) out += m.row_ids()[r] + ",";
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline ActivationMatrix parse_binary(std::string_view bytes, std::string_view source = "<binary>") {
  const std::string where(source);
  constexpr std::size_t header = 4 + 4 + 8 + 8;
  if (bytes.empty()) throw FormatError(where + ": empty file");
  if (bytes.size() < header || !std::equal(kBinaryMagic.begin(), kBinaryMagic.end(), bytes.begin())) {
    throw FormatError(where + ": missing NPSS header");
  }
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  if (version != kBinaryVersion) {
    throw FormatError(where + ": unsupported binary version " + std::to_string(version));
  }
  const auto rows = detail::get_le<std::uint64_t>(bytes, 8);
  const auto cols = detail::get_le<std::uint64_t>(bytes, 16);
  if (rows == 0 || cols == 0) throw FormatError(where + ": matrix has no rows or columns");
  const std::size_t payload = bytes.size() - header;
  if (payload % 8 != 0 || rows > payload / 8 / cols || rows * cols != payload / 8) {
    throw FormatError(where + ": payload size does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = detail::get_le<double>(bytes, header + 8 * i);
  }
  ActivationMatrix m(rows, cols, std::move(values));
  m.check_finite();
  return m;
}

inline std::string to_binary(const ActivationMatrix& m) {
  std::string out;
  out.reserve(24 + m.values().size() * 8);
  out.append(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put_le<std::uint32_t>(out, kBinaryVersion);
  detail::put_le<std::uint64_t>(out, m.rows());
  detail::put_le<std::uint64_t>(out, m.cols());
  for (double v : m.values()) detail::put_le<double>(out, v);
  return out;
}

inline ActivationMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const auto content = read_file(path);
  return format == MatrixFormat::csv ? parse_csv(content, path.string()) : parse_binary(content, path.string());
}

inline ActivationMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_for_path(path));
}

inline void save_matrix(const ActivationMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
  write_atomic(path, format == MatrixFormat::csv ? to_csv(m) : to_binary(m));
}

inline void save_matrix(const ActivationMatrix& m, const std::filesystem::path& path) {
  save_matrix(m, path, format_for_path(path));
}

inline LabelVector parse_labels(std::string_view text, std::string_view source = "<labels>") {
  LabelVector labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    if (line != "0" && line != "1") {
      throw DataError(std::string(source) + ": label must be 0 or 1 at line " + std::to_string(line_no));
    }
    labels.push_back(line == "1" ? 1 : 0);
  }
  if (labels.empty()) throw FormatError(std::string(source) + ": empty label file");
  return labels;
}

inline LabelVector load_labels(const std::filesystem::path& path, std::size_t expected_rows = 0) {
  auto labels = parse_labels(read_file(path), path.string());
  if (expected_rows != 0 && labels.size() != expected_rows) {
    throw ShapeError(path.string() + ": " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(expected_rows) + " rows");
  }
  return labels;
}

inline void save_labels(const LabelVector& labels, const std::filesystem::path& path) {
  std::string out;
  for (auto l : labels) out += l ? "1\n" : "0\n";
  write_atomic(path, out);
}

/// One index per line.
inline void save_indices(const std::vector<std::size_t>& indices, const std::filesystem::path& path) {
  std::string out;
  for (auto i : indices) out += std::to_string(i) + '\n';
  write_atomic(path, out);
}

/// 0/1 membership of each of `n` elements, one per line.
inline void save_indicator(const std::vector<std::size_t>& subset, std::size_t n,
                           const std::filesystem::path& path) {
  std::vector<char> flags(n, 0);
  for (auto i : subset) {
    if (i >= n) throw std::out_of_range("indicator index out of range");
    flags[i] = 1;
  }
  std::string out;
  for (auto f : flags) out += f ? "1\n" : "0\n";
  write_atomic(path, out);
}

inline nlohmann::json result_to_json(const ScanResult& r) {
  if (r.row_subset.empty() || r.col_subset.empty()) throw DataError("degenerate subset: empty row or column subset");
  if (!std::isfinite(r.score)) throw DataError("score is not finite");
  nlohmann::json j;
  j["format_version"] = 1;
  j["mode"] = std::string(to_string(r.mode));
  j["score_function"] = std::string(to_string(r.score_function));
  j["score"] = r.score;
  j["row_subset"] = r.row_subset;
  j["col_subset"] = r.col_subset;
  j["restarts"] = r.restart_traces.size();
  auto& iterations = j["iterations_per_restart"] = nlohmann::json::array();
  auto& scores = j["restart_scores"] = nlohmann::json::array();
  for (const auto& t : r.restart_traces) {
    iterations.push_back(t.iterations);
    scores.push_back(t.score);
  }
  j["alpha_at_max"] = r.alpha_at_max;
  j["wall_time_seconds"] = r.wall_time_seconds;
  j["seed"] = r.seed;
  return j;
}

inline ScanResult result_from_json(const nlohmann::json& j) {
  ScanResult r;
  r.mode = parse_scan_mode(j.at("mode").get<std::string>());
  r.score_function = parse_score_function(j.at("score_function").get<std::string>());
  r.score = j.at("score").get<double>();
  r.row_subset = j.at("row_subset").get<std::vector<std::size_t>>();
  r.col_subset = j.at("col_subset").get<std::vector<std::size_t>>();
  const auto iterations = j.at("iterations_per_restart").get<std::vector<std::size_t>>();
  const auto scores = j.at("restart_scores").get<std::vector<double>>();
  if (iterations.size() != scores.size() || iterations.size() != j.at("restarts").get<std::size_t>()) {
    throw FormatError("report: restart trace lengths disagree");
  }
  for (std::size_t i = 0; i < iterations.size(); ++i) r.restart_traces.push_back({scores[i], iterations[i]});
  r.alpha_at_max = j.at("alpha_at_max").get<double>();
  r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

inline std::string result_to_text(const ScanResult& r) { return result_to_json(r).dump(2) + "\n"; }

inline void save_result(const ScanResult& r, const std::filesystem::path& path) {
  write_atomic(path, result_to_text(r));
}

inline ScanResult load_result(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return result_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed report: " + e.what());
  }
}

/// CSV with columns row,score,alpha_at_max,n_cols,cols (cols separated by ';').
inline void save_individual(const std::vector<IndividualScore>& scores, const std::filesystem::path& path) {
  std::string out = "row,score,alpha_at_max,n_cols,cols\n";
  for (const auto& s : scores) {
    out += std::to_string(s.row) + ',' + format_double(s.score) + ',' + format_double(s.alpha_at_max) + ',' +
           std::to_string(s.col_subset.size()) + ',';
    for (std::size_t i = 0; i < s.col_subset.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(s.col_subset[i]);
    }
    out += '\n';
  }
  write_atomic(path, out);
}

}  // namespace npss

#endif  // NPSS_MATRIX_IO_HPP_
