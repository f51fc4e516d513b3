#pragma once

// File formats for embeddings, votes, labels and engine configuration.
//
// LGEM binary layout (little-endian, no padding):
//   bytes 0-3  "LGEM"
//   u32        version (= 1)
//   u64        n
//   u32        d
//   u8         metric (0 = euclidean, 1 = cosine)
//   n*d f32    row-major embedding values

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "liger/dataset.hpp"
#include "liger/error.hpp"

namespace liger {

inline constexpr std::array<char, 4> kLgemMagic = {'L', 'G', 'E', 'M'};
inline constexpr std::uint32_t kLgemVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<U>(p[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Lines with CR stripped; a trailing newline does not produce an empty line.
inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

// ---------------------------------------------------------------------------
// Embeddings

inline std::string encode_lgem(const EmbeddingDataset& emb) {
  std::string out;
  out.reserve(21 + emb.data().size() * 4);
  out.append(kLgemMagic.data(), kLgemMagic.size());
  detail::put_le<std::uint32_t>(out, kLgemVersion);
  detail::put_le<std::uint64_t>(out, emb.n());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(emb.d()));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(emb.metric()));
  for (float v : emb.data()) detail::put_le<float>(out, v);
  return out;
}

inline EmbeddingDataset decode_lgem(std::string_view bytes) {
  constexpr std::size_t header = 21;
  if (bytes.size() < header || std::memcmp(bytes.data(), kLgemMagic.data(), 4) != 0) {
    throw FormatError("embedding file does not start with magic 'LGEM'");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto version = detail::get_le<std::uint32_t>(p + 4);
  if (version != kLgemVersion) {
    throw FormatError("unsupported LGEM version " + std::to_string(version));
  }
  const auto n = detail::get_le<std::uint64_t>(p + 8);
  const auto d = detail::get_le<std::uint32_t>(p + 16);
  const auto metric_byte = p[20];
  if (metric_byte > 1) throw FormatError("LGEM metric byte must be 0 or 1");
  if (d != 0 && n > (bytes.size() - header) / 4 / d) {
    throw FormatError("LGEM payload shorter than n*d floats");
  }
  const std::size_t count = static_cast<std::size_t>(n) * d;
  if (bytes.size() != header + count * 4) {
    throw FormatError("LGEM payload size does not match n*d floats");
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = detail::get_le<float>(p + header + 4 * i);
  return EmbeddingDataset(n, d, std::move(data), static_cast<Metric>(metric_byte));
}

// Comma-separated floats, one row per line, no header.
inline EmbeddingDataset parse_embeddings_csv(std::string_view text, Metric metric) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw FormatError("embedding CSV is empty");
  std::size_t d = 0;
  std::vector<float> data;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cells = detail::split(rows[i], ',');
    if (i == 0) d = cells.size();
    if (cells.size() != d) {
      throw FormatError("embedding CSV line " + std::to_string(i + 1) + " has " +
                        std::to_string(cells.size()) + " values, expected " + std::to_string(d));
    }
    for (auto cell : cells) {
      auto v = detail::parse_number<float>(cell);
      if (!v) {
        throw FormatError("embedding CSV line " + std::to_string(i + 1) + ": cannot parse '" +
                          std::string(cell) + "'");
      }
      data.push_back(*v);
    }
  }
  return EmbeddingDataset(rows.size(), d, std::move(data), metric);
}

inline std::string encode_embeddings_csv(const EmbeddingDataset& emb) {
  std::string out;
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const auto row = emb.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out.push_back(',');
      std::array<char, 32> buf{};
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), row[k]);
      (void)ec;
      out.append(buf.data(), ptr);
    }
    out.push_back('\n');
  }
  return out;
}

inline bool is_csv_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv";
}

// Loads LGEM, or CSV when the path ends in ".csv" (metric then comes from csv_metric).
inline EmbeddingDataset load_embeddings(const std::filesystem::path& path,
                                        Metric csv_metric = Metric::euclidean) {
  const auto bytes = detail::read_file(path);
  if (is_csv_path(path)) return parse_embeddings_csv(bytes, csv_metric);
  return decode_lgem(bytes);
}

inline void store_embeddings(const std::filesystem::path& path, const EmbeddingDataset& emb) {
  detail::write_file(path, is_csv_path(path) ? encode_embeddings_csv(emb) : encode_lgem(emb));
}

// ---------------------------------------------------------------------------
// Votes and labels

namespace detail {

inline void check_id(std::string_view cell, std::size_t expected, std::size_t line_no) {
  auto id = parse_number<long long>(cell);
  if (!id || *id != static_cast<long long>(expected)) {
    throw ValidationError("line " + std::to_string(line_no) + ": id column must be " +
                          std::to_string(expected) + " (ids ascend from 0)");
  }
}

inline std::int8_t parse_vote(std::string_view cell, std::size_t line_no, std::string_view what) {
  auto v = parse_number<int>(cell);
  if (!v) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse " + std::string(what) +
                      " '" + std::string(cell) + "'");
  }
  return static_cast<std::int8_t>(std::clamp(*v, -128, 127));
}

}  // namespace detail

// Header "id,lf_0,...,lf_{m-1}"; ids ascend 0..n-1; votes in {-1,0,1}.
inline VoteMatrix parse_votes_csv(std::string_view text,
                                  std::optional<std::size_t> n_expected = std::nullopt) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw FormatError("votes CSV has no header");
  const auto header = detail::split(rows[0], ',');
  if (header.empty() || detail::trim(header[0]) != "id") {
    throw FormatError("votes CSV header must start with 'id'");
  }
  const std::size_t m = header.size() - 1;
  for (std::size_t k = 0; k < m; ++k) {
    if (detail::trim(header[k + 1]) != "lf_" + std::to_string(k)) {
      throw FormatError("votes CSV header column " + std::to_string(k + 1) + " must be 'lf_" +
                        std::to_string(k) + "'");
    }
  }
  const std::size_t n = rows.size() - 1;
  if (n_expected && *n_expected != n) {
    throw ShapeError("votes CSV has " + std::to_string(n) + " rows, expected " +
                     std::to_string(*n_expected));
  }
  std::vector<std::int8_t> votes;
  votes.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = detail::split(rows[i + 1], ',');
    if (cells.size() != m + 1) {
      throw FormatError("votes CSV line " + std::to_string(i + 2) + " has " +
                        std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(m + 1));
    }
    detail::check_id(cells[0], i, i + 2);
    for (std::size_t k = 0; k < m; ++k) votes.push_back(detail::parse_vote(cells[k + 1], i + 2, "vote"));
  }
  return VoteMatrix(n, m, std::move(votes));
}

inline std::string encode_votes_csv(const VoteMatrix& votes) {
  std::string out = "id";
  for (std::size_t k = 0; k < votes.m(); ++k) out += ",lf_" + std::to_string(k);
  out.push_back('\n');
  for (std::size_t i = 0; i < votes.n(); ++i) {
    out += std::to_string(i);
    for (std::size_t k = 0; k < votes.m(); ++k) {
      out.push_back(',');
      out += std::to_string(votes.at(i, k));
    }
    out.push_back('\n');
  }
  return out;
}

inline VoteMatrix load_votes(const std::filesystem::path& path,
                             std::optional<std::size_t> n_expected = std::nullopt) {
  return parse_votes_csv(detail::read_file(path), n_expected);
}

inline void store_votes(const std::filesystem::path& path, const VoteMatrix& votes) {
  detail::write_file(path, encode_votes_csv(votes));
}

// Header "id,y"; y in {-1,1}.
inline LabelVector parse_labels_csv(std::string_view text,
                                    std::optional<std::size_t> n_expected = std::nullopt) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw FormatError("labels CSV has no header");
  const auto header = detail::split(rows[0], ',');
  if (header.size() != 2 || detail::trim(header[0]) != "id" || detail::trim(header[1]) != "y") {
    throw FormatError("labels CSV header must be 'id,y'");
  }
  const std::size_t n = rows.size() - 1;
  if (n_expected && *n_expected != n) {
    throw ShapeError("labels CSV has " + std::to_string(n) + " rows, expected " +
                     std::to_string(*n_expected));
  }
  std::vector<std::int8_t> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = detail::split(rows[i + 1], ',');
    if (cells.size() != 2) {
      throw FormatError("labels CSV line " + std::to_string(i + 2) + " must have 2 columns");
    }
    detail::check_id(cells[0], i, i + 2);
    labels.push_back(detail::parse_vote(cells[1], i + 2, "label"));
  }
  return LabelVector(std::move(labels));
}

inline std::string encode_labels_csv(const LabelVector& labels) {
  std::string out = "id,y\n";
  for (std::size_t i = 0; i < labels.n(); ++i) {
    out += std::to_string(i) + "," + std::to_string(labels[i]) + "\n";
  }
  return out;
}

inline LabelVector load_labels(const std::filesystem::path& path,
                               std::optional<std::size_t> n_expected = std::nullopt) {
  return parse_labels_csv(detail::read_file(path), n_expected);
}

inline void store_labels(const std::filesystem::path& path, const LabelVector& labels) {
  detail::write_file(path, encode_labels_csv(labels));
}

// ---------------------------------------------------------------------------
// Config

inline nlohmann::json config_to_json(const EngineConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["s"] = cfg.s;
  j["radii"] = cfg.radii;
  j["metric"] = std::string(to_string(cfg.metric));
  j["class_balance_mode"] = std::string(to_string(cfg.class_balance_mode));
  if (cfg.explicit_balances) j["explicit_balances"] = *cfg.explicit_balances;
  j["accuracy_clamp"] = cfg.accuracy_clamp;
  j["kmeans_max_iters"] = cfg.kmeans_max_iters;
  j["kmeans_tol"] = cfg.kmeans_tol;
  return j;
}

inline EngineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  EngineConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "s") cfg.s = value.get<std::size_t>();
      else if (key == "radii") cfg.radii = value.get<std::vector<double>>();
      else if (key == "metric") cfg.metric = parse_metric(value.get<std::string>());
      else if (key == "class_balance_mode")
        cfg.class_balance_mode = parse_class_balance_mode(value.get<std::string>());
      else if (key == "explicit_balances")
        cfg.explicit_balances = value.get<std::vector<double>>();
      else if (key == "accuracy_clamp") cfg.accuracy_clamp = value.get<double>();
      else if (key == "kmeans_max_iters") cfg.kmeans_max_iters = value.get<std::size_t>();
      else if (key == "kmeans_tol") cfg.kmeans_tol = value.get<double>();
      else throw ValidationError("unknown config field '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config field '" + key + "' has the wrong type: " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline EngineConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Bundle diagnostics

struct DiagnosticsSummary {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> coverage;           // Pr(lambda_i != 0) per source
  std::optional<double> positive_prior;   // Pr(y = +1) when labels are given
};

inline DiagnosticsSummary validate_bundle(const EmbeddingDataset& emb, const VoteMatrix& votes,
                                          const LabelVector* labels = nullptr) {
  if (emb.n() != votes.n()) {
    throw ShapeError("embeddings have " + std::to_string(emb.n()) + " rows but votes have " +
                     std::to_string(votes.n()));
  }
  if (labels && labels->n() != emb.n()) {
    throw ShapeError("labels have " + std::to_string(labels->n()) + " rows, expected " +
                     std::to_string(emb.n()));
  }
  DiagnosticsSummary out;
  out.n = votes.n();
  out.m = votes.m();
  out.coverage.assign(votes.m(), 0.0);
  for (std::size_t k = 0; k < votes.m(); ++k) {
    std::size_t covered = 0;
    for (std::size_t i = 0; i < votes.n(); ++i) covered += votes.at(i, k) != 0;
    out.coverage[k] = votes.n() ? static_cast<double>(covered) / static_cast<double>(votes.n()) : 0.0;
  }
  if (labels) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels->n(); ++i) pos += (*labels)[i] == 1;
    out.positive_prior =
        labels->n() ? static_cast<double>(pos) / static_cast<double>(labels->n()) : 0.0;
  }
  return out;
}

}  // namespace liger
