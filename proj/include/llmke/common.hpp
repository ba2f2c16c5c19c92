// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace llmke {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (records, config, fixture files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or a violated precondition on caller input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network failure that survived the retry policy.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status = 0) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// A replay store has no entry for a request. Always fatal for a run.
class MissingFixtureError : public Error {
 public:
  MissingFixtureError(const std::string& what, std::string key) : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Directory holding templates.json, relations.jsonc and sparql/.
/// LLMKE_DATA_DIR overrides the compiled-in source location.
std::filesystem::path default_data_dir();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
bool is_qid(std::string_view s);

/// Replaces every occurrence of `key` in `text`.
std::string replace_all(std::string text, std::string_view key, std::string_view value);

/// Canonical decimal for the first integer in `s`: surrounding text is
/// dropped, thousands separators are accepted, leading zeros removed.
/// Empty when `s` contains no digit.
std::string normalize_number(std::string_view s);

/// Reads a JSONL file into raw lines, skipping blank lines. Line numbers
/// are 1-based and returned alongside the text.
struct NumberedLine {
  std::size_t number;
  std::string text;
};
std::vector<NumberedLine> read_jsonl_lines(const std::filesystem::path& path);

}  // namespace llmke
