// SPDX-License-Identifier: Apache-2.0

#include "llmke/common.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef LLMKE_SOURCE_DATA_DIR
#define LLMKE_SOURCE_DATA_DIR "data"
#endif

namespace llmke {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("LLMKE_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return LLMKE_SOURCE_DATA_DIR;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open for writing: " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw Error("write failed: " + path.string());
  }
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool icontains(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

bool is_qid(std::string_view s) {
  if (s.size() < 2 || s.front() != 'Q') return false;
  return std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  if (key.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string normalize_number(std::string_view s) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t start = 0;
  while (start < s.size() && !is_digit(s[start])) ++start;
  if (start == s.size()) return {};

  std::string digits;
  std::size_t i = start;
  while (i < s.size()) {
    if (is_digit(s[i])) {
      digits.push_back(s[i]);
      ++i;
    } else if (s[i] == ',' && i + 3 < s.size() && is_digit(s[i + 1]) && is_digit(s[i + 2]) &&
               is_digit(s[i + 3]) && (i + 4 == s.size() || !is_digit(s[i + 4]))) {
      // thousands separator: exactly three digits follow
      ++i;
    } else {
      break;
    }
  }
  const auto first_nonzero = digits.find_first_not_of('0');
  return first_nonzero == std::string::npos ? "0" : digits.substr(first_nonzero);
}

std::vector<NumberedLine> read_jsonl_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::vector<NumberedLine> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.push_back({number, std::move(line)});
  }
  return lines;
}

}  // namespace llmke
