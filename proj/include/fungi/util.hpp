#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fungi {

// FNV-1a 64-bit, used for file checksums and config fingerprints.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);  // 16 lowercase hex digits

std::string read_file(const std::string& path);                        // throws IoError
void write_file(const std::string& path, std::string_view contents);   // throws IoError
std::uint64_t checksum_file(const std::string& path);

// Shared token definition for captions and the text encoder: lowercase,
// whitespace-split, punctuation characters removed.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    } else if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

inline int token_count(std::string_view text) {
  return static_cast<int>(tokenize(text).size());
}

}  // namespace fungi
