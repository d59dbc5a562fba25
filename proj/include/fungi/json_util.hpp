#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "fungi/error.hpp"

namespace fungi::jsonu {

inline void check_object(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("config field '" + path + "' must be an object");
}

// Rejects unknown keys so config typos fail loudly with the offending field.
inline void check_keys(const nlohmann::json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  check_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config field '" + path + "." + it.key() + "'");
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, const T& fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + path + "." + key + "': " + e.what());
  }
}

}  // namespace fungi::jsonu
