#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace stackelberg {

using Json = nlohmann::ordered_json;

/// Schema violation; `path` is the dotted key path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Applies `overrides` onto `base`. Every overriding key must already exist
/// in `base` with a compatible type (numbers interchange; arrays keep their
/// length), so the defaults double as the schema.
Json merge_checked(Json base, const Json& overrides, const std::string& path = "");

/// "a.b.c=value" -> {"a": {"b": {"c": value}}}. The value is parsed as JSON
/// when possible and kept as a string otherwise.
Json parse_assignment(const std::string& assignment);

Json load_json_file(const std::string& path);

/// Typed lookup with the dotted path in any error message.
template <typename T>
T get(const Json& node, const std::string& key, const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!node.contains(key)) throw ConfigError(full, "missing key");
  try {
    return node.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(full, std::string("wrong type: ") + e.what());
  }
}

}  // namespace stackelberg
