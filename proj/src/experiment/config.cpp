#include "stackelberg/config.hpp"

#include <fstream>
#include <sstream>

namespace stackelberg {
namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

bool compatible(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;
  if (a.is_null() || b.is_null()) return true;
  return a.type() == b.type();
}

}  // namespace

Json merge_checked(Json base, const Json& overrides, const std::string& path) {
  if (overrides.is_null()) return base;
  if (!overrides.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    const std::string key_path = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigError(key_path, "unknown key");
    Json& slot = base[it.key()];
    const Json& value = it.value();
    if (!compatible(slot, value))
      throw ConfigError(key_path, std::string("expected ") + slot.type_name() + ", got " + value.type_name());
    if (slot.is_object()) {
      slot = merge_checked(slot, value, key_path);
    } else if (slot.is_array() && slot.size() != value.size()) {
      throw ConfigError(key_path, "expected an array of length " + std::to_string(slot.size()));
    } else {
      slot = value;
    }
  }
  return base;
}

Json parse_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "expected key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError(key, "empty path component");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    Json wrapped = Json::object();
    wrapped[*it] = std::move(value);
    value = std::move(wrapped);
  }
  return value;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("", path + " is not valid JSON");
  return j;
}

}  // namespace stackelberg
