#ifndef UR_STACK_SVC_MANIFEST_HPP
#define UR_STACK_SVC_MANIFEST_HPP

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ur_stack/svc/jsonl.hpp"

namespace urstack::svc {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PluginKind { Command, Extension, Dashboard };

inline PluginKind plugin_kind_from_string(const std::string& s) {
  if (s == "command") return PluginKind::Command;
  if (s == "extension") return PluginKind::Extension;
  if (s == "dashboard") return PluginKind::Dashboard;
  throw ManifestError("unknown plugin kind: " + s);
}

struct PluginEntry {
  std::string name;
  PluginKind kind = PluginKind::Command;
  Json parameters = Json::object();
  int extension_id = 0;  // 256, 257, ... for extension entries, else 0
};

// Extension IDs are assigned 256, 257, ... in file order, so a restart with
// the same manifest reproduces the same IDs.
struct PluginManifest {
  std::vector<PluginEntry> entries;

  static PluginManifest parse(const Json& j) {
    PluginManifest m;
    if (!j.is_object() || !j.contains("plugins") || !j["plugins"].is_array())
      throw ManifestError("manifest must be an object with a 'plugins' array");
    std::set<std::string> names;
    int next_ext = 256;
    for (const auto& p : j["plugins"]) {
      PluginEntry e;
      e.name = p.value("name", "");
      if (e.name.empty()) throw ManifestError("plugin entry missing name");
      if (!names.insert(e.name).second)
        throw ManifestError("duplicate plugin name: " + e.name);
      e.kind = plugin_kind_from_string(p.value("kind", "command"));
      if (p.contains("parameters")) {
        if (!p["parameters"].is_object())
          throw ManifestError("plugin " + e.name + ": parameters must be an object");
        e.parameters = p["parameters"];
      }
      if (e.kind == PluginKind::Extension) e.extension_id = next_ext++;
      m.entries.push_back(std::move(e));
    }
    return m;
  }

  static PluginManifest parse_text(const std::string& text) {
    try {
      return parse(Json::parse(text));
    } catch (const Json::exception& e) {
      throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
  }

  static PluginManifest load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ManifestError("cannot open manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_text(text);
  }

  const PluginEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

}  // namespace urstack::svc

#endif  // UR_STACK_SVC_MANIFEST_HPP
