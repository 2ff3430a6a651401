#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace glg {

using ojson = nlohmann::ordered_json;

struct ExperimentReport {
  std::string name;
  ojson inputs = ojson::object();
  ojson scalars = ojson::object();
  ojson flags = ojson::object();
  std::vector<double> log;  // convergence history
  std::vector<std::string> notes;

  void set(const std::string& key, const ojson& v) { scalars[key] = v; }
  void flag(const std::string& key, bool v) { flags[key] = v; }
  bool passed() const;
  ojson to_json() const;
};

// Writes via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace glg
