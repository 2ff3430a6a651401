#include "glg/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "glg/common.hpp"

namespace glg {

bool ExperimentReport::passed() const {
  for (auto& [k, v] : flags.items())
    if (!v.get<bool>()) return false;
  return true;
}

namespace {
// JSON has no inf/nan; encode them as strings so reports stay valid.
ojson sanitize(const ojson& j) {
  if (j.is_number_float()) {
    double x = j.get<double>();
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return j;
  }
  if (j.is_object()) {
    ojson r = ojson::object();
    for (auto& [k, v] : j.items()) r[k] = sanitize(v);
    return r;
  }
  if (j.is_array()) {
    ojson r = ojson::array();
    for (auto& v : j) r.push_back(sanitize(v));
    return r;
  }
  return j;
}
}  // namespace

ojson ExperimentReport::to_json() const {
  ojson j;
  j["name"] = name;
  j["version"] = kVersion;
  j["inputs"] = sanitize(inputs);
  j["scalars"] = sanitize(scalars);
  j["flags"] = flags;
  j["pass"] = passed();
  j["convergence_log"] = sanitize(ojson(log));
  j["notes"] = notes;
  return j;
}

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot write " + tmp);
    f.write(content.data(), (std::streamsize)content.size());
    if (!f) throw Error(ErrorKind::ConfigError, "write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(ErrorKind::ConfigError, "rename failed for " + path);
}

}  // namespace glg
