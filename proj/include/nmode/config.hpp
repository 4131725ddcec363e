#pragma once

// Run configuration: one JSON document layered over built-in defaults.
// Unknown keys and type mismatches are rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "nmode/errors.hpp"
#include "nmode/io.hpp"
#include "nmode/params.hpp"

namespace nmode {

using json = nlohmann::json;

inline json default_config() {
  return json::parse(R"({
    "seed": 20140611,
    "threads": 1,
    "output_path": "out",
    "model": {"N": 4, "sigma": 1.0, "lambda_D": 0.0, "beta": 1.0, "eta": -12.0, "hbar": 1.0},
    "sweep": {"q_points": 2000, "q_margin": 1e-4},
    "branches": {"eta_min": -20.0, "eta_max": 20.0, "max_eta_step": 0.05, "max_points": 20000,
                 "asymmetric": true},
    "census": {"sign_filter": "positive", "random_starts": 0, "dedup_tolerance": 1e-6},
    "bif_table": {"N_list": [2, 4, 6, 8], "sigma_list": [1.0]},
    "evolve": {"t_end": 100.0, "dt": 0.0, "order": 6, "sample_every": 100,
               "initial": "mode", "index": 1, "re": [], "im": []},
    "linear1d": {"V0": 5.0, "r": 1.0, "ell": 2.5, "hbar": 0.3, "n_points": 4000,
                 "N_list": [2, 3, 4], "ell_list": [2.5, 3.0, 3.5]}
  })");
}

namespace detail {

inline const char* type_name(const json& j) { return j.type_name(); }

// Overlays `user` on `base`; both must have the same shape.
inline void overlay(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ParameterError("config: '" + path + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ParameterError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    const json& v = it.value();
    if (slot.is_object()) {
      overlay(slot, v, key);
    } else if (slot.is_number_float()) {
      if (!v.is_number()) throw ParameterError("config: '" + key + "' must be a number");
      slot = v.get<double>();
    } else if (slot.is_number_integer()) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ParameterError("config: '" + key + "' must be an integer");
      slot = v;
    } else if (slot.is_string()) {
      if (!v.is_string()) throw ParameterError("config: '" + key + "' must be a string");
      slot = v;
    } else if (slot.is_boolean()) {
      if (!v.is_boolean()) throw ParameterError("config: '" + key + "' must be true or false");
      slot = v;
    } else if (slot.is_array()) {
      if (!v.is_array()) throw ParameterError("config: '" + key + "' must be an array");
      for (const auto& e : v)
        if (!e.is_number()) throw ParameterError("config: '" + key + "' must hold numbers");
      slot = v;
    } else {
      throw ParameterError("config: unsupported slot '" + key + "'");
    }
  }
}

}  // namespace detail

struct RunConfig {
  json doc = default_config();

  static RunConfig from_json(const json& user) {
    RunConfig c;
    detail::overlay(c.doc, user, "");
    return c;
  }

  static RunConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    json user;
    try {
      in >> user;
    } catch (const json::exception& e) {
      throw ParameterError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(user);
  }

  /// Applies "a.b=value"; value is parsed as JSON, else taken as a string.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("override must look like key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    json patch = value;
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
      parts.push_back(rest.substr(0, pos));
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    detail::overlay(doc, patch, "");
  }

  /// Digest of everything that determines file contents.
  std::string digest() const {
    json d = doc;
    d.erase("threads");
    d.erase("output_path");
    return config_digest(d);
  }

  std::uint64_t seed() const { return doc.at("seed").get<std::uint64_t>(); }
  int threads() const { return doc.at("threads").get<int>(); }
  std::string output_path() const { return doc.at("output_path").get<std::string>(); }

  ModelParams model() const {
    const json& m = doc.at("model");
    ModelParams p;
    p.n = m.at("N").get<int>();
    p.sigma = m.at("sigma").get<double>();
    p.lambda_d = m.at("lambda_D").get<double>();
    p.beta = m.at("beta").get<double>();
    p.eta = m.at("eta").get<double>();
    p.hbar = m.at("hbar").get<double>();
    p.validate();
    return p;
  }

  const json& block(const char* name) const { return doc.at(name); }
};

}  // namespace nmode
