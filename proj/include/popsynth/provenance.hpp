#pragma once

#include <map>
#include <string>

#include "json.hpp"

namespace popsynth {

inline constexpr const char* kToolName = "popsynth";
inline constexpr const char* kToolVersion = "0.3.0";

/// Header attached to every serialized artifact: what produced it, from which
/// inputs, under which resolved configuration.
struct Provenance {
  std::string command;
  std::map<std::string, std::string> input_digests;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = command;
    j["inputs"] = input_digests;
    j["config"] = config;
    return j;
  }
};

}  // namespace popsynth
