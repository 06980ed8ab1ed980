#pragma once

// Simulation study configuration read from TOML. See README for the schema.

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "flrpoi/selector.hpp"
#include "flrpoi/simlab.hpp"

namespace flrpoi {

struct StudyConfig {
  DgpSpec dgp;
  std::vector<Variant> estimators{Variant::PesEs};
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  SelectorConfig selector;
};

// Throws ConfigError for unknown keys, wrong types or invalid values, and
// ParseError for malformed TOML.
StudyConfig parse_study_config(std::string_view toml_text);
StudyConfig load_study_config(const std::filesystem::path& path);

}  // namespace flrpoi
