#pragma once

// TOML form of a model:
//
//   [types.1]
//   own  = { kind = "geometric", mean = 1.0 }   # eta_{1,1}
//   next = { kind = "poisson", mean = 1.0 }     # eta_{1,2}
//   to_4 = { kind = "bernoulli", p = 0.1 }      # eta_{1,4}
//
//   [types.2]
//   own = { kind = "geometric", mean = 1.0 }
//
// Component keys: kind = poisson | geometric (mean), bernoulli (p),
// binomial (trials, p), deterministic (k). Anything else is rejected.

#include "gwlab/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

#include <toml.hpp>

namespace gwlab {

/// Builds a model from the table holding `types` (a whole model file, or an
/// inline [model] table of an experiment config). `where` prefixes error
/// messages.
ModelSpec model_from_toml(const toml::table& tbl, std::string_view where = "model");

ModelSpec parse_model_toml(std::string_view text, std::string_view source = "model");
ModelSpec load_model_toml(const std::filesystem::path& path);

/// Round-trips through parse_model_toml.
std::string model_to_toml(const ModelSpec& spec);

ComponentLaw component_from_toml(const toml::table& tbl, std::string_view where);

}  // namespace gwlab
