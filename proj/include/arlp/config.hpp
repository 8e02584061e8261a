#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "arlp/grid.hpp"
#include "arlp/synthetic.hpp"
#include "arlp/temporal.hpp"
#include "arlp/training.hpp"

// INI-style configuration shared by every command. Sections: [grid],
// [model], [train], [synthetic]. Unknown sections or keys are errors so
// typos fail loudly instead of silently running defaults.

namespace arlp {

struct FileConfig {
  GridSpec grid;
  ModelConfig model;
  TrainConfig train;
  SyntheticConfig synthetic;

  /// Canonical text of every setting, independent of the source file's
  /// formatting; feed of the config hash.
  std::string canonical_text() const;

  /// FNV-1a hash of canonical_text(); stored in checkpoints and echoed in
  /// reports so results stay traceable to their configuration.
  std::uint64_t hash() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

/// Parses a config file; missing keys keep their defaults. Throws
/// ConfigError on unknown sections/keys, bad values or out-of-domain
/// settings (grid and synthetic sections are validated).
FileConfig load_config(const std::string& path);

/// Defaults only, already validated.
FileConfig default_config();

}  // namespace arlp
