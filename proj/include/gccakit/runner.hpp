#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gccakit/config.hpp"

namespace gccakit::cli {

struct CliOptions {
  std::string subcommand;  // synth | fit | evaluate | sweep | threshold
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  int threads = 0;  // 0 = auto
};

/// Executes one subcommand; throws ConfigError / IoError / NumericError on
/// failure, which the binary maps to exit codes 2 / 3 / 4.
void run(const CliOptions& options);

/// Recording round trip through a directory of matrix container files plus
/// a recording.txt manifest (the layout the synth subcommand writes).
void write_recording(const Recording& rec, const std::filesystem::path& dir);
Recording read_recording(const std::filesystem::path& dir);

}  // namespace gccakit::cli
