#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace regimekit::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Directory consulted for inputs that do not exist as given (tests point it at fixtures/).
inline constexpr const char* kFixtureEnv = "REGIMEKIT_FIXTURE_DIR";

/// Runs one subcommand; `args` excludes the program name.
/// Returns 0 on success, 1 on an analysis error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::filesystem::path& file);

}  // namespace regimekit::cli
