#pragma once

#include <optional>
#include <string>

#include "sddpm/config.hpp"

namespace sddpm {

// CLI entry points. Errors surface as ConfigError / DataError /
// VerificationError; the driver maps them to exit codes.
void cmd_train(const RunConfig& cfg, const std::optional<std::string>& resume_checkpoint);
void cmd_sample(const RunConfig& cfg, const std::string& checkpoint_path);
void cmd_profile(const RunConfig& cfg, const std::string& checkpoint_path);

// Returns true when the finite-difference check passes.
bool cmd_gradcheck(uint64_t seed);

}  // namespace sddpm
