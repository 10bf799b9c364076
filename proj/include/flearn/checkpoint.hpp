#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flearn/autodiff.hpp"

namespace flearn {

/// Parameter checkpoint, binary little-endian. Layout:
///   magic "FLPC" | version byte 0x01 | u32 count |
///   per entry: u16 name length | name bytes | u8 ndim | u32 dims... |
///              float64 values (row-major)
/// Entries appear in parameter order.
void save_checkpoint(const std::filesystem::path& path, const std::vector<VarPtr>& params);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::filesystem::path& path);

/// Copies loaded values into the parameters, matching by position and
/// validating name and shape; throws std::runtime_error on any mismatch.
void apply_checkpoint(std::vector<VarPtr>& params,
                      const std::vector<std::pair<std::string, Tensor>>& loaded);

}  // namespace flearn
