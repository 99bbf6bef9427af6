#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dvgait/numgrad/module.hpp"

namespace dvgait::numgrad {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "DVGW", u32 version, then per tensor: u32 name length, name bytes,
/// u32 rank, u32 extents, little-endian f32 values.
void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const Module& module);
/// Every stored name must match a module tensor of the same shape, and the
/// module must have no tensor missing from the file.
void load_checkpoint(const std::filesystem::path& path, Module& module);

}  // namespace dvgait::numgrad
