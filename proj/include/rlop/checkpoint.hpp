#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "rlop/diffnet.hpp"

namespace rlop::nn {

// Named networks, optimizer states and string metadata. The text layout is
// documented in docs/checkpoint-format.md; doubles are written as hex floats
// so a save/load cycle is bit-exact.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, ResNet> networks;
  std::map<std::string, AdamState> optimizers;
};

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlop::nn
