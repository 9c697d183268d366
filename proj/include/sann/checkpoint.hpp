#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "sann/isd_net.hpp"

namespace sann {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary layout is described in docs/checkpoint_format.md.
void write_checkpoint(std::ostream& os, const MrnnParams& params);
MrnnParams read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const MrnnParams& params);
MrnnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace sann
