#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>

#include "egosearch/learner.hpp"

namespace egosearch {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout: a magic line, one line of JSON (configs plus tensor names and
// shapes), then the tensors as little-endian float32 in header order.
void save_checkpoint(const std::filesystem::path& path, const SacAgent& agent);
std::unique_ptr<SacAgent> load_checkpoint(const std::filesystem::path& path);

}  // namespace egosearch
