#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hdpo/optimizer.hpp"
#include "hdpo/policy.hpp"

namespace hdpo::checkpoint {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  std::int64_t step = 0;
  std::uint64_t config_hash = 0;  // full-config provenance
  std::uint64_t resume_hash = 0;  // config minus total-steps/out-dir
  policy::PolicySnapshot policy;
  policy::AdamState adam;
  bool has_frozen_teacher = false;
  policy::PolicySnapshot frozen_teacher;
  std::uint64_t rng_cursor = 0;  // step streams are derived from; == step
  // carried so a resumed run's best-so-far columns continue exactly
  std::map<std::string, double> best_pass_at_k;
};

// Exact round-trip: every double survives serialization bit-for-bit.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hdpo::checkpoint
